//! `key = value` config files.
//!
//! One setting per line; `#` starts a comment. Keys are the long flag names,
//! with `-` and `_` interchangeable. A flag given on the command line wins
//! over the file, and the file wins over built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "jobs",
    "seed",
    "k",
    "method",
    "variant",
    "restarts",
    "max-iters",
    "conf-threshold",
    "attention",
    "bbox-refine",
    "refine-margin",
    "limbs",
    "border",
    "feature-side",
    "epochs",
    "batch-size",
    "learning-rate",
    "plateau-patience",
    "per-class",
    "frames",
    "classes",
    "outlier-rate",
    "occlusion-rate",
    "box-clip-rate",
    "seeds",
    "variants",
    "methods",
];

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    origin: String,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl ConfigFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("{origin}:{}: expected `key = value`", i + 1);
            };
            let key = normalize(k);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!("{origin}:{}: unknown key `{key}`", i + 1);
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                bail!("{origin}:{}: duplicate key `{key}`", i + 1);
            }
        }
        Ok(ConfigFile {
            values,
            origin: origin.to_string(),
        })
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("{}: `{key} = {v}`: {e}", self.origin)),
        }
    }

    /// The flag if given, else the file's value.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn pick_or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }
}

/// An on/off setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Switch(pub bool);

impl FromStr for Switch {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "on" | "true" | "yes" | "1" => Ok(Switch(true)),
            "off" | "false" | "no" | "0" => Ok(Switch(false)),
            other => Err(format!("expected on or off, found `{other}`")),
        }
    }
}

/// Comma-separated list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<T>().map_err(|e| e.to_string()))
            .collect::<std::result::Result<Vec<_>, _>>()
            .and_then(|v| {
                if v.is_empty() {
                    Err("empty list".to_string())
                } else {
                    Ok(List(v))
                }
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_file_beats_default() {
        let f = ConfigFile::parse("k = 6\nmax_iters=50 # comment\n", "t").unwrap();
        assert_eq!(f.pick_or(Some(3usize), "k", 4).unwrap(), 3);
        assert_eq!(f.pick_or(None::<usize>, "k", 4).unwrap(), 6);
        assert_eq!(f.pick_or(None::<usize>, "max-iters", 100).unwrap(), 50);
        assert_eq!(f.pick_or(None::<usize>, "restarts", 5).unwrap(), 5);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(ConfigFile::parse("colour = red\n", "t").is_err());
        assert!(ConfigFile::parse("k 4\n", "t").is_err());
        assert!(ConfigFile::parse("k = 4\nk = 5\n", "t").is_err());
        let f = ConfigFile::parse("k = four\n", "t").unwrap();
        assert!(f.get::<usize>("k").is_err());
    }

    #[test]
    fn switches_and_lists() {
        assert_eq!("off".parse::<Switch>().unwrap(), Switch(false));
        assert!("maybe".parse::<Switch>().is_err());
        assert_eq!("1, 2,3".parse::<List<u32>>().unwrap(), List(vec![1, 2, 3]));
        assert!("".parse::<List<u32>>().is_err());
    }
}
