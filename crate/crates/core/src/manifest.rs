//! Line-oriented record files.
//!
//! `DatasetManifest` binds grid images to labels and splits, one grid per
//! line:
//!
//! ```text
//! grid_relpath person_id label split k medoid_frames
//! grids/walk_003.png walk_003 walk train 4 2,11,19,30
//! ```
//!
//! `CorpusIndex` lists the pose-track files of a generated corpus:
//!
//! ```text
//! tracks_relpath person_id label split
//! tracks/walk_003.txt walk_003 walk train
//! ```
//!
//! Fields are whitespace separated, so ids, labels and paths must not contain
//! whitespace. Lines starting with `#` and blank lines are ignored. Paths are
//! relative to the directory holding the record file.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{GrarError, Result};

pub const MANIFEST_HEADER: &str = "# grid_relpath person_id label split k medoid_frames";
pub const CORPUS_HEADER: &str = "# tracks_relpath person_id label split";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = GrarError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(GrarError::Config(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub grid_relpath: PathBuf,
    pub person_id: String,
    pub label: String,
    pub split: Split,
    pub k: usize,
    pub medoid_frames: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub tracks_relpath: PathBuf,
    pub person_id: String,
    pub label: String,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorpusIndex {
    pub entries: Vec<CorpusEntry>,
}

fn parse_err(path: &Path, line: usize, field: &str, message: impl Into<String>) -> GrarError {
    GrarError::Parse {
        path: path.to_path_buf(),
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn check_token(kind: &str, s: &str) -> Result<()> {
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return Err(GrarError::Config(format!(
            "{kind} '{s}' must be non-empty without whitespace"
        )));
    }
    Ok(())
}

/// Non-comment lines as `(line number, fields)`.
fn records(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let text = fs::read_to_string(path).map_err(|e| GrarError::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| (i + 1, l.split_whitespace().map(str::to_string).collect()))
        .collect())
}

fn expect_fields(path: &Path, line: usize, fields: &[String], n: usize) -> Result<()> {
    if fields.len() != n {
        return Err(parse_err(
            path,
            line,
            "record",
            format!("expected {n} fields, found {}", fields.len()),
        ));
    }
    Ok(())
}

impl ManifestEntry {
    pub fn to_line(&self) -> String {
        let frames: Vec<String> = self.medoid_frames.iter().map(u32::to_string).collect();
        format!(
            "{} {} {} {} {} {}",
            self.grid_relpath.display(),
            self.person_id,
            self.label,
            self.split,
            self.k,
            frames.join(",")
        )
    }
}

impl DatasetManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (line, f) in records(path)? {
            expect_fields(path, line, &f, 6)?;
            let split = f[3]
                .parse()
                .map_err(|_| parse_err(path, line, "split", format!("'{}'", f[3])))?;
            let k: usize = f[4]
                .parse()
                .map_err(|_| parse_err(path, line, "k", format!("'{}'", f[4])))?;
            let medoid_frames = f[5]
                .split(',')
                .map(|s| s.parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| parse_err(path, line, "medoid_frames", format!("'{}'", f[5])))?;
            if medoid_frames.len() != k {
                return Err(parse_err(
                    path,
                    line,
                    "medoid_frames",
                    format!("{} frames listed for k = {k}", medoid_frames.len()),
                ));
            }
            entries.push(ManifestEntry {
                grid_relpath: PathBuf::from(&f[0]),
                person_id: f[1].clone(),
                label: f[2].clone(),
                split,
                k,
                medoid_frames,
            });
        }
        Ok(DatasetManifest { entries })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for e in &self.entries {
            check_token("person id", &e.person_id)?;
            check_token("label", &e.label)?;
            check_token("path", &e.grid_relpath.display().to_string())?;
            out.push_str(&e.to_line());
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| GrarError::io(path, e))
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }
}

impl CorpusIndex {
    pub fn read(path: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (line, f) in records(path)? {
            expect_fields(path, line, &f, 4)?;
            let split = f[3]
                .parse()
                .map_err(|_| parse_err(path, line, "split", format!("'{}'", f[3])))?;
            entries.push(CorpusEntry {
                tracks_relpath: PathBuf::from(&f[0]),
                person_id: f[1].clone(),
                label: f[2].clone(),
                split,
            });
        }
        Ok(CorpusIndex { entries })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::from(CORPUS_HEADER);
        out.push('\n');
        for e in &self.entries {
            check_token("person id", &e.person_id)?;
            check_token("label", &e.label)?;
            out.push_str(&format!(
                "{} {} {} {}\n",
                e.tracks_relpath.display(),
                e.person_id,
                e.label,
                e.split
            ));
        }
        fs::write(path, out).map_err(|e| GrarError::io(path, e))
    }

    pub fn get(&self, person_id: &str) -> Option<&CorpusEntry> {
        self.entries.iter().find(|e| e.person_id == person_id)
    }
}
