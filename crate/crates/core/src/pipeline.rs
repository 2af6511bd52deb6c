//! End-to-end wiring: key-pose selection, grid construction, training and
//! evaluation over labelled tracks.
//!
//! Track-level work runs on a rayon pool of `jobs` threads. Results are
//! collected in input order and every random choice is seeded per track,
//! so output does not depend on `jobs`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::classifier::{
    featurize, predict_features, train, FeatureVector, LinearSoftmaxModel, TrainConfig, TrainHistory, DEFAULT_SIDE,
};
use crate::cluster::{random_key_poses, select_key_poses, ClusterConfig, KeyPoseSet, Method};
use crate::error::{GrarError, Result};
use crate::grid::{build_grid_from_frames, CellContent, GridConfig, GridImage, DEFAULT_BORDER_PX, DEFAULT_MAX_CANVAS};
use crate::manifest::Split;
use crate::pose::{Track, DEFAULT_CONF_THRESHOLD};
use crate::refine::{refine_track, RefineConfig, DEFAULT_MARGIN};

/// Feature-selection variants compared in the ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// Random frames, raw crops.
    Random,
    /// Clustered key poses, skeleton on black.
    KPose,
    /// Clustered key poses, raw crops.
    KRgb,
    /// As `KRgb` with refined boxes.
    KRgbEb,
    /// As `KRgbEb` with the skeleton drawn on the crops.
    KRgbEbPa,
}

pub const ALL_VARIANTS: [Variant; 5] = [
    Variant::Random,
    Variant::KPose,
    Variant::KRgb,
    Variant::KRgbEb,
    Variant::KRgbEbPa,
];

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Random => "random",
            Variant::KPose => "k-pose",
            Variant::KRgb => "k-rgb",
            Variant::KRgbEb => "k-rgb-eb",
            Variant::KRgbEbPa => "k-rgb-eb-pa",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = GrarError;

    fn from_str(s: &str) -> Result<Self> {
        ALL_VARIANTS
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| GrarError::Config(format!("unknown variant '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Cluster,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub k: usize,
    pub method: Method,
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    pub conf_threshold: f64,
    pub selection: Selection,
    pub bbox_refine: bool,
    pub refine_margin: f64,
    pub content: CellContent,
    pub draw_limbs: bool,
    pub border_px: u32,
    pub max_canvas: (u32, u32),
    pub feature_side: usize,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: 4,
            method: Method::Pam,
            seed: 0,
            restarts: 5,
            max_iters: 100,
            conf_threshold: DEFAULT_CONF_THRESHOLD,
            selection: Selection::Cluster,
            bbox_refine: true,
            refine_margin: DEFAULT_MARGIN,
            content: CellContent::RgbAttention,
            draw_limbs: true,
            border_px: DEFAULT_BORDER_PX,
            max_canvas: DEFAULT_MAX_CANVAS,
            feature_side: DEFAULT_SIDE,
            train: TrainConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Switch selection, refinement and cell content to those of `v`.
    pub fn with_variant(mut self, v: Variant) -> Self {
        let (selection, refine, content) = match v {
            Variant::Random => (Selection::Random, false, CellContent::Rgb),
            Variant::KPose => (Selection::Cluster, false, CellContent::PoseOnly),
            Variant::KRgb => (Selection::Cluster, false, CellContent::Rgb),
            Variant::KRgbEb => (Selection::Cluster, true, CellContent::Rgb),
            Variant::KRgbEbPa => (Selection::Cluster, true, CellContent::RgbAttention),
        };
        self.selection = selection;
        self.bbox_refine = refine;
        self.content = content;
        self
    }

    /// Seed everything from one run seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.train.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(GrarError::Config("k must be at least 1".into()));
        }
        if self.k > crate::grid::MAX_CELLS {
            return Err(GrarError::Config(format!(
                "k = {} exceeds {} cells",
                self.k,
                crate::grid::MAX_CELLS
            )));
        }
        if self.border_px == 0 {
            return Err(GrarError::Config("border must be at least 1 px".into()));
        }
        if self.train.batch_size == 0 {
            return Err(GrarError::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn cluster_config(&self) -> ClusterConfig {
        ClusterConfig {
            k: self.k,
            method: self.method,
            seed: self.seed,
            restarts: self.restarts,
            max_iters: self.max_iters,
            conf_threshold: self.conf_threshold,
        }
    }

    pub fn grid_config(&self) -> GridConfig {
        GridConfig {
            border_px: self.border_px,
            content: self.content,
            draw_limbs: self.draw_limbs,
            conf_threshold: self.conf_threshold,
            max_canvas: self.max_canvas,
        }
    }

    fn refine_config(&self) -> RefineConfig {
        RefineConfig {
            conf_threshold: self.conf_threshold,
            margin: self.refine_margin,
        }
    }
}

/// A track with its label and split.
#[derive(Debug, Clone)]
pub struct LabeledTrack {
    pub track: Track,
    pub label: String,
    pub split: Split,
}

/// Run `f` on a pool of `jobs` threads (0 means rayon's default).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| GrarError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// The track as the rest of the pipeline sees it: refined if configured.
pub fn prepare_track(track: &Track, cfg: &PipelineConfig) -> Track {
    if cfg.bbox_refine {
        refine_track(track, cfg.refine_config())
    } else {
        track.clone()
    }
}

pub fn key_poses(track: &Track, cfg: &PipelineConfig) -> Result<KeyPoseSet> {
    match cfg.selection {
        Selection::Cluster => select_key_poses(&track.poses, &cfg.cluster_config()),
        Selection::Random => random_key_poses(&track.poses, cfg.k, cfg.seed, cfg.conf_threshold),
    }
}

/// Grid of `frames` from an unprepared track.
pub fn grid_for_frames(track: &Track, frames: &[u32], cfg: &PipelineConfig) -> Result<GridImage> {
    let t = prepare_track(track, cfg);
    build_grid_from_frames(&t.poses, &t.crops, frames, &cfg.grid_config())
}

/// Select key poses and compose the grid of one track.
pub fn grid_for_track(track: &Track, cfg: &PipelineConfig) -> Result<(KeyPoseSet, GridImage)> {
    let t = prepare_track(track, cfg);
    let set = key_poses(&t, cfg)?;
    let grid = build_grid_from_frames(&t.poses, &t.crops, &set.medoid_frames, &cfg.grid_config())?;
    Ok((set, grid))
}

/// Grids of all tracks, in input order.
pub fn build_grids(tracks: &[LabeledTrack], cfg: &PipelineConfig, jobs: usize) -> Result<Vec<(KeyPoseSet, GridImage)>> {
    use rayon::prelude::*;
    cfg.validate()?;
    with_jobs(jobs, || {
        tracks
            .par_iter()
            .map(|t| {
                let (set, mut grid) = grid_for_track(&t.track, cfg)?;
                grid.label = Some(t.label.clone());
                Ok((set, grid))
            })
            .collect::<Result<Vec<_>>>()
    })?
}

/// Key-pose sets of all tracks, in input order.
pub fn select_all(tracks: &[LabeledTrack], cfg: &PipelineConfig, jobs: usize) -> Result<Vec<KeyPoseSet>> {
    use rayon::prelude::*;
    cfg.validate()?;
    with_jobs(jobs, || {
        tracks
            .par_iter()
            .map(|t| key_poses(&prepare_track(&t.track, cfg), cfg))
            .collect::<Result<Vec<_>>>()
    })?
}

/// Labelled grids of previously selected frames, one list per track.
pub fn build_grids_for_frames(
    tracks: &[LabeledTrack],
    frames: &[Vec<u32>],
    cfg: &PipelineConfig,
    jobs: usize,
) -> Result<Vec<GridImage>> {
    use rayon::prelude::*;
    cfg.validate()?;
    if frames.len() != tracks.len() {
        return Err(GrarError::Config(format!(
            "{} frame lists for {} tracks",
            frames.len(),
            tracks.len()
        )));
    }
    with_jobs(jobs, || {
        tracks
            .par_iter()
            .zip(frames)
            .map(|(t, f)| {
                let mut grid = grid_for_frames(&t.track, f, cfg)?;
                grid.label = Some(t.label.clone());
                Ok(grid)
            })
            .collect::<Result<Vec<_>>>()
    })?
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub classes: Vec<String>,
    pub total: usize,
    pub correct: usize,
    /// `confusion[(true, predicted)]`, zero entries included.
    pub confusion: BTreeMap<(String, String), usize>,
}

impl EvalReport {
    pub fn new(classes: &[String], pairs: &[(String, String)]) -> Self {
        let mut confusion = BTreeMap::new();
        for t in classes {
            for p in classes {
                confusion.insert((t.clone(), p.clone()), 0);
            }
        }
        for (t, p) in pairs {
            *confusion.entry((t.clone(), p.clone())).or_insert(0) += 1;
        }
        EvalReport {
            classes: classes.to_vec(),
            total: pairs.len(),
            correct: pairs.iter().filter(|(t, p)| t == p).count(),
            confusion,
        }
    }

    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    /// `(correct, count)` for true label `c`.
    pub fn class_counts(&self, c: &str) -> (usize, usize) {
        let count = self.confusion.iter().filter(|((t, _), _)| t == c).map(|(_, n)| n).sum();
        let correct = self
            .confusion
            .get(&(c.to_string(), c.to_string()))
            .copied()
            .unwrap_or(0);
        (correct, count)
    }

    /// Line-oriented report:
    ///
    /// ```text
    /// accuracy 0.920000
    /// total 50
    /// correct 46
    /// per_class <label> <accuracy> <correct> <count>
    /// confusion <true> <predicted> <count>
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "accuracy {:.6}\ntotal {}\ncorrect {}\n",
            self.accuracy(),
            self.total,
            self.correct
        );
        for c in &self.classes {
            let (ok, n) = self.class_counts(c);
            let acc = if n == 0 { 0.0 } else { ok as f64 / n as f64 };
            s.push_str(&format!("per_class {c} {acc:.6} {ok} {n}\n"));
        }
        for ((t, p), n) in &self.confusion {
            s.push_str(&format!("confusion {t} {p} {n}\n"));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |l: &str| GrarError::Config(format!("malformed report line '{l}'"));
        let mut classes = Vec::new();
        let mut total = None;
        let mut correct = None;
        let mut confusion = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.as_slice() {
                ["accuracy", _] => {}
                ["total", n] => total = Some(n.parse().map_err(|_| bad(line))?),
                ["correct", n] => correct = Some(n.parse().map_err(|_| bad(line))?),
                ["per_class", c, _, _, _] => classes.push(c.to_string()),
                ["confusion", t, p, n] => {
                    confusion.insert((t.to_string(), p.to_string()), n.parse().map_err(|_| bad(line))?);
                }
                _ => return Err(bad(line)),
            }
        }
        Ok(EvalReport {
            classes,
            total: total.ok_or_else(|| bad("total"))?,
            correct: correct.ok_or_else(|| bad("correct"))?,
            confusion,
        })
    }
}

pub fn evaluate(model: &LinearSoftmaxModel, samples: &[(FeatureVector, String)]) -> Result<EvalReport> {
    let pairs = samples
        .iter()
        .map(|(x, label)| Ok((label.clone(), predict_features(model, x)?.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::new(&model.classes, &pairs))
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: LinearSoftmaxModel,
    pub history: TrainHistory,
    pub report: EvalReport,
    pub grids: Vec<GridImage>,
}

/// Featurize labelled grids.
pub fn features(grids: &[GridImage], side: usize, jobs: usize) -> Result<Vec<(FeatureVector, String)>> {
    use rayon::prelude::*;
    with_jobs(jobs, || {
        grids
            .par_iter()
            .map(|g| {
                let label = g
                    .label
                    .clone()
                    .ok_or_else(|| GrarError::Config(format!("grid of {} has no label", g.person_id)))?;
                Ok((featurize(g, side)?, label))
            })
            .collect::<Result<Vec<_>>>()
    })?
}

/// Grids for every track, train on the train split, evaluate on the test split.
pub fn run_experiment(tracks: &[LabeledTrack], cfg: &PipelineConfig, jobs: usize) -> Result<Experiment> {
    let grids: Vec<GridImage> = build_grids(tracks, cfg, jobs)?.into_iter().map(|(_, g)| g).collect();
    let feats = features(&grids, cfg.feature_side, jobs)?;
    let (mut train_set, mut test_set) = (Vec::new(), Vec::new());
    for (t, f) in tracks.iter().zip(feats) {
        match t.split {
            Split::Train => train_set.push(f),
            Split::Test => test_set.push(f),
        }
    }
    if test_set.is_empty() {
        return Err(GrarError::Empty("test split"));
    }
    let (model, history) = train(&train_set, &cfg.train)?;
    let report = evaluate(&model, &test_set)?;
    Ok(Experiment {
        model,
        history,
        report,
        grids,
    })
}
