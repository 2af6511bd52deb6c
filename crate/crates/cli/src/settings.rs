use anyhow::Result;
use grar::grid::CellContent;
use grar::pipeline::PipelineConfig;
use grar::synth::{CorpusSpec, CorruptionSpec, ALL_ACTIONS};

use crate::cli::{PipelineArgs, SynthArgs};
use crate::config::{ConfigFile, List, Switch};

impl PipelineArgs {
    pub fn resolve(&self, file: &ConfigFile) -> Result<PipelineConfig> {
        let d = PipelineConfig::default();
        let mut cfg = match file.pick(self.variant, "variant")? {
            Some(v) => d.clone().with_variant(v),
            None => d.clone(),
        };
        cfg.k = file.pick_or(self.k, "k", d.k)?;
        cfg.method = file.pick_or(self.method, "method", d.method)?;
        cfg.restarts = file.pick_or(self.restarts, "restarts", d.restarts)?;
        cfg.max_iters = file.pick_or(self.max_iters, "max-iters", d.max_iters)?;
        cfg.conf_threshold = file.pick_or(self.conf_threshold, "conf-threshold", d.conf_threshold)?;
        if let Some(Switch(on)) = file.pick(self.attention, "attention")? {
            cfg.content = if on {
                CellContent::RgbAttention
            } else {
                CellContent::Rgb
            };
        }
        if let Some(Switch(on)) = file.pick(self.bbox_refine, "bbox-refine")? {
            cfg.bbox_refine = on;
        }
        cfg.refine_margin = file.pick_or(self.refine_margin, "refine-margin", d.refine_margin)?;
        cfg.draw_limbs = file.pick_or(self.limbs, "limbs", Switch(d.draw_limbs))?.0;
        cfg.border_px = file.pick_or(self.border, "border", d.border_px)?;
        cfg.feature_side = file.pick_or(self.feature_side, "feature-side", d.feature_side)?;
        cfg.train.epochs = file.pick_or(self.epochs, "epochs", d.train.epochs)?;
        cfg.train.batch_size = file.pick_or(self.batch_size, "batch-size", d.train.batch_size)?;
        cfg.train.learning_rate = file.pick_or(self.learning_rate, "learning-rate", d.train.learning_rate)?;
        cfg.train.plateau_patience =
            file.pick_or(self.plateau_patience, "plateau-patience", d.train.plateau_patience)?;
        let seed = file.pick_or(self.seed, "seed", d.seed)?;
        let cfg = cfg.with_seed(seed);
        cfg.validate()?;
        Ok(cfg)
    }
}

impl SynthArgs {
    /// Corpus spec with corpus and corruption seeds both set to `seed`.
    pub fn resolve(&self, file: &ConfigFile, seed: u64) -> Result<CorpusSpec> {
        let d = CorpusSpec::default();
        let corruption = CorruptionSpec {
            outlier_rate: file.pick_or(self.outlier_rate, "outlier-rate", 0.0)?,
            occlusion_rate: file.pick_or(self.occlusion_rate, "occlusion-rate", 0.0)?,
            box_clip_rate: file.pick_or(self.box_clip_rate, "box-clip-rate", 0.0)?,
            seed,
        };
        corruption.validate()?;
        Ok(CorpusSpec {
            classes: file
                .pick_or(self.classes.clone(), "classes", List(ALL_ACTIONS.to_vec()))?
                .0,
            per_class: file.pick_or(self.per_class, "per-class", d.per_class)?,
            frames: file.pick_or(self.frames, "frames", d.frames)?,
            corruption,
            seed,
        })
    }
}
