use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use grar::cluster::Method;
use grar::manifest::Split;
use grar::pipeline::Variant;
use grar::synth::Action;

use crate::config::{List, Switch};

/// Group activity recognition from key-pose grids.
#[derive(Debug, Parser)]
#[command(name = "grar", version)]
pub struct Cli {
    /// Settings file of `key = value` lines; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for track-level work (0 = all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic pose-track corpus with crops and a corpus index.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        corpus: SynthArgs,
    },
    /// Validate pose-track files, or add one to a corpus index.
    Ingest {
        /// Corpus index to check, or to extend with `--tracks`.
        #[arg(long)]
        corpus: PathBuf,
        /// Track file to register; must live under the index's directory.
        #[arg(long, requires_all = ["label", "split"])]
        tracks: Option<PathBuf>,
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        split: Option<Split>,
    },
    /// Select key poses of every track and write one record per track.
    Cluster {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Compose grid images and write them with a dataset manifest.
    Grid {
        #[arg(long)]
        corpus: PathBuf,
        /// Key-pose records from `cluster`; selected afresh when absent.
        #[arg(long)]
        keyposes: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Train the classifier on the train split of a manifest.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Evaluate a checkpoint on one split of a manifest.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        /// Report file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster, grid, train and evaluate in one process.
    Run {
        #[arg(long)]
        corpus: PathBuf,
        /// Receives `model.json` and `report.txt`.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Accuracy of each variant and clustering method over several seeds.
    Ablate {
        /// Fixed corpus; when absent a corpus is synthesized per seed.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        variants: Option<List<Variant>>,
        #[arg(long)]
        methods: Option<List<Method>>,
        /// Number of consecutive seeds, starting at `--seed`.
        #[arg(long)]
        seeds: Option<u64>,
        /// Table file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        corpus_spec: SynthArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

#[derive(Debug, Args, Default)]
pub struct SynthArgs {
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    /// Comma-separated actions (idle, walk, run, jump, wave).
    #[arg(long)]
    pub classes: Option<List<Action>>,
    #[arg(long)]
    pub outlier_rate: Option<f64>,
    #[arg(long)]
    pub occlusion_rate: Option<f64>,
    #[arg(long)]
    pub box_clip_rate: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct PipelineArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Key poses per track.
    #[arg(short, long)]
    pub k: Option<usize>,
    /// pam, kmeans or gmm.
    #[arg(long)]
    pub method: Option<Method>,
    /// random, k-pose, k-rgb, k-rgb-eb or k-rgb-eb-pa; the switches below override it.
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub conf_threshold: Option<f64>,
    /// Draw the skeleton over each crop (on|off).
    #[arg(long)]
    pub attention: Option<Switch>,
    /// Shrink boxes to the confident joints (on|off).
    #[arg(long)]
    pub bbox_refine: Option<Switch>,
    #[arg(long)]
    pub refine_margin: Option<f64>,
    /// Draw limbs as well as joints (on|off).
    #[arg(long)]
    pub limbs: Option<Switch>,
    /// Grid border in pixels.
    #[arg(long)]
    pub border: Option<u32>,
    /// Side of the square feature image.
    #[arg(long)]
    pub feature_side: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub plateau_patience: Option<usize>,
}
