mod cli;
mod commands;
mod config;
mod settings;

use anyhow::Result;
use clap::Parser;
use grar::cluster::Method;

use crate::cli::{Cli, Command};
use crate::commands::AblationPlan;
use crate::config::{ConfigFile, List};

fn main() -> Result<()> {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(p) => ConfigFile::read(p)?,
        None => ConfigFile::default(),
    };
    let jobs = file.pick_or(cli.jobs, "jobs", 0)?;
    match cli.command {
        Command::Synth { out, seed, corpus } => {
            let seed = file.pick_or(seed, "seed", 0)?;
            commands::synth(&corpus.resolve(&file, seed)?, &out, jobs)
        }
        Command::Ingest {
            corpus,
            tracks,
            label,
            split,
        } => match (tracks, label, split) {
            (Some(t), Some(l), Some(s)) => commands::ingest_add(&corpus, &t, &l, s),
            _ => commands::ingest_check(&corpus),
        },
        Command::Cluster { corpus, out, pipeline } => commands::cluster(&corpus, &out, &pipeline.resolve(&file)?, jobs),
        Command::Grid {
            corpus,
            keyposes,
            out,
            pipeline,
        } => commands::grid(&corpus, keyposes.as_deref(), &out, &pipeline.resolve(&file)?, jobs),
        Command::Train {
            manifest,
            out,
            pipeline,
        } => commands::train_cmd(&manifest, &out, &pipeline.resolve(&file)?, jobs),
        Command::Eval {
            model,
            manifest,
            split,
            out,
        } => commands::eval(&model, &manifest, split, out.as_deref(), jobs),
        Command::Run { corpus, out, pipeline } => commands::run(&corpus, &out, &pipeline.resolve(&file)?, jobs),
        Command::Ablate {
            corpus,
            variants,
            methods,
            seeds,
            out,
            corpus_spec,
            pipeline,
        } => {
            let base = pipeline.resolve(&file)?;
            let plan = AblationPlan {
                corpus,
                spec: corpus_spec.resolve(&file, base.seed)?,
                variants: file
                    .pick_or(variants, "variants", List(AblationPlan::default_variants()))?
                    .0,
                methods: file.pick_or(methods, "methods", List(vec![Method::Pam]))?.0,
                first_seed: base.seed,
                seeds: file.pick_or(seeds, "seeds", 5)?,
            };
            commands::ablate(&plan, &base, out.as_deref(), jobs)
        }
    }
}
