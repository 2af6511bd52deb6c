use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use grar::classifier::{train, LinearSoftmaxModel};
use grar::cluster::{KeyPoseRecord, Method};
use grar::grid::GridImage;
use grar::manifest::{CorpusEntry, CorpusIndex, DatasetManifest, ManifestEntry, Split};
use grar::pipeline::{
    build_grids_for_frames, evaluate, features, run_experiment, select_all, with_jobs, LabeledTrack, PipelineConfig,
    Variant, ALL_VARIANTS,
};
use grar::pose::{load_tracks, load_tracks_with_options, validate_sequence, LoadOptions, Track};
use grar::synth::{generate_corpus, generate_corpus_tracks, CorpusSpec};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const MODEL_FILE: &str = "model.json";
pub const REPORT_FILE: &str = "report.txt";
const KEYPOSE_HEADER: &str = "# person_id k medoid_frames total_cost fallback";

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Tracks listed in a corpus index, in index order.
pub fn load_corpus(index_path: &Path) -> Result<Vec<LabeledTrack>> {
    let index = CorpusIndex::read(index_path)?;
    ensure!(
        !index.entries.is_empty(),
        "{}: corpus index lists no tracks",
        index_path.display()
    );
    let base = base_dir(index_path);
    let mut files: HashMap<PathBuf, Vec<Track>> = HashMap::new();
    let mut out = Vec::with_capacity(index.entries.len());
    for e in &index.entries {
        let path = base.join(&e.tracks_relpath);
        if !files.contains_key(&path) {
            let tracks = load_tracks(&path)?;
            files.insert(path.clone(), tracks);
        }
        let track = files[&path]
            .iter()
            .find(|t| t.poses.person_id == e.person_id)
            .with_context(|| format!("{} has no track for `{}`", path.display(), e.person_id))?;
        out.push(LabeledTrack {
            track: track.clone(),
            label: e.label.clone(),
            split: e.split,
        });
    }
    Ok(out)
}

pub fn synth(spec: &CorpusSpec, out: &Path, jobs: usize) -> Result<()> {
    let index = with_jobs(jobs, || generate_corpus(spec, out))??;
    let train = index.entries.iter().filter(|e| e.split == Split::Train).count();
    eprintln!(
        "wrote {} tracks ({train} train, {} test) to {}",
        index.entries.len(),
        index.entries.len() - train,
        out.display()
    );
    Ok(())
}

/// Check every track of an index loads, reporting warnings per track.
pub fn ingest_check(index_path: &Path) -> Result<()> {
    let tracks = load_corpus(index_path)?;
    let mut frames = 0;
    for t in &tracks {
        let warnings = validate_sequence(&t.track.poses);
        frames += t.track.poses.len();
        println!(
            "{} {} {} frames {} warnings {}",
            t.track.poses.person_id,
            t.label,
            t.split,
            t.track.poses.len(),
            warnings.len()
        );
        for w in warnings {
            eprintln!("warning: {}: {w:?}", t.track.poses.person_id);
        }
    }
    eprintln!("{} tracks, {frames} frames", tracks.len());
    Ok(())
}

/// Register every person in `tracks` under `label` and `split`.
pub fn ingest_add(index_path: &Path, tracks: &Path, label: &str, split: Split) -> Result<()> {
    let mut index = if index_path.exists() {
        CorpusIndex::read(index_path)?
    } else {
        CorpusIndex::default()
    };
    let base = base_dir(index_path);
    let base = if base.as_os_str().is_empty() {
        PathBuf::from(".")
    } else {
        base
    };
    let base_abs = base
        .canonicalize()
        .with_context(|| format!("resolving {}", base.display()))?;
    let file_abs = tracks
        .canonicalize()
        .with_context(|| format!("resolving {}", tracks.display()))?;
    let rel = file_abs
        .strip_prefix(&base_abs)
        .with_context(|| format!("{} is not under {}", tracks.display(), base.display()))?
        .to_path_buf();
    let loaded = load_tracks_with_options(&file_abs, LoadOptions { load_crops: true })?;
    for t in &loaded {
        let pid = &t.poses.person_id;
        if index.get(pid).is_some() {
            bail!("person `{pid}` is already in {}", index_path.display());
        }
        index.entries.push(CorpusEntry {
            tracks_relpath: rel.clone(),
            person_id: pid.clone(),
            label: label.to_string(),
            split,
        });
    }
    index.write(index_path)?;
    eprintln!("added {} tracks to {}", loaded.len(), index_path.display());
    Ok(())
}

pub fn cluster(corpus: &Path, out: &Path, cfg: &PipelineConfig, jobs: usize) -> Result<()> {
    let tracks = load_corpus(corpus)?;
    let sets = select_all(&tracks, cfg, jobs)?;
    let mut text = format!("{KEYPOSE_HEADER}\n");
    for (t, s) in tracks.iter().zip(&sets) {
        text.push_str(&KeyPoseRecord::new(&t.track.poses.person_id, s).to_line());
        text.push('\n');
    }
    write_text(out, &text)
}

fn read_keyposes(path: &Path) -> Result<HashMap<String, KeyPoseRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let r = KeyPoseRecord::parse(line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        out.insert(r.person_id.clone(), r);
    }
    Ok(out)
}

pub fn grid(corpus: &Path, keyposes: Option<&Path>, out: &Path, cfg: &PipelineConfig, jobs: usize) -> Result<()> {
    let tracks = load_corpus(corpus)?;
    let frames: Vec<Vec<u32>> = match keyposes {
        Some(path) => {
            let records = read_keyposes(path)?;
            tracks
                .iter()
                .map(|t| {
                    let pid = &t.track.poses.person_id;
                    records
                        .get(pid)
                        .map(|r| r.medoid_frames.clone())
                        .with_context(|| format!("{} has no record for `{pid}`", path.display()))
                })
                .collect::<Result<_>>()?
        }
        None => select_all(&tracks, cfg, jobs)?
            .into_iter()
            .map(|s| s.medoid_frames)
            .collect(),
    };
    let grids = build_grids_for_frames(&tracks, &frames, cfg, jobs)?;
    let mut manifest = DatasetManifest::default();
    for (t, g) in tracks.iter().zip(&grids) {
        let rel = PathBuf::from("grids").join(format!("{}.png", g.person_id));
        g.write_png(&out.join(&rel))?;
        manifest.entries.push(ManifestEntry {
            grid_relpath: rel,
            person_id: g.person_id.clone(),
            label: t.label.clone(),
            split: t.split,
            k: g.provenance.len(),
            medoid_frames: g.provenance.clone(),
        });
    }
    manifest.write(&out.join(MANIFEST_FILE))?;
    eprintln!("wrote {} grids to {}", grids.len(), out.display());
    Ok(())
}

fn manifest_grids(manifest: &Path, split: Split) -> Result<Vec<GridImage>> {
    let m = DatasetManifest::read(manifest)?;
    let base = base_dir(manifest);
    let grids = m
        .split(split)
        .map(|e| {
            GridImage::read_png(
                &base.join(&e.grid_relpath),
                &e.person_id,
                Some(e.label.clone()),
                e.medoid_frames.clone(),
            )
        })
        .collect::<grar::Result<Vec<_>>>()?;
    ensure!(!grids.is_empty(), "{}: no {split} grids", manifest.display());
    Ok(grids)
}

pub fn train_cmd(manifest: &Path, out: &Path, cfg: &PipelineConfig, jobs: usize) -> Result<()> {
    let grids = manifest_grids(manifest, Split::Train)?;
    let samples = features(&grids, cfg.feature_side, jobs)?;
    let (model, history) = train(&samples, &cfg.train)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    model.save(out, cfg.feature_side)?;
    eprintln!(
        "trained on {} grids, {} classes, final loss {:.6}",
        samples.len(),
        model.num_classes(),
        history.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

pub fn eval(model: &Path, manifest: &Path, split: Split, out: Option<&Path>, jobs: usize) -> Result<()> {
    let (model, side) = LinearSoftmaxModel::load(model)?;
    let grids = manifest_grids(manifest, split)?;
    let samples = features(&grids, side, jobs)?;
    emit(out, &evaluate(&model, &samples)?.to_text())
}

pub fn run(corpus: &Path, out: &Path, cfg: &PipelineConfig, jobs: usize) -> Result<()> {
    let tracks = load_corpus(corpus)?;
    let exp = run_experiment(&tracks, cfg, jobs)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    exp.model.save(&out.join(MODEL_FILE), cfg.feature_side)?;
    let report = exp.report.to_text();
    write_text(&out.join(REPORT_FILE), &report)?;
    print!("{report}");
    Ok(())
}

pub struct AblationPlan {
    pub corpus: Option<PathBuf>,
    pub spec: CorpusSpec,
    pub variants: Vec<Variant>,
    pub methods: Vec<Method>,
    pub first_seed: u64,
    pub seeds: u64,
}

impl AblationPlan {
    pub fn default_variants() -> Vec<Variant> {
        ALL_VARIANTS.to_vec()
    }
}

/// One row per (variant, method), one column per seed, then the mean.
pub fn ablate(plan: &AblationPlan, base: &PipelineConfig, out: Option<&Path>, jobs: usize) -> Result<()> {
    ensure!(plan.seeds >= 1, "seeds must be at least 1");
    let fixed = plan.corpus.as_deref().map(load_corpus).transpose()?;
    let seeds: Vec<u64> = (plan.first_seed..plan.first_seed + plan.seeds).collect();
    let rows: Vec<(Variant, Method)> = plan
        .variants
        .iter()
        .flat_map(|&v| plan.methods.iter().map(move |&m| (v, m)))
        .collect();
    let mut acc = vec![Vec::with_capacity(seeds.len()); rows.len()];
    for &s in &seeds {
        let tracks = match &fixed {
            Some(t) => t.clone(),
            None => {
                let mut spec = plan.spec.clone();
                spec.seed = s;
                spec.corruption.seed = s;
                with_jobs(jobs, || generate_corpus_tracks(&spec))??
                    .into_iter()
                    .map(|t| LabeledTrack {
                        track: t.synth.track,
                        label: t.synth.label,
                        split: t.split,
                    })
                    .collect()
            }
        };
        for (i, &(v, m)) in rows.iter().enumerate() {
            let mut cfg = base.clone().with_variant(v).with_seed(s);
            cfg.method = m;
            let a = run_experiment(&tracks, &cfg, jobs)?.report.accuracy();
            eprintln!("seed {s} {v} {m}: {a:.4}");
            acc[i].push(a);
        }
    }
    let mut text = String::from("# variant method");
    for s in &seeds {
        let _ = write!(text, " seed{s}");
    }
    text.push_str(" mean\n");
    for ((v, m), a) in rows.iter().zip(&acc) {
        let _ = write!(text, "{:<12} {:<7}", v.name(), m.to_string());
        for x in a {
            let _ = write!(text, " {x:.6}");
        }
        let _ = writeln!(text, " {:.6}", a.iter().sum::<f64>() / a.len() as f64);
    }
    emit(out, &text)
}
