//! Linear softmax action classifier on downsampled grid images, trained with
//! mean categorical cross entropy and Adam.

mod features;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use features::{featurize_raster, FeatureVector, DEFAULT_SIDE};

use crate::error::{GrarError, Result};
use crate::grid::GridImage;

pub fn featurize(grid: &GridImage, side: usize) -> Result<FeatureVector> {
    featurize_raster(&grid.raster, side)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Learning-rate multiplier applied when the epoch loss plateaus.
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 16,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-3,
            plateau_factor: 0.2,
            plateau_patience: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSoftmaxModel {
    pub classes: Vec<String>,
    pub dim: usize,
    /// `classes.len() x dim`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub train_config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    /// Full training-set loss after each epoch.
    pub epoch_losses: Vec<f64>,
    pub learning_rates: Vec<f64>,
}

const CHECKPOINT_FORMAT: &str = "grar-linear-softmax";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    side: usize,
    model: LinearSoftmaxModel,
}

impl LinearSoftmaxModel {
    pub fn zeros(classes: Vec<String>, dim: usize, train_config: TrainConfig) -> Result<Self> {
        if classes.is_empty() {
            return Err(GrarError::Empty("class list"));
        }
        let mut sorted = classes.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != classes.len() {
            return Err(GrarError::Config("class labels must be unique".into()));
        }
        Ok(LinearSoftmaxModel {
            weights: vec![0.0; classes.len() * dim],
            bias: vec![0.0; classes.len()],
            classes,
            dim,
            train_config,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_index(&self, label: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| GrarError::UnknownLabel(label.to_string()))
    }

    pub fn logits(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(GrarError::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(self
            .weights
            .chunks_exact(self.dim)
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(&x.values).map(|(a, v)| a * v).sum::<f64>() + b)
            .collect())
    }

    pub fn probabilities(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Save as versioned JSON. `side` records the featurization used.
    pub fn save(&self, path: &Path, side: usize) -> Result<()> {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            side,
            model: self.clone(),
        };
        let text = serde_json::to_string_pretty(&ck).map_err(|e| GrarError::Checkpoint(e.to_string()))?;
        fs::write(path, text).map_err(|e| GrarError::io(path, e))
    }

    /// Returns the model and its feature side.
    pub fn load(path: &Path) -> Result<(Self, usize)> {
        let text = fs::read_to_string(path).map_err(|e| GrarError::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| GrarError::Checkpoint(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(GrarError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        let m = &ck.model;
        if m.weights.len() != m.classes.len() * m.dim || m.bias.len() != m.classes.len() {
            return Err(GrarError::Checkpoint("parameter shapes do not match".into()));
        }
        Ok((ck.model, ck.side))
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Mean negative log softmax probability of the true labels.
pub fn cross_entropy_loss(model: &LinearSoftmaxModel, batch: &[(FeatureVector, String)]) -> Result<f64> {
    if batch.is_empty() {
        return Err(GrarError::Empty("batch"));
    }
    let mut mean = 0.0;
    for (i, (x, label)) in batch.iter().enumerate() {
        let y = model.class_index(label)?;
        let z = model.logits(x)?;
        mean = running_mean(mean, log_sum_exp(&z) - z[y], i);
    }
    Ok(mean)
}

/// Mean after adding the `i`th (0-based) value; exact when all values are equal.
fn running_mean(mean: f64, value: f64, i: usize) -> f64 {
    mean + (value - mean) / (i + 1) as f64
}

/// Loss and gradients `(dW, db)` over samples `idx` of `(xs, ys)`.
pub fn loss_and_gradient(
    model: &LinearSoftmaxModel,
    xs: &[FeatureVector],
    ys: &[usize],
    idx: &[usize],
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (n, d) = (model.num_classes(), model.dim);
    let mut gw = vec![0.0; n * d];
    let mut gb = vec![0.0; n];
    let mut loss = 0.0;
    let scale = 1.0 / idx.len() as f64;
    for (count, &i) in idx.iter().enumerate() {
        let z = model.logits(&xs[i])?;
        loss = running_mean(loss, log_sum_exp(&z) - z[ys[i]], count);
        let mut p = softmax(&z);
        p[ys[i]] -= 1.0;
        for c in 0..n {
            let g = p[c] * scale;
            gb[c] += g;
            if g != 0.0 {
                for (w, v) in gw[c * d..(c + 1) * d].iter_mut().zip(&xs[i].values) {
                    *w += g * v;
                }
            }
        }
    }
    Ok((loss, gw, gb))
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [&mut f64], grads: &[f64], lr: f64, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            **p -= lr * mh / (vh.sqrt() + cfg.epsilon);
        }
    }
}

/// Train from zero-initialised parameters. Classes are the sorted set of
/// labels present; at least two are required.
pub fn train(samples: &[(FeatureVector, String)], cfg: &TrainConfig) -> Result<(LinearSoftmaxModel, TrainHistory)> {
    if samples.is_empty() {
        return Err(GrarError::Empty("training set"));
    }
    let mut classes: Vec<String> = samples.iter().map(|(_, l)| l.clone()).collect();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(GrarError::TooFewClasses(classes.len()));
    }
    let dim = samples[0].0.len();
    let mut model = LinearSoftmaxModel::zeros(classes, dim, *cfg)?;
    let xs: Vec<FeatureVector> = samples.iter().map(|(x, _)| x.clone()).collect();
    for x in &xs {
        if x.len() != dim {
            return Err(GrarError::DimensionMismatch {
                expected: dim,
                actual: x.len(),
            });
        }
    }
    let ys: Vec<usize> = samples
        .iter()
        .map(|(_, l)| model.class_index(l))
        .collect::<Result<_>>()?;

    let mut history = TrainHistory::default();
    let mut adam_w = Adam::new(model.weights.len());
    let mut adam_b = Adam::new(model.bias.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let all: Vec<usize> = order.clone();
    let mut lr = cfg.learning_rate;
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let batch = cfg.batch_size.max(1);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let (_, gw, gb) = loss_and_gradient(&model, &xs, &ys, chunk)?;
            let mut pw: Vec<&mut f64> = model.weights.iter_mut().collect();
            adam_w.step(&mut pw, &gw, lr, cfg);
            let mut pb: Vec<&mut f64> = model.bias.iter_mut().collect();
            adam_b.step(&mut pb, &gb, lr, cfg);
        }
        let (loss, _, _) = loss_and_gradient(&model, &xs, &ys, &all)?;
        history.epoch_losses.push(loss);
        history.learning_rates.push(lr);
        if loss < best - 1e-4 {
            best = loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.plateau_patience {
                lr *= cfg.plateau_factor;
                stale = 0;
            }
        }
    }
    Ok((model, history))
}

/// Most probable class and the full probability vector.
pub fn predict_features(model: &LinearSoftmaxModel, x: &FeatureVector) -> Result<(String, Vec<f64>)> {
    let p = model.probabilities(x)?;
    let mut best = 0;
    for (c, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = c;
        }
    }
    Ok((model.classes[best].clone(), p))
}

pub fn predict(model: &LinearSoftmaxModel, grid: &GridImage, side: usize) -> Result<(String, Vec<f64>)> {
    predict_features(model, &featurize(grid, side)?)
}

/// Modal label; ties go to the lexicographically smallest label.
pub fn majority_activity<S: AsRef<str>>(labels: &[S]) -> Result<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l.as_ref()).or_default() += 1;
    }
    let mut best: Option<(&str, usize)> = None;
    for (label, n) in counts {
        if best.is_none_or(|(_, b)| n > b) {
            best = Some((label, n));
        }
    }
    best.map(|(l, _)| l.to_string()).ok_or(GrarError::Empty("label list"))
}
