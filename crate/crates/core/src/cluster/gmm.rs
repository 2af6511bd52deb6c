//! Diagonal-covariance Gaussian mixture fitted by EM.
//!
//! Masked-out joints are treated as missing values: the E-step uses the
//! marginal density over observed dimensions and the M-step uses the
//! expected sufficient statistics of the missing ones, so the observed-data
//! log-likelihood never decreases.

use super::kmeans::kmeans_fit;
use super::{ClusterConfig, KeyPoseSet};
use crate::error::Result;
use crate::normalize::{NormalizedPose, POSE_DIMS};

pub const VARIANCE_FLOOR: f64 = 1e-4;
pub const TOLERANCE: f64 = 1e-6;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub weights: Vec<f64>,
    pub means: Vec<[f64; POSE_DIMS]>,
    pub variances: Vec<[f64; POSE_DIMS]>,
    /// Log-likelihood before each M-step, plus the final value.
    pub log_likelihoods: Vec<f64>,
    /// `responsibilities[i][k]` under the final parameters.
    pub responsibilities: Vec<Vec<f64>>,
}

fn observed(p: &NormalizedPose, d: usize) -> bool {
    p.mask[d / 2]
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Returns per-point responsibilities and the total log-likelihood.
fn e_step(
    poses: &[NormalizedPose],
    weights: &[f64],
    means: &[[f64; POSE_DIMS]],
    vars: &[[f64; POSE_DIMS]],
) -> (Vec<Vec<f64>>, f64) {
    let k = weights.len();
    let mut ll = 0.0;
    let resp = poses
        .iter()
        .map(|p| {
            let logp: Vec<f64> = (0..k)
                .map(|c| {
                    let mut s = weights[c].ln();
                    for d in (0..POSE_DIMS).filter(|&d| observed(p, d)) {
                        let diff = p.coords[d] - means[c][d];
                        s -= 0.5 * (LN_2PI + vars[c][d].ln() + diff * diff / vars[c][d]);
                    }
                    s
                })
                .collect();
            let total = log_sum_exp(&logp);
            ll += total;
            logp.iter().map(|l| (l - total).exp()).collect()
        })
        .collect();
    (resp, ll)
}

fn m_step(
    poses: &[NormalizedPose],
    resp: &[Vec<f64>],
    weights: &mut [f64],
    means: &mut [[f64; POSE_DIMS]],
    vars: &mut [[f64; POSE_DIMS]],
) {
    let n = poses.len() as f64;
    for c in 0..weights.len() {
        let nk: f64 = resp.iter().map(|r| r[c]).sum();
        weights[c] = nk / n;
        if nk <= f64::MIN_POSITIVE {
            continue;
        }
        let old_mean = means[c];
        let old_var = vars[c];
        let mut mean = [0.0; POSE_DIMS];
        for (p, r) in poses.iter().zip(resp) {
            for d in 0..POSE_DIMS {
                let x = if observed(p, d) { p.coords[d] } else { old_mean[d] };
                mean[d] += r[c] * x;
            }
        }
        for m in mean.iter_mut() {
            *m /= nk;
        }
        let mut var = [0.0; POSE_DIMS];
        for (p, r) in poses.iter().zip(resp) {
            for d in 0..POSE_DIMS {
                let term = if observed(p, d) {
                    let diff = p.coords[d] - mean[d];
                    diff * diff
                } else {
                    let diff = old_mean[d] - mean[d];
                    diff * diff + old_var[d]
                };
                var[d] += r[c] * term;
            }
        }
        for v in var.iter_mut() {
            *v = (*v / nk).max(VARIANCE_FLOOR);
        }
        means[c] = mean;
        vars[c] = var;
    }
}

/// EM initialised from the k-means partition.
pub fn gmm_fit(poses: &[NormalizedPose], cfg: &ClusterConfig) -> Result<GmmFit> {
    let km = kmeans_fit(poses, cfg)?;
    let k = cfg.k;
    let n = poses.len() as f64;

    let mut weights = vec![0.0; k];
    let mut means = km.centroids.clone();
    let mut vars = vec![[0.0; POSE_DIMS]; k];
    let mut counts = vec![[0usize; POSE_DIMS]; k];
    for (p, &c) in poses.iter().zip(&km.assignments) {
        weights[c] += 1.0 / n;
        for d in (0..POSE_DIMS).filter(|&d| observed(p, d)) {
            let diff = p.coords[d] - means[c][d];
            vars[c][d] += diff * diff;
            counts[c][d] += 1;
        }
    }
    for c in 0..k {
        for d in 0..POSE_DIMS {
            vars[c][d] = if counts[c][d] > 0 {
                vars[c][d] / counts[c][d] as f64
            } else {
                0.0
            }
            .max(VARIANCE_FLOOR);
        }
    }
    // unobserved centroid dims stay at 0 from k-means; centre them instead
    for c in 0..k {
        for d in 0..POSE_DIMS {
            if counts[c][d] == 0 {
                means[c][d] = 0.5;
            }
        }
    }

    let mut log_likelihoods = Vec::new();
    let (mut resp, mut ll) = e_step(poses, &weights, &means, &vars);
    log_likelihoods.push(ll);
    for _ in 0..cfg.max_iters {
        m_step(poses, &resp, &mut weights, &mut means, &mut vars);
        let (r, next) = e_step(poses, &weights, &means, &vars);
        resp = r;
        log_likelihoods.push(next);
        let gain = next - ll;
        ll = next;
        if gain < TOLERANCE {
            break;
        }
    }
    Ok(GmmFit {
        weights,
        means,
        variances: vars,
        log_likelihoods,
        responsibilities: resp,
    })
}

/// Points go to their most responsible component; each component is
/// represented by the point it is most responsible for.
pub fn gmm_cluster(poses: &[NormalizedPose], cfg: &ClusterConfig) -> Result<KeyPoseSet> {
    let fit = gmm_fit(poses, cfg)?;
    let argmax = |r: &[f64]| {
        let mut best = 0;
        for (c, v) in r.iter().enumerate() {
            if *v > r[best] {
                best = c;
            }
        }
        best
    };
    let assignments: Vec<usize> = fit.responsibilities.iter().map(|r| argmax(r)).collect();

    let mut taken = vec![false; poses.len()];
    let mut medoids = Vec::with_capacity(cfg.k);
    for c in 0..cfg.k {
        // prefer members; components that own no point borrow the best free one
        let pick = |members_only: bool| {
            let mut best: Option<(usize, f64)> = None;
            for (i, r) in fit.responsibilities.iter().enumerate() {
                if taken[i] || (members_only && assignments[i] != c) {
                    continue;
                }
                if best.is_none_or(|(_, b)| r[c] > b) {
                    best = Some((i, r[c]));
                }
            }
            best.map(|(i, _)| i)
        };
        let i = pick(true).or_else(|| pick(false)).expect("k <= n");
        taken[i] = true;
        medoids.push(i);
    }
    Ok(KeyPoseSet::from_assignment(poses, &medoids, assignments, false))
}
