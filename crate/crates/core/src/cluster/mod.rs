//! Key-pose selection.
//!
//! PAM k-medoids over masked L1 distances is the method of record. K-means
//! and a diagonal GMM are provided as comparison baselines; both report
//! real frames as cluster representatives so their output can feed the grid
//! builder.

mod gmm;
mod kmeans;
mod pam;

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;

pub use gmm::{gmm_cluster, gmm_fit, GmmFit, VARIANCE_FLOOR};
pub use kmeans::{kmeans_cluster, kmeans_fit, KMeansFit};
pub use pam::pam_cluster;

use crate::error::{GrarError, Result};
use crate::normalize::{normalize_sequence_with, NormalizedPose};
use crate::pose::{PoseSequence, DEFAULT_CONF_THRESHOLD, NUM_JOINTS};
use crate::rng::{derive_index, rng_for};

/// Distance returned when two poses share no valid joint.
pub const NO_OVERLAP_DISTANCE: f64 = 2.0 * NUM_JOINTS as f64;

/// L1 distance over joints valid in both poses, rescaled to a full pose.
pub fn masked_l1(a: &NormalizedPose, b: &NormalizedPose) -> f64 {
    let mut sum = 0.0;
    let mut shared = 0usize;
    for j in 0..NUM_JOINTS {
        if a.mask[j] && b.mask[j] {
            shared += 1;
            sum += (a.coords[2 * j] - b.coords[2 * j]).abs() + (a.coords[2 * j + 1] - b.coords[2 * j + 1]).abs();
        }
    }
    if shared == 0 {
        NO_OVERLAP_DISTANCE
    } else {
        sum * NUM_JOINTS as f64 / shared as f64
    }
}

/// Dense symmetric dissimilarity matrix.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_poses(poses: &[NormalizedPose]) -> Self {
        let n = poses.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let d = masked_l1(&poses[i], &poses[j]);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        DistanceMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Pam,
    KMeans,
    Gmm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Pam => "pam",
            Method::KMeans => "kmeans",
            Method::Gmm => "gmm",
        })
    }
}

impl FromStr for Method {
    type Err = GrarError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pam" => Ok(Method::Pam),
            "kmeans" => Ok(Method::KMeans),
            "gmm" => Ok(Method::Gmm),
            other => Err(GrarError::Config(format!(
                "unknown clustering method `{other}` (pam, kmeans, gmm)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    pub k: usize,
    pub method: Method,
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    /// Joint/frame confidence gate.
    pub conf_threshold: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            k: 4,
            method: Method::Pam,
            seed: 0,
            restarts: 5,
            max_iters: 100,
            conf_threshold: DEFAULT_CONF_THRESHOLD,
        }
    }
}

impl ClusterConfig {
    pub(crate) fn check(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(GrarError::Empty("no poses to cluster"));
        }
        if self.k == 0 {
            return Err(GrarError::Config("k must be at least 1".into()));
        }
        if self.k > n {
            return Err(GrarError::Config(format!(
                "k = {} exceeds the {n} available poses",
                self.k
            )));
        }
        if self.restarts == 0 {
            return Err(GrarError::Config("restarts must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn restart_seed(&self, restart: usize) -> u64 {
        derive_index(self.seed, restart as u64)
    }
}

/// Selected key poses of one track.
///
/// `member_frames`/`assignments` cover the frames that took part in
/// clustering; `medoid_positions` index into that same list.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyPoseSet {
    pub medoid_positions: Vec<usize>,
    pub medoid_frames: Vec<u32>,
    pub medoids: Vec<NormalizedPose>,
    pub member_frames: Vec<u32>,
    pub assignments: Vec<usize>,
    pub total_cost: f64,
    /// Set when the track was too short and key poses were sampled
    /// uniformly in time instead of clustered.
    pub fallback: bool,
}

impl KeyPoseSet {
    pub fn k(&self) -> usize {
        self.medoid_frames.len()
    }

    /// Build from medoid positions into `poses`; members are assigned to
    /// the nearest medoid and medoids are put in temporal order.
    pub(crate) fn from_medoids(poses: &[NormalizedPose], medoids: &[usize], fallback: bool) -> Self {
        let mut order: Vec<usize> = medoids.to_vec();
        order.sort_by_key(|&m| (poses[m].frame_index, m));
        let assignments: Vec<usize> = poses
            .iter()
            .map(|p| {
                let mut best = (f64::INFINITY, 0);
                for (c, &m) in order.iter().enumerate() {
                    let d = masked_l1(p, &poses[m]);
                    if d < best.0 {
                        best = (d, c);
                    }
                }
                best.1
            })
            .collect();
        Self::from_assignment(poses, &order, assignments, fallback)
    }

    /// Build from an explicit partition; `medoids[c]` represents cluster `c`.
    pub(crate) fn from_assignment(
        poses: &[NormalizedPose],
        medoids: &[usize],
        assignments: Vec<usize>,
        fallback: bool,
    ) -> Self {
        let mut order: Vec<usize> = (0..medoids.len()).collect();
        order.sort_by_key(|&c| (poses[medoids[c]].frame_index, medoids[c]));
        let mut relabel = vec![0; medoids.len()];
        for (new, &old) in order.iter().enumerate() {
            relabel[old] = new;
        }
        let medoid_positions: Vec<usize> = order.iter().map(|&c| medoids[c]).collect();
        let assignments: Vec<usize> = assignments.into_iter().map(|c| relabel[c]).collect();
        let total_cost = assignment_cost(poses, &medoid_positions, &assignments);
        KeyPoseSet {
            medoid_frames: medoid_positions.iter().map(|&m| poses[m].frame_index).collect(),
            medoids: medoid_positions.iter().map(|&m| poses[m]).collect(),
            member_frames: poses.iter().map(|p| p.frame_index).collect(),
            medoid_positions,
            assignments,
            total_cost,
            fallback,
        }
    }
}

/// Sum of masked L1 distances from each pose to its assigned medoid.
pub fn assignment_cost(poses: &[NormalizedPose], medoids: &[usize], assignments: &[usize]) -> f64 {
    poses
        .iter()
        .zip(assignments)
        .map(|(p, &c)| masked_l1(p, &poses[medoids[c]]))
        .sum()
}

/// Cost of a medoid set with every pose assigned to its nearest medoid.
pub fn medoid_cost(dist: &DistanceMatrix, medoids: &[usize]) -> f64 {
    (0..dist.len())
        .map(|j| medoids.iter().map(|&m| dist.get(j, m)).fold(f64::INFINITY, f64::min))
        .sum()
}

pub fn cluster(poses: &[NormalizedPose], cfg: &ClusterConfig) -> Result<KeyPoseSet> {
    match cfg.method {
        Method::Pam => pam_cluster(poses, cfg),
        Method::KMeans => kmeans_cluster(poses, cfg),
        Method::Gmm => gmm_cluster(poses, cfg),
    }
}

/// `k` positions spread evenly over `n` items.
pub fn uniform_positions(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| ((2 * i + 1) * n) / (2 * k)).collect()
}

/// Normalize a track, drop low-confidence frames and cluster the rest.
///
/// Tracks with fewer usable frames than `k` fall back to evenly spaced
/// frames (at most one per frame) and set [`KeyPoseSet::fallback`].
pub fn select_key_poses(seq: &PoseSequence, cfg: &ClusterConfig) -> Result<KeyPoseSet> {
    if seq.is_empty() {
        return Err(GrarError::Empty("pose sequence"));
    }
    let all = normalize_sequence_with(seq, cfg.conf_threshold)?;
    let usable: Vec<NormalizedPose> = seq
        .frames
        .iter()
        .zip(&all)
        .filter(|(f, _)| f.pose.mean_confidence() >= cfg.conf_threshold)
        .map(|(_, p)| *p)
        .collect();

    if usable.len() < cfg.k.max(1) {
        let k = cfg.k.max(1).min(all.len());
        let positions = uniform_positions(all.len(), k);
        return Ok(KeyPoseSet::from_medoids(&all, &positions, true));
    }
    cluster(&usable, cfg)
}

/// Uniformly random distinct frames, the selection baseline.
pub fn random_key_poses(seq: &PoseSequence, k: usize, seed: u64, conf_threshold: f64) -> Result<KeyPoseSet> {
    if seq.is_empty() {
        return Err(GrarError::Empty("pose sequence"));
    }
    let all = normalize_sequence_with(seq, conf_threshold)?;
    let k = k.max(1).min(all.len());
    let mut rng = rng_for(seed, &seq.person_id);
    let positions = sample(&mut rng, all.len(), k).into_vec();
    Ok(KeyPoseSet::from_medoids(&all, &positions, false))
}

/// Cached key-pose selection, one line per track:
/// `person_id k f0,f1,... total_cost fallback(0|1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyPoseRecord {
    pub person_id: String,
    pub medoid_frames: Vec<u32>,
    pub total_cost: f64,
    pub fallback: bool,
}

impl KeyPoseRecord {
    pub fn new(person_id: &str, set: &KeyPoseSet) -> Self {
        KeyPoseRecord {
            person_id: person_id.to_string(),
            medoid_frames: set.medoid_frames.clone(),
            total_cost: set.total_cost,
            fallback: set.fallback,
        }
    }

    pub fn to_line(&self) -> String {
        let frames: Vec<String> = self.medoid_frames.iter().map(u32::to_string).collect();
        format!(
            "{} {} {} {} {}",
            self.person_id,
            self.medoid_frames.len(),
            frames.join(","),
            self.total_cost,
            u8::from(self.fallback)
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        let bad = |msg: &str| GrarError::Config(format!("key-pose record `{line}`: {msg}"));
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 5 {
            return Err(bad("expected 5 fields"));
        }
        let k: usize = t[1].parse().map_err(|_| bad("k"))?;
        let medoid_frames = t[2]
            .split(',')
            .map(|s| s.parse::<u32>().map_err(|_| bad("medoid frame")))
            .collect::<Result<Vec<_>>>()?;
        if medoid_frames.len() != k {
            return Err(bad("k does not match medoid count"));
        }
        Ok(KeyPoseRecord {
            person_id: t[0].to_string(),
            medoid_frames,
            total_cost: t[3].parse().map_err(|_| bad("total_cost"))?,
            fallback: match t[4] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("fallback")),
            },
        })
    }
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub fn pose_from(coords: [f64; 34], frame_index: u32) -> NormalizedPose {
        NormalizedPose {
            coords,
            mask: [true; NUM_JOINTS],
            frame_index,
        }
    }

    pub fn constant_pose(v: f64, frame_index: u32) -> NormalizedPose {
        pose_from([v; 34], frame_index)
    }

    pub fn random_poses(n: usize, seed: u64) -> Vec<NormalizedPose> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let mut c = [0.0; 34];
                for v in c.iter_mut() {
                    *v = rng.gen();
                }
                pose_from(c, i as u32)
            })
            .collect()
    }

    /// Two tight groups around 0.2 and 0.8 plus an outlier at the end.
    pub fn two_groups_and_outlier() -> Vec<NormalizedPose> {
        let mut out = Vec::new();
        for (i, v) in [0.20, 0.21, 0.79, 0.80, 0.81].into_iter().enumerate() {
            out.push(constant_pose(v, i as u32));
        }
        let mut far = [0.0; 34];
        for (d, v) in far.iter_mut().enumerate() {
            *v = if d % 2 == 0 { 1.0 } else { 0.0 };
        }
        out.insert(2, pose_from(far, 99));
        for (i, p) in out.iter_mut().enumerate() {
            p.frame_index = i as u32;
        }
        out
    }

    /// Exhaustive best medoid subset of size `k`.
    pub fn brute_force_best(poses: &[NormalizedPose], k: usize) -> (Vec<usize>, f64) {
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        let mut subsets = Vec::new();
        rec(0, poses.len(), k, &mut Vec::new(), &mut subsets);
        let mut best = (Vec::new(), f64::INFINITY);
        for s in subsets {
            let cost: f64 = poses
                .iter()
                .map(|p| s.iter().map(|&m| masked_l1(p, &poses[m])).fold(f64::INFINITY, f64::min))
                .sum();
            if cost < best.1 {
                best = (s, cost);
            }
        }
        best
    }
}
