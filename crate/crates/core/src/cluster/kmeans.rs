//! Lloyd's k-means on masked pose vectors with farthest-point seeding.
//!
//! Distances to a centroid are squared Euclidean over the point's valid
//! joints only. Centroid coordinates are averaged over members that observe
//! the joint.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClusterConfig, KeyPoseSet};
use crate::error::Result;
use crate::normalize::{NormalizedPose, POSE_DIMS};
use crate::pose::NUM_JOINTS;

pub type Centroid = [f64; POSE_DIMS];

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Centroid>,
    pub assignments: Vec<usize>,
    /// Sum of squared masked distances to assigned centroids.
    pub inertia: f64,
}

pub(crate) fn sq_dist(p: &NormalizedPose, c: &Centroid) -> f64 {
    let mut s = 0.0;
    for j in 0..NUM_JOINTS {
        if p.mask[j] {
            let dx = p.coords[2 * j] - c[2 * j];
            let dy = p.coords[2 * j + 1] - c[2 * j + 1];
            s += dx * dx + dy * dy;
        }
    }
    s
}

fn nearest(p: &NormalizedPose, centroids: &[Centroid]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = sq_dist(p, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn farthest_point_seeds(poses: &[NormalizedPose], k: usize, first: usize) -> Vec<Centroid> {
    let mut chosen = vec![false; poses.len()];
    chosen[first] = true;
    let mut centroids = vec![poses[first].coords];
    while centroids.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in poses.iter().enumerate() {
            if chosen[i] {
                continue;
            }
            let d = nearest(p, &centroids).1;
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let (i, _) = best.expect("k <= n");
        chosen[i] = true;
        centroids.push(poses[i].coords);
    }
    centroids
}

fn update_centroids(poses: &[NormalizedPose], assignments: &[usize], centroids: &mut [Centroid]) {
    let k = centroids.len();
    let mut sums = vec![[0.0; POSE_DIMS]; k];
    let mut counts = vec![[0usize; NUM_JOINTS]; k];
    for (p, &c) in poses.iter().zip(assignments) {
        for j in 0..NUM_JOINTS {
            if p.mask[j] {
                sums[c][2 * j] += p.coords[2 * j];
                sums[c][2 * j + 1] += p.coords[2 * j + 1];
                counts[c][j] += 1;
            }
        }
    }
    for c in 0..k {
        for j in 0..NUM_JOINTS {
            if counts[c][j] > 0 {
                let n = counts[c][j] as f64;
                centroids[c][2 * j] = sums[c][2 * j] / n;
                centroids[c][2 * j + 1] = sums[c][2 * j + 1] / n;
            }
        }
    }
}

/// Move a point into every empty cluster: the point farthest from its
/// current centroid among clusters that can spare a member.
fn fill_empty(poses: &[NormalizedPose], assignments: &mut [usize], centroids: &mut [Centroid]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &c in assignments.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in poses.iter().enumerate() {
            if sizes[assignments[i]] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[assignments[i]]);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let (i, _) = best.expect("k <= n leaves a cluster with two members");
        assignments[i] = empty;
        centroids[empty] = poses[i].coords;
    }
}

fn lloyd(poses: &[NormalizedPose], mut centroids: Vec<Centroid>, max_iters: usize) -> KMeansFit {
    let mut assignments: Vec<usize> = Vec::new();
    for _ in 0..max_iters.max(1) {
        let mut next: Vec<usize> = poses.iter().map(|p| nearest(p, &centroids).0).collect();
        fill_empty(poses, &mut next, &mut centroids);
        let converged = next == assignments;
        assignments = next;
        if converged {
            break;
        }
        update_centroids(poses, &assignments, &mut centroids);
    }
    update_centroids(poses, &assignments, &mut centroids);
    let inertia = poses
        .iter()
        .zip(&assignments)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum();
    KMeansFit {
        centroids,
        assignments,
        inertia,
    }
}

/// Best of `cfg.restarts` seeded runs by inertia.
pub fn kmeans_fit(poses: &[NormalizedPose], cfg: &ClusterConfig) -> Result<KMeansFit> {
    cfg.check(poses.len())?;
    let mut best: Option<KMeansFit> = None;
    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.restart_seed(r));
        let first = rng.gen_range(0..poses.len());
        let fit = lloyd(poses, farthest_point_seeds(poses, cfg.k, first), cfg.max_iters);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// Each cluster is represented by the member closest to its centroid.
pub fn kmeans_cluster(poses: &[NormalizedPose], cfg: &ClusterConfig) -> Result<KeyPoseSet> {
    let fit = kmeans_fit(poses, cfg)?;
    let medoids: Vec<usize> = (0..cfg.k)
        .map(|c| {
            let mut best = (usize::MAX, f64::INFINITY);
            for (i, p) in poses.iter().enumerate() {
                if fit.assignments[i] == c {
                    let d = sq_dist(p, &fit.centroids[c]);
                    if d < best.1 {
                        best = (i, d);
                    }
                }
            }
            best.0
        })
        .collect();
    Ok(KeyPoseSet::from_assignment(poses, &medoids, fit.assignments, false))
}

#[cfg(test)]
mod tests {
    use super::super::assignment_cost;
    use super::super::test_util::*;
    use super::*;

    fn cfg(k: usize, seed: u64) -> ClusterConfig {
        ClusterConfig {
            k,
            seed,
            method: super::super::Method::KMeans,
            ..Default::default()
        }
    }

    #[test]
    fn k1_medoid_is_closest_to_mean() {
        let poses = random_poses(12, 4);
        let set = kmeans_cluster(&poses, &cfg(1, 0)).unwrap();
        let mut mean = [0.0; POSE_DIMS];
        for p in &poses {
            for (m, v) in mean.iter_mut().zip(&p.coords) {
                *m += v / poses.len() as f64;
            }
        }
        let expected = (0..poses.len())
            .min_by(|&a, &b| sq_dist(&poses[a], &mean).total_cmp(&sq_dist(&poses[b], &mean)))
            .unwrap();
        assert_eq!(set.medoid_positions, vec![expected]);
    }

    #[test]
    fn separated_groups_recovered() {
        let mut poses: Vec<NormalizedPose> = (0..10)
            .map(|i| constant_pose(if i < 5 { 0.2 } else { 0.7 } + 0.001 * i as f64, i as u32))
            .collect();
        poses.swap(2, 7);
        for seed in 0..10 {
            let set = kmeans_cluster(&poses, &cfg(2, seed)).unwrap();
            for (i, p) in poses.iter().enumerate() {
                let group = usize::from(p.coords[0] > 0.5);
                let same: Vec<bool> = poses
                    .iter()
                    .zip(&set.assignments)
                    .map(|(q, &a)| (usize::from(q.coords[0] > 0.5) == group) == (a == set.assignments[i]))
                    .collect();
                assert!(same.iter().all(|s| *s));
            }
        }
    }

    #[test]
    fn no_empty_clusters_on_duplicates() {
        // five identical points plus one distinct: seeding must pick duplicates
        let mut poses: Vec<NormalizedPose> = (0..5).map(|i| constant_pose(0.3, i)).collect();
        poses.push(constant_pose(0.9, 5));
        for seed in 0..10 {
            let fit = kmeans_fit(&poses, &cfg(3, seed)).unwrap();
            for c in 0..3 {
                assert!(fit.assignments.contains(&c), "seed {seed}: cluster {c} empty");
            }
            let set = kmeans_cluster(&poses, &cfg(3, seed)).unwrap();
            let mut m = set.medoid_positions.clone();
            m.dedup();
            assert_eq!(m.len(), 3);
        }
    }

    #[test]
    fn cost_matches_assignment() {
        let poses = random_poses(40, 2);
        let set = kmeans_cluster(&poses, &cfg(4, 1)).unwrap();
        let c = assignment_cost(&poses, &set.medoid_positions, &set.assignments);
        assert!((c - set.total_cost).abs() < 1e-9);
        assert_eq!(set, kmeans_cluster(&poses, &cfg(4, 1)).unwrap());
    }
}
