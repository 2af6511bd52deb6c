//! Partitioning Around Medoids: random initial medoids, then repeated
//! best-improvement swaps over every (medoid, non-medoid) pair until no
//! swap lowers the total cost.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ClusterConfig, DistanceMatrix, KeyPoseSet};
use crate::error::Result;
use crate::normalize::NormalizedPose;

pub fn pam_cluster(poses: &[NormalizedPose], cfg: &ClusterConfig) -> Result<KeyPoseSet> {
    cfg.check(poses.len())?;
    let dist = DistanceMatrix::from_poses(poses);

    let mut best: Option<(Vec<usize>, f64)> = None;
    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.restart_seed(r));
        let init = sample(&mut rng, poses.len(), cfg.k).into_vec();
        let (medoids, cost) = swap_phase(&dist, init, cfg.max_iters);
        if best.as_ref().is_none_or(|(_, c)| cost < *c) {
            best = Some((medoids, cost));
        }
    }
    let (medoids, _) = best.expect("restarts >= 1");
    Ok(KeyPoseSet::from_medoids(poses, &medoids, false))
}

struct Nearest {
    /// slot (index into the medoid list) of the nearest medoid
    slot: usize,
    near: f64,
    second: f64,
}

fn nearest_table(dist: &DistanceMatrix, medoids: &[usize]) -> Vec<Nearest> {
    (0..dist.len())
        .map(|j| {
            let mut rec = Nearest {
                slot: 0,
                near: f64::INFINITY,
                second: f64::INFINITY,
            };
            for (slot, &m) in medoids.iter().enumerate() {
                let d = dist.get(j, m);
                if d < rec.near {
                    rec.second = rec.near;
                    rec.near = d;
                    rec.slot = slot;
                } else if d < rec.second {
                    rec.second = d;
                }
            }
            rec
        })
        .collect()
}

/// Returns the final medoids and their cost. Costs are summed per point in
/// index order, so they are bit-identical to [`super::medoid_cost`].
fn swap_phase(dist: &DistanceMatrix, mut medoids: Vec<usize>, max_iters: usize) -> (Vec<usize>, f64) {
    let n = dist.len();
    let mut is_medoid = vec![false; n];
    for &m in &medoids {
        is_medoid[m] = true;
    }
    let mut table = nearest_table(dist, &medoids);
    let mut cost: f64 = table.iter().map(|r| r.near).sum();

    for _ in 0..max_iters {
        // (cost, slot, candidate); strict comparison keeps the lowest swap index on ties
        let mut best: Option<(f64, usize, usize)> = None;
        for slot in 0..medoids.len() {
            for h in (0..n).filter(|&h| !is_medoid[h]) {
                let swapped: f64 = table
                    .iter()
                    .enumerate()
                    .map(|(j, r)| {
                        let to_h = dist.get(j, h);
                        let others = if r.slot == slot { r.second } else { r.near };
                        to_h.min(others)
                    })
                    .sum();
                if best.is_none_or(|(c, _, _)| swapped < c) {
                    best = Some((swapped, slot, h));
                }
            }
        }
        match best {
            Some((c, slot, h)) if c < cost => {
                is_medoid[medoids[slot]] = false;
                is_medoid[h] = true;
                medoids[slot] = h;
                table = nearest_table(dist, &medoids);
                cost = table.iter().map(|r| r.near).sum();
            }
            _ => break,
        }
    }
    (medoids, cost)
}

#[cfg(test)]
mod tests {
    use super::super::test_util::*;
    use super::super::{assignment_cost, medoid_cost, ClusterConfig, DistanceMatrix};
    use super::*;

    fn cfg(k: usize, seed: u64, restarts: usize) -> ClusterConfig {
        ClusterConfig {
            k,
            seed,
            restarts,
            ..Default::default()
        }
    }

    /// Every single swap, evaluated from scratch.
    fn improving_swaps(poses: &[NormalizedPose], medoids: &[usize], cost: f64) -> usize {
        let dist = DistanceMatrix::from_poses(poses);
        let mut count = 0;
        for slot in 0..medoids.len() {
            for h in 0..poses.len() {
                if medoids.contains(&h) {
                    continue;
                }
                let mut m = medoids.to_vec();
                m[slot] = h;
                if medoid_cost(&dist, &m) < cost {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn k_equals_n_is_zero_cost() {
        let poses = random_poses(5, 1);
        let set = pam_cluster(&poses, &cfg(5, 0, 1)).unwrap();
        assert_eq!(set.total_cost, 0.0);
        assert_eq!(set.medoid_positions, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn k_too_large_is_config_error() {
        let poses = random_poses(3, 1);
        assert!(pam_cluster(&poses, &cfg(4, 0, 1)).is_err());
        assert!(pam_cluster(&[], &cfg(1, 0, 1)).is_err());
    }

    #[test]
    fn outlier_never_medoid() {
        let poses = two_groups_and_outlier();
        let (oracle, oracle_cost) = brute_force_best(&poses, 2);
        assert!(!oracle.contains(&2));
        for seed in 0..50 {
            let set = pam_cluster(&poses, &cfg(2, seed, 5)).unwrap();
            assert!(!set.medoid_positions.contains(&2), "seed {seed}");
            assert_eq!(set.total_cost, oracle_cost);
            // the outlier is equidistant from both groups
            let groups = &set.assignments;
            assert_eq!(groups[0], groups[1]);
            assert_eq!(groups[3], groups[4]);
            assert_ne!(groups[0], groups[3]);
        }
    }

    #[test]
    fn local_optimum_and_cost_consistency() {
        for seed in 0..20 {
            let poses = random_poses(30, seed);
            let set = pam_cluster(&poses, &cfg(4, seed, 2)).unwrap();
            assert_eq!(improving_swaps(&poses, &set.medoid_positions, set.total_cost), 0);
            let recomputed = assignment_cost(&poses, &set.medoid_positions, &set.assignments);
            assert!((recomputed - set.total_cost).abs() <= 1e-9);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let poses = random_poses(25, 9);
        assert_eq!(
            pam_cluster(&poses, &cfg(3, 11, 5)).unwrap(),
            pam_cluster(&poses, &cfg(3, 11, 5)).unwrap()
        );
    }

    #[test]
    fn matches_brute_force_on_tiny_instances() {
        let mut hits = 0;
        for trial in 0..200u64 {
            let n = 4 + (trial % 5) as usize;
            let k = 1 + (trial % 3) as usize;
            let poses = random_poses(n, 1000 + trial);
            let (_, best) = brute_force_best(&poses, k);
            let set = pam_cluster(&poses, &cfg(k, trial, 15)).unwrap();
            if (set.total_cost - best).abs() <= 1e-9 {
                hits += 1;
            }
        }
        assert!(hits >= 190, "{hits}/200");
    }
}
