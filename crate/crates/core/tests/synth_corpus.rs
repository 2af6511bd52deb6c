use grar::cluster::{masked_l1, select_key_poses, ClusterConfig, Method};
use grar::manifest::Split;
use grar::normalize::normalize_sequence_with;
use grar::pose::DEFAULT_CONF_THRESHOLD;
use grar::synth::{
    generate_corpus_tracks, generate_track, quantile_frames, ActionSpec, CorpusSpec, CorruptionSpec, ALL_ACTIONS,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corruption(outlier: f64, occlusion: f64, seed: u64) -> CorruptionSpec {
    CorruptionSpec {
        outlier_rate: outlier,
        occlusion_rate: occlusion,
        box_clip_rate: 0.0,
        seed,
    }
}

#[test]
fn labels_are_recoverable_from_clean_poses() {
    // 1-NN over single normalized frames, test split against train split
    let tracks = generate_corpus_tracks(&CorpusSpec {
        per_class: 12,
        seed: 21,
        ..Default::default()
    })
    .unwrap();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for t in &tracks {
        let poses = normalize_sequence_with(&t.synth.track.poses, DEFAULT_CONF_THRESHOLD).unwrap();
        let dest = if t.split == Split::Train { &mut train } else { &mut test };
        dest.extend(poses.into_iter().map(|p| (p, t.synth.label.clone())));
    }
    let correct = test
        .iter()
        .filter(|(p, label)| {
            let nearest = train
                .iter()
                .min_by(|a, b| masked_l1(p, &a.0).total_cmp(&masked_l1(p, &b.0)))
                .unwrap();
            nearest.1 == *label
        })
        .count();
    let acc = correct as f64 / test.len() as f64;
    assert!(acc >= 0.95, "1-NN frame accuracy {acc:.3}");
}

#[test]
fn quantile_rule_counts_are_exact() {
    for (n, rate) in [(100, 0.1), (40, 0.1), (37, 0.2), (10, 0.0), (25, 1.0)] {
        for seed in 0..20 {
            let picked = quantile_frames(n, rate, &mut ChaCha8Rng::seed_from_u64(seed));
            let expected = (rate * n as f64).round() as usize;
            assert_eq!(picked.iter().filter(|&&b| b).count(), expected, "n {n} rate {rate}");
        }
    }
}

#[test]
fn corruption_rates_hold_per_track() {
    let spec = ActionSpec::preset(ALL_ACTIONS[1]);
    for seed in 0..30 {
        let t = generate_track(&spec, 40, &corruption(0.1, 0.2, seed), seed, "p").unwrap();
        assert_eq!(t.truth.outlier.iter().filter(|&&b| b).count(), 4);
        let occluded = t.truth.occluded.iter().filter(|m| m.iter().any(|&b| b)).count();
        assert!(occluded <= 8, "{occluded} occluded frames");
    }
    // outlier frames vary with the corruption seed
    let a = generate_track(&spec, 40, &corruption(0.1, 0.0, 1), 5, "p").unwrap();
    let b = generate_track(&spec, 40, &corruption(0.1, 0.0, 2), 5, "p").unwrap();
    assert_ne!(a.truth.outlier, b.truth.outlier);
}

#[test]
fn pam_picks_fewer_outlier_medoids_than_baselines() {
    let methods = [Method::Pam, Method::KMeans, Method::Gmm];
    let mut hits = [0usize; 3];
    let mut total = 0;
    for seed in 0..50u64 {
        for action in ALL_ACTIONS {
            let t = generate_track(&ActionSpec::preset(action), 40, &corruption(0.1, 0.0, seed), seed, "p").unwrap();
            for (i, &method) in methods.iter().enumerate() {
                let cfg = ClusterConfig {
                    method,
                    seed,
                    ..Default::default()
                };
                let set = select_key_poses(&t.track.poses, &cfg).unwrap();
                let position = |f: u32| t.track.poses.frames.iter().position(|fr| fr.frame_index == f).unwrap();
                hits[i] += set
                    .medoid_frames
                    .iter()
                    .filter(|&&f| t.truth.outlier[position(f)])
                    .count();
            }
            total += 4;
        }
    }
    let rate = |i: usize| hits[i] as f64 / total as f64;
    eprintln!(
        "outlier medoid rate: pam {:.3}, kmeans {:.3}, gmm {:.3}",
        rate(0),
        rate(1),
        rate(2)
    );
    assert!(rate(0) < rate(1) && rate(0) < rate(2));
}
