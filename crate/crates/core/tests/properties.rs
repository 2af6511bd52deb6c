use grar::classifier::{featurize_raster, softmax};
use grar::cluster::{masked_l1, KeyPoseRecord, NO_OVERLAP_DISTANCE};
use grar::grid::{compose_grid, GridLayout};
use grar::manifest::{DatasetManifest, ManifestEntry, Split};
use grar::normalize::NormalizedPose;
use grar::pose::{
    load_tracks, write_tracks, BoundingBox, CropFrame, Frame, Keypoint, Pose, PoseSequence, Track, TrackCrops,
};
use image::{Rgb, RgbImage};
use proptest::prelude::*;

fn arb_normalized() -> impl Strategy<Value = NormalizedPose> {
    (
        prop::array::uniform17((0.0..1.0f64, 0.0..1.0f64)),
        prop::array::uniform17(any::<bool>()),
    )
        .prop_map(|(xy, mask)| {
            let mut coords = [0.0; 34];
            for (j, (x, y)) in xy.iter().enumerate() {
                if mask[j] {
                    coords[2 * j] = *x;
                    coords[2 * j + 1] = *y;
                }
            }
            NormalizedPose {
                coords,
                mask,
                frame_index: 0,
            }
        })
}

fn arb_frame(index: u32) -> impl Strategy<Value = Frame> {
    (
        -50.0..50.0f64,
        -50.0..50.0f64,
        2.0..14.0f64,
        2.0..14.0f64,
        prop::collection::vec((-80.0..80.0f64, -80.0..80.0f64, 0.0..=1.0f64), 17),
    )
        .prop_map(move |(x, y, w, h, js)| {
            let joints: Vec<Keypoint> = js
                .into_iter()
                .map(|(a, b, c)| Keypoint::new(a, b, c).unwrap())
                .collect();
            Frame {
                frame_index: index,
                pose: Pose::from_slice(&joints).unwrap(),
                bbox: BoundingBox::new(x, y, x + w, y + h).unwrap(),
            }
        })
}

fn arb_track() -> impl Strategy<Value = Track> {
    (1usize..4)
        .prop_flat_map(|n| (0..n as u32).map(arb_frame).collect::<Vec<_>>())
        .prop_map(|frames| {
            let crops = frames
                .iter()
                .map(|f| {
                    let (w, h) = f.bbox.raster_dims();
                    CropFrame {
                        frame_index: f.frame_index,
                        image: RgbImage::from_fn(w, h, |x, y| Rgb([x as u8, y as u8, f.frame_index as u8])),
                    }
                })
                .collect();
            Track {
                poses: PoseSequence::new("p_1", frames).unwrap(),
                crops: TrackCrops {
                    person_id: "p_1".into(),
                    frames: crops,
                },
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn track_files_round_trip(track in arb_track()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tracks.txt");
        write_tracks(&path, std::slice::from_ref(&track)).unwrap();
        let loaded = load_tracks(&path).unwrap();
        prop_assert_eq!(loaded, vec![track]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn masked_l1_is_a_symmetric_dissimilarity(a in arb_normalized(), b in arb_normalized()) {
        let d = masked_l1(&a, &b);
        prop_assert_eq!(d, masked_l1(&b, &a));
        prop_assert!(d >= 0.0);
        prop_assert!(d <= NO_OVERLAP_DISTANCE);
        prop_assert_eq!(masked_l1(&a, &a), if a.mask.iter().any(|&m| m) { 0.0 } else { NO_OVERLAP_DISTANCE });
        let shared = (0..17).any(|j| a.mask[j] && b.mask[j]);
        if !shared {
            prop_assert_eq!(d, NO_OVERLAP_DISTANCE);
        }
    }

    #[test]
    fn grid_pixels_outside_cells_are_zero(dims in prop::collection::vec((1u32..30, 1u32..30), 1..10), border in 1u32..6) {
        let cells: Vec<RgbImage> = dims.iter().map(|&(w, h)| RgbImage::from_pixel(w, h, Rgb([200, 100, 50]))).collect();
        let g = compose_grid(&cells, &GridLayout::for_cells(cells.len(), border)).unwrap();
        for (x, y, p) in g.raster.enumerate_pixels() {
            let inside = g.cells.iter().any(|r| x >= r.x && x < r.x + r.width && y >= r.y && y < r.y + r.height);
            prop_assert_eq!(p.0, if inside { [200, 100, 50] } else { [0, 0, 0] });
        }
    }

    #[test]
    fn features_are_unit_range(w in 1u32..90, h in 1u32..90, side in 8usize..40, seed in any::<u8>()) {
        let img = RgbImage::from_fn(w, h, |x, y| {
            let v = (x * 31 + y * 17 + seed as u32) as u8;
            Rgb([v, v.wrapping_mul(3), v.wrapping_add(90)])
        });
        let f = featurize_raster(&img, side).unwrap();
        prop_assert_eq!(f.len(), side * side);
        prop_assert!(f.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn softmax_is_a_distribution(z in prop::collection::vec(-1e3..1e3f64, 1..30)) {
        let p = softmax(&z);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn key_pose_records_round_trip(
        frames in prop::collection::vec(0u32..100_000, 1..8),
        cost in 0.0..1e4f64,
        fallback in any::<bool>(),
    ) {
        let r = KeyPoseRecord { person_id: "walk_007".into(), medoid_frames: frames, total_cost: cost, fallback };
        prop_assert_eq!(KeyPoseRecord::parse(&r.to_line()).unwrap(), r);
    }

    #[test]
    fn manifests_round_trip(rows in prop::collection::vec(("[a-z]{1,8}", "[a-z]{1,6}", any::<bool>(), prop::collection::vec(0u32..500, 1..6)), 0..6)) {
        let m = DatasetManifest {
            entries: rows
                .into_iter()
                .enumerate()
                .map(|(i, (pid, label, train, frames))| ManifestEntry {
                    grid_relpath: format!("grids/{pid}_{i}.png").into(),
                    person_id: format!("{pid}_{i}"),
                    label,
                    split: if train { Split::Train } else { Split::Test },
                    k: frames.len(),
                    medoid_frames: frames,
                })
                .collect(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.txt");
        m.write(&path).unwrap();
        prop_assert_eq!(DatasetManifest::read(&path).unwrap(), m);
    }
}
