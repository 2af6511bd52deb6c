//! Deterministic synthetic corpus: labelled stick-figure tracks with rendered
//! crops and optional corruption.
//!
//! Every track draws from its own random streams, derived from the seed and
//! the person id, so tracks can be generated in any order or in parallel.
//!
//! Corrupted frames are chosen by a quantile rule: each frame draws a
//! uniform key and the `round(rate * n)` frames with the smallest keys are
//! corrupted (ties by frame index). Three corruption modes exist:
//!
//! * outlier: the detector drifts and the pose estimator fails. The box is
//!   shifted off the person and the joints are uniform inside it, with full
//!   confidence.
//! * occlusion: a gray rectangle covers one body region; joints under it
//!   get confidence 0.05.
//! * box clipping: one side of the box cuts off the outermost joint on that
//!   side, leaving it a few pixels outside the box.

mod motion;
mod render;

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

pub use motion::{skeleton, Action, ActionSpec, Body, Channel, Wave, ALL_ACTIONS, NUM_CHANNELS};
pub use render::{Appearance, Rect, Scene, OCCLUDER_COLOR};

use crate::error::{GrarError, Result};
use crate::manifest::{CorpusEntry, CorpusIndex, Split};
use crate::pose::write_tracks;
use crate::pose::{BoundingBox, CropFrame, Frame, Keypoint, Pose, PoseSequence, Track, TrackCrops, NUM_JOINTS};
use crate::rng::{derive_seed, rng_for};

pub const OCCLUDED_CONFIDENCE: f64 = 0.05;
pub const DEFAULT_FRAMES: usize = 40;
pub const MIN_FRAMES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionSpec {
    pub outlier_rate: f64,
    pub occlusion_rate: f64,
    pub box_clip_rate: f64,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn clean(seed: u64) -> Self {
        CorruptionSpec {
            outlier_rate: 0.0,
            occlusion_rate: 0.0,
            box_clip_rate: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("outlier_rate", self.outlier_rate),
            ("occlusion_rate", self.occlusion_rate),
            ("box_clip_rate", self.box_clip_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(GrarError::Config(format!("{name} {r} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        CorruptionSpec::clean(0)
    }
}

/// Per-frame record of what the generator did.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub outlier: Vec<bool>,
    pub occluded: Vec<[bool; NUM_JOINTS]>,
    pub box_clipped: Vec<bool>,
    /// Position in the motion cycle, in `[0, 1)`.
    pub cycle: Vec<f64>,
}

impl GroundTruth {
    pub fn is_clean(&self) -> bool {
        !self.outlier.iter().any(|&b| b)
            && !self.box_clipped.iter().any(|&b| b)
            && self.occluded.iter().all(|m| !m.iter().any(|&b| b))
    }
}

/// Frames selected for a corruption with the given rate.
pub fn quantile_frames(n: usize, rate: f64, rng: &mut impl Rng) -> Vec<bool> {
    let keys: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    let m = ((rate * n as f64).round() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    let mut out = vec![false; n];
    for &i in &order[..m] {
        out[i] = true;
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct TrackStyle {
    body: Body,
    look: Appearance,
    period: f64,
    phase0: f64,
    drift: f64,
}

fn sample_style(spec: &ActionSpec, rng: &mut ChaCha8Rng) -> TrackStyle {
    let height = rng.gen_range(50.0..80.0);
    let mirrored = rng.gen_bool(0.5);
    // clothing and background luminance ranges overlap, so some figures
    // barely stand out from the scene
    let cloth = |rng: &mut ChaCha8Rng| [rng.gen_range(30..150), rng.gen_range(30..150), rng.gen_range(30..150)];
    let shirt = cloth(rng);
    let pants = cloth(rng);
    let s: f64 = rng.gen_range(100.0..180.0);
    let skin = [s as u8, (s * 0.82) as u8, (s * 0.68) as u8];
    let lum_a: f64 = rng.gen_range(60.0..110.0);
    let lum_b = lum_a + rng.gen_range(20.0..40.0);
    let tint: [f64; 3] = [
        rng.gen_range(0.9..1.1),
        rng.gen_range(0.9..1.1),
        rng.gen_range(0.9..1.1),
    ];
    let tinted = |l: f64| tint.map(|t| (l * t).clamp(0.0, 255.0) as u8);
    let look = Appearance {
        shirt,
        pants,
        skin,
        background: [tinted(lum_a), tinted(lum_b)],
        checker_px: rng.gen_range(6.0..14.0),
        noise_amplitude: 15,
        noise_seed: rng.gen(),
        limb_radius: 0.035 * height,
        torso_radius: 0.085 * height,
        head_radius: 0.075 * height,
    };
    let speed = match spec.action {
        Action::Walk => rng.gen_range(0.6..1.2),
        Action::Run => rng.gen_range(1.5..2.5),
        _ => 0.0,
    };
    let period = (spec.period_frames as f64 * rng.gen_range(0.85..1.2)).round().max(4.0);
    TrackStyle {
        body: Body {
            height,
            mirrored,
            pelvis: (rng.gen_range(220.0..420.0), rng.gen_range(250.0..300.0)),
            amplitude_scale: rng.gen_range(0.85..1.15),
        },
        look,
        period,
        phase0: rng.gen(),
        drift: if mirrored { -speed } else { speed },
    }
}

/// Body regions an occluder may cover. The last hides everything below the
/// head, enough to pull the frame's mean confidence under the default
/// threshold.
const OCCLUSION_REGIONS: [&[usize]; 5] = [
    &[13, 14, 15, 16],
    &[7, 9],
    &[8, 10],
    &[11, 12, 13, 14],
    &[5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16],
];

fn joint_rect(joints: &[(f64, f64); NUM_JOINTS], region: &[usize], margin: f64) -> Rect {
    let mut r = Rect {
        x_min: f64::INFINITY,
        y_min: f64::INFINITY,
        x_max: f64::NEG_INFINITY,
        y_max: f64::NEG_INFINITY,
    };
    for &j in region {
        r.x_min = r.x_min.min(joints[j].0 - margin);
        r.y_min = r.y_min.min(joints[j].1 - margin);
        r.x_max = r.x_max.max(joints[j].0 + margin);
        r.y_max = r.y_max.max(joints[j].1 + margin);
    }
    r
}

/// Move one box side inward past the outermost confident joint on that side.
fn clip_box(
    bbox: &BoundingBox,
    joints: &[Keypoint; NUM_JOINTS],
    height: f64,
    rng: &mut ChaCha8Rng,
) -> Option<BoundingBox> {
    let side = rng.gen_range(0..4);
    let depth = rng.gen_range(3.0..(0.08 * height).max(3.5));
    let valid = joints.iter().filter(|k| k.confidence >= 0.3);
    let mut b = *bbox;
    match side {
        0 => b.x_min = (valid.map(|k| k.x).fold(f64::INFINITY, f64::min) + depth).ceil(),
        1 => b.x_max = (valid.map(|k| k.x).fold(f64::NEG_INFINITY, f64::max) - depth).floor(),
        2 => b.y_min = (valid.map(|k| k.y).fold(f64::INFINITY, f64::min) + depth).ceil(),
        _ => b.y_max = (valid.map(|k| k.y).fold(f64::NEG_INFINITY, f64::max) - depth).floor(),
    }
    (b.width() >= 8.0 && b.height() >= 8.0).then_some(b)
}

#[derive(Debug, Clone)]
pub struct SynthTrack {
    pub track: Track,
    pub label: String,
    pub truth: GroundTruth,
}

/// One labelled track. Motion and appearance come from `seed`; the
/// corruption pattern comes from `corruption.seed` and `person_id`.
pub fn generate_track(
    action: &ActionSpec,
    frames: usize,
    corruption: &CorruptionSpec,
    seed: u64,
    person_id: &str,
) -> Result<SynthTrack> {
    action.validate()?;
    corruption.validate()?;
    if frames < MIN_FRAMES {
        return Err(GrarError::Config(format!(
            "{frames} frames is below the minimum of {MIN_FRAMES}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let style = sample_style(action, &mut rng);
    let h = style.body.height;
    let noise = Normal::new(0.0, action.noise_sigma * h).expect("sigma validated");

    let mut crng = rng_for(corruption.seed, &format!("corruption/{person_id}"));
    let outlier = quantile_frames(frames, corruption.outlier_rate, &mut crng);
    let occluded_frames = quantile_frames(frames, corruption.occlusion_rate, &mut crng);
    let clipped_frames = quantile_frames(frames, corruption.box_clip_rate, &mut crng);

    let mut truth = GroundTruth::default();
    let mut seq_frames = Vec::with_capacity(frames);
    let mut crops = Vec::with_capacity(frames);
    for t in 0..frames {
        let cycle = style.phase0 + t as f64 / style.period;
        let body = Body {
            pelvis: (style.body.pelvis.0 + style.drift * t as f64, style.body.pelvis.1),
            ..style.body
        };
        let true_joints = skeleton(action, &body, cycle);
        let mut scene = Scene::new(&true_joints, &style.look);

        let e = scene.extent();
        let mut pad = || rng.gen_range(0.03..0.09) * h;
        let mut bbox = BoundingBox::new(
            (e.x_min - pad()).floor(),
            (e.y_min - pad()).floor(),
            (e.x_max + pad()).ceil(),
            (e.y_max + pad()).ceil(),
        )?;
        let mut joints = [Keypoint::default(); NUM_JOINTS];
        let clamp = 2.5 * action.noise_sigma * h;
        for (k, p) in joints.iter_mut().zip(&true_joints) {
            *k = Keypoint {
                x: p.0 + noise.sample(&mut rng).clamp(-clamp, clamp),
                y: p.1 + noise.sample(&mut rng).clamp(-clamp, clamp),
                confidence: rng.gen_range(0.75..1.0),
            };
        }

        if outlier[t] {
            let (w, bh) = (bbox.width(), bbox.height());
            let sx = if crng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let sy = if crng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let dx = (sx * crng.gen_range(0.35..0.6) * w).round();
            let dy = (sy * crng.gen_range(0.15..0.35) * bh).round();
            bbox = BoundingBox::new(bbox.x_min + dx, bbox.y_min + dy, bbox.x_max + dx, bbox.y_max + dy)?;
            for k in joints.iter_mut() {
                *k = Keypoint {
                    x: crng.gen_range(bbox.x_min..bbox.x_max),
                    y: crng.gen_range(bbox.y_min..bbox.y_max),
                    confidence: 1.0,
                };
            }
        }

        let mut occ = [false; NUM_JOINTS];
        if occluded_frames[t] {
            let region = OCCLUSION_REGIONS[crng.gen_range(0..OCCLUSION_REGIONS.len())];
            let rect = joint_rect(&true_joints, region, 0.06 * h + style.look.limb_radius);
            for (j, k) in joints.iter_mut().enumerate() {
                if rect.contains(k.x, k.y) {
                    k.confidence = OCCLUDED_CONFIDENCE;
                    occ[j] = true;
                }
            }
            scene.occluder = Some(rect);
        }

        let mut clipped = false;
        if clipped_frames[t] && !outlier[t] {
            if let Some(b) = clip_box(&bbox, &joints, h, &mut crng) {
                clipped = !(0..NUM_JOINTS).all(|j| b.contains(joints[j].x, joints[j].y));
                bbox = b;
            }
        }

        crops.push(CropFrame {
            frame_index: t as u32,
            image: scene.render(&style.look, &bbox),
        });
        seq_frames.push(Frame {
            frame_index: t as u32,
            pose: Pose::new(joints),
            bbox,
        });
        truth.outlier.push(outlier[t]);
        truth.occluded.push(occ);
        truth.box_clipped.push(clipped);
        truth.cycle.push(cycle.rem_euclid(1.0));
    }

    Ok(SynthTrack {
        track: Track {
            poses: PoseSequence::new(person_id, seq_frames)?,
            crops: TrackCrops {
                person_id: person_id.to_string(),
                frames: crops,
            },
        },
        label: action.action.name().to_string(),
        truth,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub classes: Vec<Action>,
    pub per_class: usize,
    pub frames: usize,
    pub corruption: CorruptionSpec,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            classes: ALL_ACTIONS.to_vec(),
            per_class: 30,
            frames: DEFAULT_FRAMES,
            corruption: CorruptionSpec::clean(0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusTrack {
    pub synth: SynthTrack,
    pub split: Split,
}

pub fn person_id(action: Action, index: usize) -> String {
    format!("{action}_{index:03}")
}

/// Training share per class: `round(2n/3)`, keeping at least one track in
/// each split when `n >= 2`.
pub fn train_count(n: usize) -> usize {
    let t = (2.0 * n as f64 / 3.0).round() as usize;
    if n >= 2 {
        t.clamp(1, n - 1)
    } else {
        t
    }
}

/// Generate all tracks in memory, ordered by class then index.
pub fn generate_corpus_tracks(spec: &CorpusSpec) -> Result<Vec<CorpusTrack>> {
    if spec.classes.is_empty() || spec.per_class == 0 {
        return Err(GrarError::Empty("corpus"));
    }
    let mut classes = spec.classes.clone();
    classes.dedup();
    if classes.len() != spec.classes.len() {
        return Err(GrarError::Config("duplicate class in corpus spec".into()));
    }
    let mut jobs = Vec::new();
    for &action in &classes {
        let mut order: Vec<usize> = (0..spec.per_class).collect();
        order.shuffle(&mut rng_for(spec.seed, &format!("split/{action}")));
        let n_train = train_count(spec.per_class);
        let mut split = vec![Split::Test; spec.per_class];
        for &i in &order[..n_train] {
            split[i] = Split::Train;
        }
        for (i, s) in split.into_iter().enumerate() {
            jobs.push((action, person_id(action, i), s));
        }
    }
    jobs.into_par_iter()
        .map(|(action, pid, split)| {
            let seed = derive_seed(spec.seed, &pid);
            let synth = generate_track(&ActionSpec::preset(action), spec.frames, &spec.corruption, seed, &pid)?;
            Ok(CorpusTrack { synth, split })
        })
        .collect()
}

pub fn track_relpath(person_id: &str) -> PathBuf {
    PathBuf::from("tracks").join(format!("{person_id}.txt"))
}

pub const CORPUS_INDEX_FILE: &str = "corpus.txt";

/// Write a corpus under `out_dir`: `tracks/<person_id>.txt` with crops
/// under `tracks/crops/`, and the index `corpus.txt`.
pub fn write_corpus(tracks: &[CorpusTrack], out_dir: &Path) -> Result<CorpusIndex> {
    let dir = out_dir.join("tracks");
    std::fs::create_dir_all(&dir).map_err(|e| GrarError::io(&dir, e))?;
    tracks
        .par_iter()
        .map(|t| {
            let pid = &t.synth.track.poses.person_id;
            write_tracks(&out_dir.join(track_relpath(pid)), std::slice::from_ref(&t.synth.track))
        })
        .collect::<Result<Vec<()>>>()?;
    let index = CorpusIndex {
        entries: tracks
            .iter()
            .map(|t| CorpusEntry {
                tracks_relpath: track_relpath(&t.synth.track.poses.person_id),
                person_id: t.synth.track.poses.person_id.clone(),
                label: t.synth.label.clone(),
                split: t.split,
            })
            .collect(),
    };
    index.write(&out_dir.join(CORPUS_INDEX_FILE))?;
    Ok(index)
}

pub fn generate_corpus(spec: &CorpusSpec, out_dir: &Path) -> Result<CorpusIndex> {
    write_corpus(&generate_corpus_tracks(spec)?, out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corrupt(outlier: f64, occlusion: f64, clip: f64) -> CorruptionSpec {
        CorruptionSpec {
            outlier_rate: outlier,
            occlusion_rate: occlusion,
            box_clip_rate: clip,
            seed: 11,
        }
    }

    #[test]
    fn clean_track_has_clean_truth() {
        for a in ALL_ACTIONS {
            let t = generate_track(&ActionSpec::preset(a), 30, &CorruptionSpec::clean(0), 5, "p").unwrap();
            assert!(t.truth.is_clean());
            assert_eq!(t.track.poses.len(), 30);
            for (f, c) in t.track.poses.frames.iter().zip(&t.track.crops.frames) {
                assert_eq!(f.bbox.raster_dims(), c.image.dimensions());
                for k in &f.pose.joints {
                    assert!(f.bbox.contains(k.x, k.y), "{a}: joint outside box");
                    assert!(k.confidence >= 0.75);
                }
            }
        }
    }

    #[test]
    fn outlier_count_follows_quantile_rule() {
        let t = generate_track(&ActionSpec::preset(Action::Walk), 100, &corrupt(0.1, 0.0, 0.0), 1, "p").unwrap();
        assert_eq!(t.truth.outlier.iter().filter(|&&b| b).count(), 10);
        for (f, &o) in t.track.poses.frames.iter().zip(&t.truth.outlier) {
            if o {
                assert!(f.pose.joints.iter().all(|k| k.confidence == 1.0));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(quantile_frames(7, 0.5, &mut rng).iter().filter(|&&b| b).count(), 4);
        assert_eq!(quantile_frames(7, 0.0, &mut rng), vec![false; 7]);
    }

    #[test]
    fn occlusion_lowers_confidence_and_paints_gray() {
        let t = generate_track(&ActionSpec::preset(Action::Idle), 40, &corrupt(0.0, 0.5, 0.0), 2, "p").unwrap();
        let frames: Vec<usize> = (0..40).filter(|&i| t.truth.occluded[i].iter().any(|&b| b)).collect();
        assert!(!frames.is_empty());
        for i in frames {
            let f = &t.track.poses.frames[i];
            for (j, &o) in t.truth.occluded[i].iter().enumerate() {
                assert_eq!(f.pose.joints[j].confidence == OCCLUDED_CONFIDENCE, o);
            }
            let crop = &t.track.crops.frames[i].image;
            assert!(crop.pixels().any(|p| p.0 == OCCLUDER_COLOR));
        }
    }

    #[test]
    fn clipped_boxes_leave_a_joint_outside() {
        let t = generate_track(&ActionSpec::preset(Action::Run), 40, &corrupt(0.0, 0.0, 0.5), 3, "p").unwrap();
        let n = t.truth.box_clipped.iter().filter(|&&b| b).count();
        assert!(n >= 15, "{n}");
        for (f, &c) in t.track.poses.frames.iter().zip(&t.truth.box_clipped) {
            let outside = f.pose.joints.iter().any(|k| !f.bbox.contains(k.x, k.y));
            assert_eq!(outside, c);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = ActionSpec::preset(Action::Jump);
        let c = corrupt(0.1, 0.2, 0.1);
        let a = generate_track(&spec, 20, &c, 9, "x").unwrap();
        let b = generate_track(&spec, 20, &c, 9, "x").unwrap();
        assert_eq!(a.track, b.track);
        assert_eq!(a.truth, b.truth);
        let other = generate_track(&spec, 20, &c, 10, "x").unwrap();
        assert_ne!(a.track, other.track);
    }

    #[test]
    fn corruption_leaves_motion_untouched() {
        let spec = ActionSpec::preset(Action::Walk);
        let clean = generate_track(&spec, 30, &CorruptionSpec::clean(4), 9, "x").unwrap();
        let dirty = generate_track(&spec, 30, &corrupt(0.2, 0.0, 0.0), 9, "x").unwrap();
        for i in (0..30).filter(|&i| !dirty.truth.outlier[i]) {
            assert_eq!(clean.track.poses.frames[i], dirty.track.poses.frames[i]);
        }
    }

    #[test]
    fn too_few_frames_rejected() {
        assert!(generate_track(&ActionSpec::preset(Action::Walk), 7, &CorruptionSpec::clean(0), 0, "p").is_err());
        assert!(corrupt(1.5, 0.0, 0.0).validate().is_err());
    }

    #[test]
    fn corpus_split_is_stratified() {
        let spec = CorpusSpec {
            per_class: 6,
            frames: 8,
            ..Default::default()
        };
        let tracks = generate_corpus_tracks(&spec).unwrap();
        assert_eq!(tracks.len(), 30);
        for a in ALL_ACTIONS {
            let train = tracks
                .iter()
                .filter(|t| t.synth.label == a.name() && t.split == Split::Train)
                .count();
            assert_eq!(train, 4);
        }
        assert_eq!(train_count(30), 20);
        assert_eq!(train_count(2), 1);
        assert_eq!(train_count(1), 1);
    }

    #[test]
    fn corpus_round_trips_through_disk() {
        let spec = CorpusSpec {
            classes: vec![Action::Walk, Action::Wave],
            per_class: 2,
            frames: 8,
            ..Default::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let idx = generate_corpus(&spec, dir.path()).unwrap();
        assert_eq!(idx.entries.len(), 4);
        let again = CorpusIndex::read(&dir.path().join(CORPUS_INDEX_FILE)).unwrap();
        assert_eq!(again, idx);
        let loaded = crate::pose::load_tracks(&dir.path().join(&idx.entries[0].tracks_relpath)).unwrap();
        let original = generate_corpus_tracks(&spec).unwrap();
        assert_eq!(loaded[0], original[0].synth.track);
    }
}
