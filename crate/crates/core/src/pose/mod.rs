//! Pose, box and track types.
//!
//! Joints follow the COCO-17 order:
//!
//! | idx | joint          | idx | joint          |
//! |-----|----------------|-----|----------------|
//! | 0   | nose           | 9   | left wrist     |
//! | 1   | left eye       | 10  | right wrist    |
//! | 2   | right eye      | 11  | left hip       |
//! | 3   | left ear       | 12  | right hip      |
//! | 4   | right ear      | 13  | left knee      |
//! | 5   | left shoulder  | 14  | right knee     |
//! | 6   | right shoulder | 15  | left ankle     |
//! | 7   | left elbow     | 16  | right ankle    |
//! | 8   | right elbow    |     |                |

mod io;

pub use io::{crop_relpath, load_tracks, load_tracks_with_options, write_tracks, LoadOptions};

use image::RgbImage;

use crate::error::{GrarError, Result};

pub const NUM_JOINTS: usize = 17;

/// Mean joint confidence under which a frame (or joint) counts as low quality.
pub const DEFAULT_CONF_THRESHOLD: f64 = 0.3;

pub const JOINT_NAMES: [&str; NUM_JOINTS] = [
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
];

/// COCO skeleton limbs as joint index pairs.
pub const SKELETON: [(usize, usize); 19] = [
    (15, 13),
    (13, 11),
    (16, 14),
    (14, 12),
    (11, 12),
    (5, 11),
    (6, 12),
    (5, 6),
    (5, 7),
    (6, 8),
    (7, 9),
    (8, 10),
    (1, 2),
    (0, 1),
    (0, 2),
    (1, 3),
    (2, 4),
    (3, 5),
    (4, 6),
];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

impl Keypoint {
    pub fn new(x: f64, y: f64, confidence: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(GrarError::InvalidTrack(format!("keypoint ({x}, {y}) is not finite")));
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(GrarError::InvalidTrack(format!(
                "keypoint confidence {confidence} outside [0, 1]"
            )));
        }
        Ok(Keypoint { x, y, confidence })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub joints: [Keypoint; NUM_JOINTS],
}

impl Pose {
    pub fn new(joints: [Keypoint; NUM_JOINTS]) -> Self {
        Pose { joints }
    }

    pub fn from_slice(joints: &[Keypoint]) -> Result<Self> {
        let joints: [Keypoint; NUM_JOINTS] = joints
            .try_into()
            .map_err(|_| GrarError::InvalidTrack(format!("pose needs {NUM_JOINTS} joints, got {}", joints.len())))?;
        Ok(Pose { joints })
    }

    pub fn mean_confidence(&self) -> f64 {
        self.joints.iter().map(|j| j.confidence).sum::<f64>() / NUM_JOINTS as f64
    }

    pub fn is_valid(&self, joint: usize, threshold: f64) -> bool {
        self.joints[joint].confidence >= threshold
    }

    pub fn valid_count(&self, threshold: f64) -> usize {
        self.joints.iter().filter(|j| j.confidence >= threshold).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let b = BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        if ![x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite()) {
            return Err(GrarError::InvalidTrack(format!("box {b:?} is not finite")));
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(GrarError::InvalidTrack(format!("box {b:?} has no area")));
        }
        Ok(b)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Raster size `(width, height)` of a crop covering this box.
    pub fn raster_dims(&self) -> (u32, u32) {
        (
            self.width().round().max(1.0) as u32,
            self.height().round().max(1.0) as u32,
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    pub fn contains_box(&self, other: &BoundingBox) -> bool {
        self.x_min <= other.x_min && self.y_min <= other.y_min && self.x_max >= other.x_max && self.y_max >= other.y_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_index: u32,
    pub pose: Pose,
    pub bbox: BoundingBox,
}

/// Per-person pose track. Frames are expected in strictly increasing
/// `frame_index` order; [`validate_sequence`] reports violations.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence {
    pub person_id: String,
    pub frames: Vec<Frame>,
}

impl PoseSequence {
    pub fn new(person_id: impl Into<String>, frames: Vec<Frame>) -> Result<Self> {
        let person_id = person_id.into();
        if frames.is_empty() {
            return Err(GrarError::InvalidTrack(format!("track `{person_id}` has no frames")));
        }
        Ok(PoseSequence { person_id, frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, frame_index: u32) -> Option<&Frame> {
        self.frames.iter().find(|f| f.frame_index == frame_index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CropFrame {
    pub frame_index: u32,
    pub image: RgbImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackCrops {
    pub person_id: String,
    pub frames: Vec<CropFrame>,
}

impl TrackCrops {
    pub fn get(&self, frame_index: u32) -> Option<&RgbImage> {
        self.frames
            .iter()
            .find(|c| c.frame_index == frame_index)
            .map(|c| &c.image)
    }
}

/// A pose track together with its crops.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub poses: PoseSequence,
    pub crops: TrackCrops,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SequenceWarning {
    LowConfidence {
        frame_index: u32,
        mean_confidence: f64,
    },
    NonMonotonic {
        position: usize,
        previous: u32,
        current: u32,
    },
}

pub fn validate_sequence(seq: &PoseSequence) -> Vec<SequenceWarning> {
    validate_sequence_with_threshold(seq, DEFAULT_CONF_THRESHOLD)
}

pub fn validate_sequence_with_threshold(seq: &PoseSequence, threshold: f64) -> Vec<SequenceWarning> {
    let mut warnings = Vec::new();
    for (pos, frame) in seq.frames.iter().enumerate() {
        if pos > 0 {
            let previous = seq.frames[pos - 1].frame_index;
            if frame.frame_index <= previous {
                warnings.push(SequenceWarning::NonMonotonic {
                    position: pos,
                    previous,
                    current: frame.frame_index,
                });
            }
        }
        let mean = frame.pose.mean_confidence();
        if mean < threshold {
            warnings.push(SequenceWarning::LowConfidence {
                frame_index: frame.frame_index,
                mean_confidence: mean,
            });
        }
    }
    warnings
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Upright figure inside a 100x200 box at (100, 50).
    pub fn standing_pose(confidence: f64) -> Pose {
        let pts: [(f64, f64); NUM_JOINTS] = [
            (150.0, 70.0),
            (145.0, 66.0),
            (155.0, 66.0),
            (140.0, 68.0),
            (160.0, 68.0),
            (130.0, 95.0),
            (170.0, 95.0),
            (125.0, 125.0),
            (175.0, 125.0),
            (122.0, 155.0),
            (178.0, 155.0),
            (138.0, 160.0),
            (162.0, 160.0),
            (136.0, 200.0),
            (164.0, 200.0),
            (135.0, 240.0),
            (165.0, 240.0),
        ];
        let mut joints = [Keypoint::default(); NUM_JOINTS];
        for (j, (x, y)) in joints.iter_mut().zip(pts) {
            *j = Keypoint { x, y, confidence };
        }
        Pose::new(joints)
    }

    pub fn standing_box() -> BoundingBox {
        BoundingBox::new(100.0, 50.0, 200.0, 250.0).unwrap()
    }

    pub fn sequence(n: u32) -> PoseSequence {
        let frames = (0..n)
            .map(|i| Frame {
                frame_index: i,
                pose: standing_pose(1.0),
                bbox: standing_box(),
            })
            .collect();
        PoseSequence::new("p0", frames).unwrap()
    }
}
