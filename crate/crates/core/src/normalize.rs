//! Box-relative, scale-free joint coordinates.

use crate::error::{GrarError, Result};
use crate::pose::{BoundingBox, Pose, PoseSequence, DEFAULT_CONF_THRESHOLD, NUM_JOINTS};

pub const POSE_DIMS: usize = 2 * NUM_JOINTS;

/// Joint coordinates divided by box width/height, `[x0, y0, x1, y1, ...]`.
/// Joints under the confidence threshold are masked out and zeroed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedPose {
    pub coords: [f64; POSE_DIMS],
    pub mask: [bool; NUM_JOINTS],
    pub frame_index: u32,
}

impl NormalizedPose {
    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn joint(&self, j: usize) -> (f64, f64) {
        (self.coords[2 * j], self.coords[2 * j + 1])
    }
}

pub fn normalize_pose(
    pose: &Pose,
    bbox: &BoundingBox,
    conf_threshold: f64,
    frame_index: u32,
) -> Result<NormalizedPose> {
    let (w, h) = (bbox.width(), bbox.height());
    if !(w >= 1.0 && h >= 1.0) {
        return Err(GrarError::DegenerateBox {
            frame_index,
            width: w,
            height: h,
        });
    }
    let mut coords = [0.0; POSE_DIMS];
    let mut mask = [false; NUM_JOINTS];
    for (j, kp) in pose.joints.iter().enumerate() {
        if kp.confidence >= conf_threshold {
            mask[j] = true;
            coords[2 * j] = (kp.x - bbox.x_min) / w;
            coords[2 * j + 1] = (kp.y - bbox.y_min) / h;
        }
    }
    Ok(NormalizedPose {
        coords,
        mask,
        frame_index,
    })
}

pub fn normalize_sequence(seq: &PoseSequence) -> Result<Vec<NormalizedPose>> {
    normalize_sequence_with(seq, DEFAULT_CONF_THRESHOLD)
}

pub fn normalize_sequence_with(seq: &PoseSequence, conf_threshold: f64) -> Result<Vec<NormalizedPose>> {
    seq.frames
        .iter()
        .map(|f| normalize_pose(&f.pose, &f.bbox, conf_threshold, f.frame_index))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::fixtures::*;
    use crate::pose::Frame;

    #[test]
    fn corner_and_center() {
        let b = standing_box();
        let mut pose = standing_pose(1.0);
        pose.joints[0].x = b.x_min;
        pose.joints[0].y = b.y_min;
        pose.joints[1].x = 150.0;
        pose.joints[1].y = 150.0;
        let n = normalize_pose(&pose, &b, 0.3, 0).unwrap();
        assert_eq!(n.joint(0), (0.0, 0.0));
        assert_eq!(n.joint(1), (0.5, 0.5));
    }

    #[test]
    fn masked_joints_zeroed() {
        let mut pose = standing_pose(1.0);
        pose.joints[3].confidence = 0.1;
        let n = normalize_pose(&pose, &standing_box(), 0.3, 0).unwrap();
        assert!(!n.mask[3]);
        assert_eq!(n.joint(3), (0.0, 0.0));
        assert_eq!(n.valid_count(), 16);
    }

    #[test]
    fn translated_and_scaled_track_matches() {
        let seq = sequence(3);
        let moved = PoseSequence::new(
            "p0",
            seq.frames
                .iter()
                .map(|f| {
                    let (ox, oy) = (f.bbox.x_min, f.bbox.y_min);
                    let map = |x: f64, y: f64| (ox + 37.0 + 2.0 * (x - ox), oy - 12.0 + 2.0 * (y - oy));
                    let mut pose = f.pose;
                    for j in pose.joints.iter_mut() {
                        (j.x, j.y) = map(j.x, j.y);
                    }
                    let (x0, y0) = map(f.bbox.x_min, f.bbox.y_min);
                    let (x1, y1) = map(f.bbox.x_max, f.bbox.y_max);
                    Frame {
                        frame_index: f.frame_index,
                        pose,
                        bbox: BoundingBox::new(x0, y0, x1, y1).unwrap(),
                    }
                })
                .collect(),
        )
        .unwrap();
        let a = normalize_sequence(&seq).unwrap();
        let b = normalize_sequence(&moved).unwrap();
        for (pa, pb) in a.iter().zip(&b) {
            for (x, y) in pa.coords.iter().zip(&pb.coords) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn degenerate_box_reports_frame() {
        let mut seq = sequence(3);
        seq.frames[2].bbox = BoundingBox {
            x_min: 0.0,
            y_min: 0.0,
            x_max: 0.5,
            y_max: 10.0,
        };
        let err = normalize_sequence(&seq).unwrap_err();
        assert!(matches!(err, GrarError::DegenerateBox { frame_index: 2, .. }));
    }
}
