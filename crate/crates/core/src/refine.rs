//! Bounding-box enhancement: grow tracker boxes so every confident joint
//! lies inside.

use image::RgbImage;

use crate::pose::{BoundingBox, CropFrame, Pose, PoseSequence, Track, TrackCrops, DEFAULT_CONF_THRESHOLD};

/// Extra pixels added beyond an escaping joint.
pub const DEFAULT_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub conf_threshold: f64,
    pub margin: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            conf_threshold: DEFAULT_CONF_THRESHOLD,
            margin: DEFAULT_MARGIN,
        }
    }
}

/// Smallest box containing `bbox` and every joint with confidence at least
/// `conf_threshold`, with `margin` added on each side that had to grow.
pub fn refine_box(pose: &Pose, bbox: &BoundingBox, conf_threshold: f64, margin: f64) -> BoundingBox {
    let mut out = *bbox;
    for j in pose.joints.iter().filter(|j| j.confidence >= conf_threshold) {
        if j.x < bbox.x_min {
            out.x_min = out.x_min.min(j.x - margin);
        }
        if j.x > bbox.x_max {
            out.x_max = out.x_max.max(j.x + margin);
        }
        if j.y < bbox.y_min {
            out.y_min = out.y_min.min(j.y - margin);
        }
        if j.y > bbox.y_max {
            out.y_max = out.y_max.max(j.y + margin);
        }
    }
    out
}

pub fn refine_sequence(seq: &PoseSequence) -> PoseSequence {
    refine_sequence_with(seq, RefineConfig::default())
}

pub fn refine_sequence_with(seq: &PoseSequence, cfg: RefineConfig) -> PoseSequence {
    let mut out = seq.clone();
    for frame in &mut out.frames {
        frame.bbox = refine_box(&frame.pose, &frame.bbox, cfg.conf_threshold, cfg.margin);
    }
    out
}

/// Place `crop` (covering `original`) into a zero canvas covering `refined`.
pub fn pad_crop(crop: &RgbImage, original: &BoundingBox, refined: &BoundingBox) -> RgbImage {
    let (w, h) = refined.raster_dims();
    if (w, h) == crop.dimensions() && original == refined {
        return crop.clone();
    }
    let dx = (original.x_min - refined.x_min).round() as i64;
    let dy = (original.y_min - refined.y_min).round() as i64;
    let mut out = RgbImage::new(w, h);
    for (x, y, px) in crop.enumerate_pixels() {
        let tx = x as i64 + dx;
        let ty = y as i64 + dy;
        if tx >= 0 && ty >= 0 && (tx as u32) < w && (ty as u32) < h {
            out.put_pixel(tx as u32, ty as u32, *px);
        }
    }
    out
}

/// Refine every box of a track. Source frames are not available to this
/// pipeline, so crops are zero-padded out to the refined boxes.
pub fn refine_track(track: &Track, cfg: RefineConfig) -> Track {
    let poses = refine_sequence_with(&track.poses, cfg);
    let frames = track
        .crops
        .frames
        .iter()
        .map(|c| {
            let image = match (track.poses.frame(c.frame_index), poses.frame(c.frame_index)) {
                (Some(orig), Some(refined)) => pad_crop(&c.image, &orig.bbox, &refined.bbox),
                _ => c.image.clone(),
            };
            CropFrame {
                frame_index: c.frame_index,
                image,
            }
        })
        .collect();
    Track {
        poses,
        crops: TrackCrops {
            person_id: track.crops.person_id.clone(),
            frames,
        },
    }
}
