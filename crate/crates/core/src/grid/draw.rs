//! Skeleton overdraw ("pose attention") on key-pose crops.
//!
//! Rasterization rules, fixed so renders are reproducible:
//!
//! * A joint at crop position `(x, y)` lives in pixel `(floor(x), floor(y))`.
//! * Joints are discs: every pixel `(i, j)` with
//!   `(i - ci)^2 + (j - cj)^2 <= r^2` around the joint pixel `(ci, cj)`.
//!   With `r = 2` that is 13 pixels.
//! * Limbs join two joint pixels. Stepping one pixel at a time along the
//!   major axis, the minor coordinate is the exact interpolation rounded
//!   half away from zero; each step paints that pixel and its neighbour one
//!   further along the minor axis (+1), giving a 2 px wide stroke.
//! * Limbs are painted first, in [`SKELETON`] order, then joint discs.
//!   Only joints at or above the confidence threshold are drawn, and a limb
//!   needs both ends valid. Pixels outside the crop are clipped.

use image::{Rgb, RgbImage};

use crate::pose::{BoundingBox, Pose, DEFAULT_CONF_THRESHOLD, NUM_JOINTS, SKELETON};

pub const JOINT_RADIUS: i64 = 2;

pub const JOINT_COLOR: [u8; 3] = [255, 255, 255];

/// Colour of each limb in [`SKELETON`] order.
pub const LIMB_COLORS: [[u8; 3]; 19] = [
    [255, 128, 0],   // left shin
    [255, 178, 0],   // left thigh
    [0, 160, 255],   // right shin
    [0, 220, 255],   // right thigh
    [255, 255, 0],   // hips
    [255, 220, 60],  // left flank
    [200, 255, 60],  // right flank
    [255, 255, 120], // shoulders
    [255, 80, 80],   // left upper arm
    [80, 255, 80],   // right upper arm
    [255, 120, 160], // left forearm
    [120, 255, 160], // right forearm
    [255, 0, 255],   // eyes
    [230, 0, 255],   // nose - left eye
    [200, 0, 255],   // nose - right eye
    [255, 60, 200],  // left eye - ear
    [200, 60, 255],  // right eye - ear
    [255, 160, 255], // left ear - shoulder
    [220, 160, 255], // right ear - shoulder
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoseStyle {
    /// Limb colours from [`LIMB_COLORS`], joints in [`JOINT_COLOR`].
    Palette,
    /// Everything in one colour.
    Mono([u8; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawConfig {
    pub conf_threshold: f64,
    pub draw_limbs: bool,
    pub style: PoseStyle,
}

impl Default for DrawConfig {
    fn default() -> Self {
        DrawConfig {
            conf_threshold: DEFAULT_CONF_THRESHOLD,
            draw_limbs: true,
            style: PoseStyle::Palette,
        }
    }
}

fn joint_pixel(pose: &Pose, bbox: &BoundingBox, j: usize) -> (i64, i64) {
    let k = &pose.joints[j];
    ((k.x - bbox.x_min).floor() as i64, (k.y - bbox.y_min).floor() as i64)
}

fn div_round_half_away(num: i64, den: i64) -> i64 {
    debug_assert!(den > 0);
    let q = (2 * num.abs() + den) / (2 * den);
    if num < 0 {
        -q
    } else {
        q
    }
}

/// Pixels of a 2 px limb stroke, unclipped.
pub fn limb_pixels(from: (i64, i64), to: (i64, i64)) -> Vec<(i64, i64)> {
    let (dx, dy) = (to.0 - from.0, to.1 - from.1);
    let mut out = Vec::new();
    if dx.abs() >= dy.abs() {
        let steps = dx.abs();
        let sx = dx.signum();
        for t in 0..=steps {
            let x = from.0 + t * sx;
            let y = from.1
                + if steps == 0 {
                    0
                } else {
                    div_round_half_away(t * dy, steps)
                };
            out.push((x, y));
            out.push((x, y + 1));
        }
    } else {
        let steps = dy.abs();
        let sy = dy.signum();
        for t in 0..=steps {
            let y = from.1 + t * sy;
            let x = from.0 + div_round_half_away(t * dx, steps);
            out.push((x, y));
            out.push((x + 1, y));
        }
    }
    out
}

/// Pixels of a joint disc, unclipped.
pub fn disc_pixels(center: (i64, i64), radius: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            if dx * dx + dy * dy <= radius * radius {
                out.push((center.0 + dx, center.1 + dy));
            }
        }
    }
    out
}

fn paint(img: &mut RgbImage, pixels: &[(i64, i64)], color: [u8; 3]) {
    let (w, h) = img.dimensions();
    for &(x, y) in pixels {
        if x >= 0 && y >= 0 && (x as u32) < w && (y as u32) < h {
            img.put_pixel(x as u32, y as u32, Rgb(color));
        }
    }
}

/// Draw `pose` (frame coordinates) onto a crop covering `bbox`.
pub fn draw_pose_attention(crop: &RgbImage, pose: &Pose, bbox: &BoundingBox) -> RgbImage {
    draw_pose_with(crop, pose, bbox, &DrawConfig::default())
}

pub fn draw_pose_with(crop: &RgbImage, pose: &Pose, bbox: &BoundingBox, cfg: &DrawConfig) -> RgbImage {
    let mut out = crop.clone();
    let valid: Vec<bool> = (0..NUM_JOINTS).map(|j| pose.is_valid(j, cfg.conf_threshold)).collect();
    if cfg.draw_limbs {
        for (limb, &(a, b)) in SKELETON.iter().enumerate() {
            if valid[a] && valid[b] {
                let color = match cfg.style {
                    PoseStyle::Palette => LIMB_COLORS[limb],
                    PoseStyle::Mono(c) => c,
                };
                let px = limb_pixels(joint_pixel(pose, bbox, a), joint_pixel(pose, bbox, b));
                paint(&mut out, &px, color);
            }
        }
    }
    let joint_color = match cfg.style {
        PoseStyle::Palette => JOINT_COLOR,
        PoseStyle::Mono(c) => c,
    };
    for j in (0..NUM_JOINTS).filter(|&j| valid[j]) {
        paint(
            &mut out,
            &disc_pixels(joint_pixel(pose, bbox, j), JOINT_RADIUS),
            joint_color,
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::fixtures::*;
    use crate::pose::Keypoint;
    use std::collections::HashMap;

    fn textured(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            let v = if (x / 4 + y / 4) % 2 == 0 { 90 } else { 140 };
            Rgb([v, (v + (x % 7) as u8), 60])
        })
    }

    /// Independent mask: discs by Euclidean test on the bounding square,
    /// limbs by floating-point interpolation along the major axis.
    fn oracle_mask(pose: &Pose, bbox: &BoundingBox, w: u32, h: u32) -> HashMap<(u32, u32), [u8; 3]> {
        let mut mask = HashMap::new();
        let cell = |k: &Keypoint| ((k.x - bbox.x_min).floor(), (k.y - bbox.y_min).floor());
        let mut put = |x: f64, y: f64, c: [u8; 3]| {
            if x >= 0.0 && y >= 0.0 && x < w as f64 && y < h as f64 {
                mask.insert((x as u32, y as u32), c);
            }
        };
        for (limb, (a, b)) in SKELETON.iter().enumerate() {
            let (ja, jb) = (&pose.joints[*a], &pose.joints[*b]);
            if ja.confidence < 0.3 || jb.confidence < 0.3 {
                continue;
            }
            let (x0, y0) = cell(ja);
            let (x1, y1) = cell(jb);
            let (dx, dy) = (x1 - x0, y1 - y0);
            let steps = dx.abs().max(dy.abs()) as i64;
            for t in 0..=steps {
                let lerp = |d: f64| if steps == 0 { 0.0 } else { (t as f64 * d) / steps as f64 };
                if dx.abs() >= dy.abs() {
                    let x = x0 + dx.signum() * t as f64;
                    let y = y0 + lerp(dy).round();
                    put(x, y, LIMB_COLORS[limb]);
                    put(x, y + 1.0, LIMB_COLORS[limb]);
                } else {
                    let y = y0 + dy.signum() * t as f64;
                    let x = x0 + lerp(dx).round();
                    put(x, y, LIMB_COLORS[limb]);
                    put(x + 1.0, y, LIMB_COLORS[limb]);
                }
            }
        }
        for k in pose.joints.iter().filter(|k| k.confidence >= 0.3) {
            let (cx, cy) = cell(k);
            for y in (cy as i64 - 3)..=(cy as i64 + 3) {
                for x in (cx as i64 - 3)..=(cx as i64 + 3) {
                    let (fx, fy) = (x as f64 - cx, y as f64 - cy);
                    if (fx * fx + fy * fy).sqrt() <= 2.0 {
                        put(x as f64, y as f64, JOINT_COLOR);
                    }
                }
            }
        }
        mask
    }

    #[test]
    fn invalid_pose_is_identity() {
        let crop = textured(100, 200);
        let pose = standing_pose(0.1);
        assert_eq!(draw_pose_attention(&crop, &pose, &standing_box()), crop);
    }

    #[test]
    fn single_joint_changes_thirteen_pixels() {
        let crop = textured(100, 200);
        let mut pose = standing_pose(0.0);
        pose.joints[0] = Keypoint {
            x: 150.0,
            y: 150.0,
            confidence: 1.0,
        };
        let out = draw_pose_attention(&crop, &pose, &standing_box());
        let changed = crop.pixels().zip(out.pixels()).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 13);
    }

    #[test]
    fn full_pose_differs_only_on_skeleton_mask() {
        let crop = textured(100, 200);
        let mut pose = standing_pose(1.0);
        pose.joints[4].confidence = 0.0;
        pose.joints[15].x = 190.7;
        let bbox = standing_box();
        let out = draw_pose_attention(&crop, &pose, &bbox);
        let mask = oracle_mask(&pose, &bbox, 100, 200);
        for (x, y, px) in out.enumerate_pixels() {
            match mask.get(&(x, y)) {
                Some(color) => assert_eq!(px.0, *color, "({x},{y})"),
                None => assert_eq!(px, crop.get_pixel(x, y), "({x},{y}) outside mask"),
            }
        }
    }

    #[test]
    fn limbs_are_two_pixels_wide() {
        assert_eq!(limb_pixels((0, 0), (3, 0)).len(), 8);
        assert_eq!(
            limb_pixels((0, 0), (0, 2)),
            vec![(0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (1, 2)]
        );
        assert_eq!(disc_pixels((0, 0), 2).len(), 13);
        assert_eq!(div_round_half_away(-3, 2), -2);
        assert_eq!(div_round_half_away(3, 2), 2);
        assert_eq!(div_round_half_away(1, 3), 0);
    }
}
