//! Rasterizes a figure over a textured background, in frame coordinates.

use image::{Rgb, RgbImage};

use crate::pose::{BoundingBox, NUM_JOINTS};
use crate::rng::derive_index;

pub const OCCLUDER_COLOR: [u8; 3] = [128, 128, 128];

/// Colours and stroke widths of one track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Appearance {
    pub shirt: [u8; 3],
    pub pants: [u8; 3],
    pub skin: [u8; 3],
    pub background: [[u8; 3]; 2],
    pub checker_px: f64,
    pub noise_amplitude: i32,
    pub noise_seed: u64,
    pub limb_radius: f64,
    pub torso_radius: f64,
    pub head_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

#[derive(Debug, Clone, Copy)]
struct Capsule {
    a: (f64, f64),
    b: (f64, f64),
    r: f64,
    color: [u8; 3],
}

impl Capsule {
    fn hit(&self, p: (f64, f64)) -> bool {
        let (dx, dy) = (self.b.0 - self.a.0, self.b.1 - self.a.1);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p.0 - self.a.0) * dx + (p.1 - self.a.1) * dy) / len2).clamp(0.0, 1.0)
        };
        let (cx, cy) = (self.a.0 + t * dx, self.a.1 + t * dy);
        (p.0 - cx).powi(2) + (p.1 - cy).powi(2) <= self.r * self.r
    }

    fn extent(&self) -> Rect {
        Rect {
            x_min: self.a.0.min(self.b.0) - self.r,
            y_min: self.a.1.min(self.b.1) - self.r,
            x_max: self.a.0.max(self.b.0) + self.r,
            y_max: self.a.1.max(self.b.1) + self.r,
        }
    }
}

/// A figure in one frame, with an optional occluder drawn over it.
#[derive(Debug, Clone)]
pub struct Scene {
    capsules: Vec<Capsule>,
    pub occluder: Option<Rect>,
}

fn mid(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0)
}

impl Scene {
    /// Paint order: legs, torso, arms, head.
    pub fn new(joints: &[(f64, f64); NUM_JOINTS], look: &Appearance) -> Self {
        let limb = |a: usize, b: usize, color| Capsule {
            a: joints[a],
            b: joints[b],
            r: look.limb_radius,
            color,
        };
        let neck = mid(joints[5], joints[6]);
        let pelvis = mid(joints[11], joints[12]);
        let capsules = vec![
            limb(11, 13, look.pants),
            limb(13, 15, look.pants),
            limb(12, 14, look.pants),
            limb(14, 16, look.pants),
            Capsule {
                a: neck,
                b: pelvis,
                r: look.torso_radius,
                color: look.shirt,
            },
            limb(5, 6, look.shirt),
            limb(11, 12, look.pants),
            limb(5, 7, look.shirt),
            limb(7, 9, look.skin),
            limb(6, 8, look.shirt),
            limb(8, 10, look.skin),
            Capsule {
                a: joints[0],
                b: joints[0],
                r: look.head_radius,
                color: look.skin,
            },
        ];
        Scene {
            capsules,
            occluder: None,
        }
    }

    /// Smallest rectangle covering the figure's pixels.
    pub fn extent(&self) -> Rect {
        self.capsules.iter().map(Capsule::extent).fold(
            Rect {
                x_min: f64::INFINITY,
                y_min: f64::INFINITY,
                x_max: f64::NEG_INFINITY,
                y_max: f64::NEG_INFINITY,
            },
            |a, b| Rect {
                x_min: a.x_min.min(b.x_min),
                y_min: a.y_min.min(b.y_min),
                x_max: a.x_max.max(b.x_max),
                y_max: a.y_max.max(b.y_max),
            },
        )
    }

    fn background(look: &Appearance, x: i64, y: i64) -> [u8; 3] {
        let cx = (x as f64 / look.checker_px).floor() as i64;
        let cy = (y as f64 / look.checker_px).floor() as i64;
        let base = look.background[(cx + cy).rem_euclid(2) as usize];
        let h = derive_index(derive_index(look.noise_seed, x as u64), y as u64);
        let span = 2 * look.noise_amplitude as u64 + 1;
        let n = (h % span) as i32 - look.noise_amplitude;
        base.map(|c| (c as i32 + n).clamp(0, 255) as u8)
    }

    /// Pixel `(i, j)` of the crop samples frame point `(x_min + i + 0.5, y_min + j + 0.5)`.
    pub fn render(&self, look: &Appearance, bbox: &BoundingBox) -> RgbImage {
        let (w, h) = bbox.raster_dims();
        let x0 = bbox.x_min.floor() as i64;
        let y0 = bbox.y_min.floor() as i64;
        RgbImage::from_fn(w, h, |i, j| {
            let (x, y) = (x0 + i as i64, y0 + j as i64);
            let p = (x as f64 + 0.5, y as f64 + 0.5);
            if self.occluder.is_some_and(|r| r.contains(p.0, p.1)) {
                return Rgb(OCCLUDER_COLOR);
            }
            let c = self
                .capsules
                .iter()
                .rev()
                .find(|c| c.hit(p))
                .map(|c| c.color)
                .unwrap_or_else(|| Self::background(look, x, y));
            Rgb(c)
        })
    }
}
