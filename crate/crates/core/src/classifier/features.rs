use image::RgbImage;

use crate::error::{GrarError, Result};

pub const DEFAULT_SIDE: usize = 64;

/// Downsampled grayscale grid, row-major, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `(source index, overlap)` pairs for each of `out` bins spanning `src`.
fn area_weights(src: usize, out: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / out as f64;
    (0..out)
        .map(|o| {
            let lo = o as f64 * scale;
            let hi = (o + 1) as f64 * scale;
            let mut w = Vec::new();
            let mut s = lo.floor() as usize;
            while (s as f64) < hi && s < src {
                let overlap = hi.min(s as f64 + 1.0) - lo.max(s as f64);
                if overlap > 0.0 {
                    w.push((s, overlap));
                }
                s += 1;
            }
            w
        })
        .collect()
}

/// Luma (0.299 R + 0.587 G + 0.114 B), area-averaged to `side x side`.
pub fn featurize_raster(raster: &RgbImage, side: usize) -> Result<FeatureVector> {
    if side < 8 {
        return Err(GrarError::Config(format!("feature side {side} is below 8")));
    }
    let (w, h) = (raster.width() as usize, raster.height() as usize);
    if w == 0 || h == 0 {
        return Err(GrarError::Empty("raster"));
    }
    let gray: Vec<f64> = raster
        .pixels()
        .map(|p| (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64) / 255.0)
        .collect();
    let wx = area_weights(w, side);
    let wy = area_weights(h, side);
    let area = (w as f64 / side as f64) * (h as f64 / side as f64);

    // columns first, then rows
    let mut cols = vec![0.0; h * side];
    for y in 0..h {
        for (u, ws) in wx.iter().enumerate() {
            cols[y * side + u] = ws.iter().map(|&(x, a)| a * gray[y * w + x]).sum();
        }
    }
    let mut values = vec![0.0; side * side];
    for (v, ws) in wy.iter().enumerate() {
        for u in 0..side {
            let s: f64 = ws.iter().map(|&(y, a)| a * cols[y * side + u]).sum();
            values[v * side + u] = (s / area).clamp(0.0, 1.0);
        }
    }
    Ok(FeatureVector { values })
}
