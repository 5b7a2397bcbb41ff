//! Global gradient-orientation descriptor.
//!
//! The image is resampled to 128x128, central-difference gradients are
//! binned into 8 unsigned orientations over `[0, pi)` weighted by magnitude,
//! accumulated over a 4x4 grid of cells, and each cell histogram is L2
//! normalized.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::GrayGrid;

pub const RESIZE: usize = 128;
pub const CELL_GRID: usize = 4;
pub const ORIENTATION_BINS: usize = 8;
pub const FEATURE_LEN: usize = CELL_GRID * CELL_GRID * ORIENTATION_BINS;
const NORM_EPS: f64 = 1e-6;
const MIN_SIDE: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature vector".into()));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Pixel-centre aligned bilinear resampling with edge clamping.
fn resize_bilinear(img: &GrayGrid, out_w: usize, out_h: usize) -> Vec<f64> {
    let sx = img.width as f64 / out_w as f64;
    let sy = img.height as f64 / out_h as f64;
    let max_x = (img.width - 1) as f64;
    let max_y = (img.height - 1) as f64;
    let mut out = Vec::with_capacity(out_w * out_h);
    for oy in 0..out_h {
        let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(img.height - 1);
        let ty = fy - y0 as f64;
        for ox in 0..out_w {
            let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(img.width - 1);
            let tx = fx - x0 as f64;
            let top = img.get(x0, y0) * (1.0 - tx) + img.get(x1, y0) * tx;
            let bottom = img.get(x0, y1) * (1.0 - tx) + img.get(x1, y1) * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

fn orientation_bin(gx: f64, gy: f64) -> usize {
    // fold into the upper half plane so the angle lies in [0, pi]
    let (gx, gy) = if gy < 0.0 || (gy == 0.0 && gx < 0.0) {
        (-gx, -gy)
    } else {
        (gx, gy)
    };
    let theta = gy.atan2(gx);
    let bin = (theta / (std::f64::consts::PI / ORIENTATION_BINS as f64)).floor() as usize;
    bin % ORIENTATION_BINS
}

pub fn extract_features(image: &GrayGrid) -> Result<FeatureVector> {
    if image.width < MIN_SIDE || image.height < MIN_SIDE {
        return Err(Error::ImageTooSmall {
            width: image.width,
            height: image.height,
        });
    }
    let n = RESIZE;
    let px = resize_bilinear(image, n, n);
    let cell = n / CELL_GRID;
    let mut hist = vec![0.0; FEATURE_LEN];
    for y in 0..n {
        let (up, down) = (y.saturating_sub(1), (y + 1).min(n - 1));
        for x in 0..n {
            let (left, right) = (x.saturating_sub(1), (x + 1).min(n - 1));
            let gx = 0.5 * (px[y * n + right] - px[y * n + left]);
            let gy = 0.5 * (px[down * n + x] - px[up * n + x]);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let c = (y / cell) * CELL_GRID + x / cell;
            hist[c * ORIENTATION_BINS + orientation_bin(gx, gy)] += mag;
        }
    }
    for h in hist.chunks_mut(ORIENTATION_BINS) {
        let norm = (h.iter().map(|v| v * v).sum::<f64>() + NORM_EPS * NORM_EPS).sqrt();
        h.iter_mut().for_each(|v| *v /= norm);
    }
    FeatureVector::new(hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob_image(w: usize, h: usize) -> GrayGrid {
        GrayGrid::from_fn(w, h, |x, y| {
            let (dx, dy) = (x as f64 - 0.31 * w as f64, y as f64 - 0.62 * h as f64);
            let (ex, ey) = (x as f64 - 0.7 * w as f64, y as f64 - 0.2 * h as f64);
            0.2 + 0.7 * (-(dx * dx / 40.0 + dy * dy / 90.0)).exp() + 0.3 * (-(ex * ex + ey * ey) / 25.0).exp()
        })
        .unwrap()
    }

    #[test]
    fn constant_image_is_zero() {
        let img = GrayGrid::from_fn(20, 30, |_, _| 0.4).unwrap();
        let f = extract_features(&img).unwrap();
        assert_eq!(f.len(), FEATURE_LEN);
        assert!(f.0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rotation_preserves_norm() {
        let img = blob_image(48, 40);
        // 90 degrees counter-clockwise: new(x, y) = old(w - 1 - y, x)
        let rot = GrayGrid::from_fn(img.height, img.width, |x, y| img.get(img.width - 1 - y, x)).unwrap();
        let a = extract_features(&img).unwrap();
        let b = extract_features(&rot).unwrap();
        assert!((a.norm() - b.norm()).abs() < 1e-9, "{} vs {}", a.norm(), b.norm());

        // the per-cell histograms are permuted: cell (cx, cy) -> (cy, 3 - cx)
        // and every orientation shifts by 4 bins
        let mut matched = 0;
        for cy in 0..CELL_GRID {
            for cx in 0..CELL_GRID {
                let src = &a.0[(cy * CELL_GRID + cx) * 8..][..8];
                let (rx, ry) = (cy, CELL_GRID - 1 - cx);
                let dst = &b.0[(ry * CELL_GRID + rx) * 8..][..8];
                let src_norm: f64 = src.iter().map(|v| v * v).sum::<f64>().sqrt();
                let dst_norm: f64 = dst.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((src_norm - dst_norm).abs() < 1e-9);
                if (0..8).all(|k| (src[k] - dst[(k + 4) % 8]).abs() < 1e-9) {
                    matched += 1;
                }
            }
        }
        assert!(matched >= 14, "only {matched} cells permute exactly");
    }

    #[test]
    fn vertical_step_puts_mass_in_bin_zero() {
        let img = GrayGrid::from_fn(64, 64, |x, _| if x < 29 { 0.1 } else { 0.9 }).unwrap();
        let f = extract_features(&img).unwrap();
        let mut nonzero_cells = 0;
        for h in f.0.chunks(ORIENTATION_BINS) {
            if h.iter().any(|&v| v > 0.0) {
                nonzero_cells += 1;
                assert!(h[0] > 0.99);
                assert!(h[1..].iter().all(|&v| v == 0.0));
            }
        }
        assert_eq!(nonzero_cells, CELL_GRID);
    }

    #[test]
    fn orientation_bins() {
        assert_eq!(orientation_bin(1.0, 0.0), 0);
        assert_eq!(orientation_bin(-1.0, 0.0), 0);
        assert_eq!(orientation_bin(0.0, 1.0), 4);
        assert_eq!(orientation_bin(0.0, -1.0), 4);
        assert_eq!(orientation_bin(1.0, 1.0), 2);
        assert_eq!(orientation_bin(-1.0, -1.0), 2);
        assert_eq!(orientation_bin(-1.0, 1.0), 6);
        assert_eq!(orientation_bin(-1.0, 1e-12), 7);
    }

    #[test]
    fn too_small() {
        let img = GrayGrid::from_fn(7, 30, |_, _| 0.0).unwrap();
        assert!(matches!(extract_features(&img), Err(Error::ImageTooSmall { .. })));
    }
}
