use crate::distance::distance_to;
use crate::error::{Error, Result};
use crate::mask::PixelMask;

/// Half-width of the truncated Gaussian window (7x7).
pub const WINDOW_RADIUS: usize = 3;
pub const WINDOW_SIGMA: f64 = 5.0;
/// Background importance falls to half its span at this distance.
pub const HALF_IMPORTANCE_DISTANCE: f64 = 5.0;

/// Normalized 1-D Gaussian taps; their outer product is the normalized 7x7
/// window.
fn gaussian_taps() -> [f64; 2 * WINDOW_RADIUS + 1] {
    let mut taps = [0.0; 2 * WINDOW_RADIUS + 1];
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - WINDOW_RADIUS as f64;
        *t = (-(d * d) / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Zero-padded separable convolution of `values` with the Gaussian window.
fn smooth(values: &[f64], w: usize, h: usize) -> Vec<f64> {
    let taps = gaussian_taps();
    let r = WINDOW_RADIUS as i64;
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for k in -r..=r {
                let sx = x as i64 + k;
                if sx >= 0 && sx < w as i64 {
                    acc += taps[(k + r) as usize] * values[y * w + sx as usize];
                }
            }
            rows[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for k in -r..=r {
                let sy = y as i64 + k;
                if sy >= 0 && sy < h as i64 {
                    acc += taps[(k + r) as usize] * rows[sy as usize * w + x];
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Weighted F-measure (beta = 1) of `candidate` against `reference`.
///
/// Errors inside the reference foreground are softened by the Gaussian
/// window, errors in the background are weighted up with their distance from
/// the reference foreground. An empty candidate scores 0.
pub fn weighted_fmeasure(candidate: &PixelMask, reference: &PixelMask) -> Result<f64> {
    candidate.ensure_same_dims(reference)?;
    let dist = distance_to(reference).ok_or(Error::EmptyReference)?;
    if candidate.is_empty() {
        return Ok(0.0);
    }
    let (w, h) = reference.dims();
    let truth = reference.bits();
    let error: Vec<f64> = truth
        .iter()
        .zip(candidate.bits())
        .map(|(&g, &d)| (g != d) as u8 as f64)
        .collect();
    let smoothed = smooth(&error, w, h);
    let alpha = 0.5f64.ln() / HALF_IMPORTANCE_DISTANCE;

    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for i in 0..w * h {
        if truth[i] {
            let e = error[i].min(smoothed[i]);
            tp += 1.0 - e;
            fn_ += e;
        } else if error[i] > 0.0 {
            fp += error[i] * (2.0 - (alpha * dist[i]).exp());
        }
    }
    Ok(f_from_counts(tp, fp, fn_))
}

pub(crate) fn f_from_counts(tp: f64, fp: f64, fn_: f64) -> f64 {
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}
