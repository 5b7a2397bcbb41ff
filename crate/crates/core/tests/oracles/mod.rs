//! Dense, deliberately naive reimplementations used as test oracles.
#![allow(dead_code)]

use std::collections::BTreeMap;

use redund_core::PixelMask;

fn fg(m: &PixelMask) -> Vec<(i64, i64)> {
    m.foreground().map(|(x, y)| (x as i64, y as i64)).collect()
}

/// Weighted F computed pixel by pixel: a full 7x7 window sum per pixel and
/// a scan over all reference pixels for every distance.
pub fn weighted_f(candidate: &PixelMask, reference: &PixelMask) -> Option<f64> {
    let (w, h) = (reference.width() as i64, reference.height() as i64);
    let g = |x: i64, y: i64| reference.get(x as usize, y as usize);
    let d = |x: i64, y: i64| candidate.get(x as usize, y as usize);
    let ref_fg = fg(reference);
    if ref_fg.is_empty() {
        return None;
    }
    if candidate.count() == 0 {
        return Some(0.0);
    }
    let sigma = 5.0f64;
    let mut window = [[0.0f64; 7]; 7];
    let mut total = 0.0;
    for (j, row) in window.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            let (dx, dy) = (i as f64 - 3.0, j as f64 - 3.0);
            *v = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            total += *v;
        }
    }
    let err = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= w || y >= h {
            0.0
        } else if g(x, y) != d(x, y) {
            1.0
        } else {
            0.0
        }
    };
    let alpha = 0.5f64.ln() / 5.0;
    let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            let e = err(x, y);
            if g(x, y) {
                let mut s = 0.0;
                for (j, row) in window.iter().enumerate() {
                    for (i, v) in row.iter().enumerate() {
                        s += v / total * err(x + i as i64 - 3, y + j as i64 - 3);
                    }
                }
                let ew = e.min(s);
                tp += 1.0 - ew;
                fneg += ew;
            } else {
                let delta = ref_fg
                    .iter()
                    .map(|&(gx, gy)| (((gx - x).pow(2) + (gy - y).pow(2)) as f64).sqrt())
                    .fold(f64::INFINITY, f64::min);
                fp += e * (2.0 - (alpha * delta).exp());
            }
        }
    }
    let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let r = if tp + fneg > 0.0 { tp / (tp + fneg) } else { 0.0 };
    Some(if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 })
}

/// Foreground pixels with a 4-neighbour outside the foreground or outside
/// the image.
pub fn boundary(m: &PixelMask) -> Vec<(i64, i64)> {
    let (w, h) = (m.width() as i64, m.height() as i64);
    let inside = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && m.get(x as usize, y as usize);
    fg(m)
        .into_iter()
        .filter(|&(x, y)| !(inside(x - 1, y) && inside(x + 1, y) && inside(x, y - 1) && inside(x, y + 1)))
        .collect()
}

/// Symmetric mean Chamfer distance from all pairwise boundary distances.
pub fn chamfer(a: &PixelMask, b: &PixelMask) -> Option<f64> {
    let (ba, bb) = (boundary(a), boundary(b));
    if ba.is_empty() || bb.is_empty() {
        return None;
    }
    let directed = |from: &[(i64, i64)], to: &[(i64, i64)]| {
        from.iter()
            .map(|&(x, y)| {
                to.iter()
                    .map(|&(u, v)| (((u - x).pow(2) + (v - y).pow(2)) as f64).sqrt())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / from.len() as f64
    };
    Some(0.5 * (directed(&ba, &bb) + directed(&bb, &ba)))
}

/// Pixel-wise strict majority.
pub fn majority(masks: &[PixelMask]) -> PixelMask {
    let (w, h) = masks[0].dims();
    PixelMask::from_fn(w, h, |x, y| 2 * masks.iter().filter(|m| m.get(x, y)).count() > masks.len()).unwrap()
}

/// Average precision from scratch: precision and recall recomputed over the
/// full list for every distinct threshold.
pub fn average_precision(scores: &[f64], positives: &[bool]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let total_pos = positives.iter().filter(|&&p| p).count() as f64;
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds {
        let mut tp = 0.0;
        let mut selected = 0.0;
        for (s, p) in scores.iter().zip(positives) {
            if *s >= t {
                selected += 1.0;
                if *p {
                    tp += 1.0;
                }
            }
        }
        let recall = tp / total_pos;
        ap += (recall - prev_recall) * (tp / selected);
        prev_recall = recall;
    }
    ap
}

/// Best achievable batch total over every subset of exactly `budget` images:
/// `sum_k d_k0 + sum_{j in subset} sum_{a=1..extra} d_ja`.
pub fn best_subset_total(values: &BTreeMap<String, Vec<f64>>, budget: usize, extra: usize) -> f64 {
    let rows: Vec<&Vec<f64>> = values.values().collect();
    let first: f64 = rows.iter().map(|r| r[0]).sum();
    let n = rows.len();
    let mut best = f64::NEG_INFINITY;
    for subset in 0u32..(1 << n) {
        if subset.count_ones() as usize != budget {
            continue;
        }
        let mut total = first;
        for (j, r) in rows.iter().enumerate() {
            if subset & (1 << j) != 0 {
                total += r[1..=extra].iter().sum::<f64>();
            }
        }
        best = best.max(total);
    }
    best
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }
}
