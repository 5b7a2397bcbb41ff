//! Agreement-threshold baselines: keep collecting annotations for an image
//! until the mean pairwise agreement of what has been collected reaches the
//! threshold, starting from two annotations. Annotator-skill weighting is
//! not modelled.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::curve::{fraction, CurvePoint, DiversityCurve};
use super::Strategy;
use crate::diversity::{AnnotationSet, DiversityTable, Measure};
use crate::error::{Error, Result};
use crate::mask::{bounding_box, iou, PixelMask};

pub const MIN_CONSUMED: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WpMode {
    /// Box IoU of the tight bounding boxes.
    Bb,
    /// Mask IoU.
    Seg,
}

impl WpMode {
    pub fn strategy(&self) -> Strategy {
        match self {
            WpMode::Bb => Strategy::WpBb,
            WpMode::Seg => Strategy::WpSeg,
        }
    }
}

impl fmt::Display for WpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WpMode::Bb => "bb",
            WpMode::Seg => "seg",
        })
    }
}

impl FromStr for WpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bb" => Ok(WpMode::Bb),
            "seg" => Ok(WpMode::Seg),
            other => Err(Error::parse(format!("unknown agreement mode {other:?}"))),
        }
    }
}

/// Similarity of two annotations under `mode`. Two empty masks agree fully;
/// an empty and a non-empty mask not at all.
pub fn agreement(a: &PixelMask, b: &PixelMask, mode: WpMode) -> Result<f64> {
    match mode {
        WpMode::Seg => iou(a, b),
        WpMode::Bb => {
            a.ensure_same_dims(b)?;
            match (bounding_box(a), bounding_box(b)) {
                (Ok(x), Ok(y)) => Ok(x.iou(&y)),
                (Err(_), Err(_)) => Ok(1.0),
                _ => Ok(0.0),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WpOutcome<'a> {
    pub consumed: usize,
    pub masks: &'a [PixelMask],
}

/// Pairwise agreement matrix of a pool.
fn agreement_matrix(pool: &[PixelMask], mode: WpMode) -> Result<Vec<Vec<f64>>> {
    let n = pool.len();
    let mut sim = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let s = agreement(&pool[i], &pool[j], mode)?;
            sim[i][j] = s;
            sim[j][i] = s;
        }
    }
    Ok(sim)
}

fn consumed_for(sim: &[Vec<f64>], threshold: f64) -> usize {
    let n = sim.len();
    let mut k = MIN_CONSUMED;
    // running sum of pairwise agreement among the first k annotations
    let mut pair_sum = sim[0][1];
    while k < n {
        let pairs = (k * (k - 1) / 2) as f64;
        if pair_sum / pairs >= threshold {
            break;
        }
        pair_sum += (0..k).map(|i| sim[i][k]).sum::<f64>();
        k += 1;
    }
    k
}

pub fn wp_simulate(pool: &[PixelMask], threshold: f64, mode: WpMode) -> Result<WpOutcome<'_>> {
    if pool.len() < MIN_CONSUMED {
        return Err(Error::PoolTooSmall(pool.len()));
    }
    let consumed = consumed_for(&agreement_matrix(pool, mode)?, threshold);
    Ok(WpOutcome {
        consumed,
        masks: &pool[..consumed],
    })
}

/// Sweeps `thresholds` over every image's pool (its first `1 + extra_max`
/// masks). One point per threshold: x is the redundant annotations consumed
/// beyond the first, over `N * extra_max`; y is the diversity of the consumed
/// annotations over the full-budget total.
pub fn wp_curve(
    sets: &BTreeMap<String, AnnotationSet>,
    table: &DiversityTable,
    thresholds: &[f64],
    mode: WpMode,
    measure: Measure,
    extra_max: usize,
) -> Result<DiversityCurve> {
    if thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) || thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidThresholds);
    }
    if sets.is_empty() || extra_max == 0 {
        return Err(Error::EmptyInput);
    }
    let n = sets.len();
    let pool_size = 1 + extra_max;
    let mut matrices = Vec::with_capacity(n);
    for (id, set) in sets {
        if set.len() < pool_size {
            return Err(Error::InsufficientAnnotations {
                image_id: id.clone(),
                available: set.len(),
                required: pool_size,
            });
        }
        matrices.push((id, agreement_matrix(&set.masks()[..pool_size], mode)?));
    }
    let full = table.full_total(extra_max, measure)?;

    let mut points: Vec<CurvePoint> = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let (mut consumed_total, mut captured) = (0usize, 0.0);
        for (id, sim) in &matrices {
            let consumed = consumed_for(sim, t);
            consumed_total += consumed;
            captured += table.prefix(id, consumed, measure)?;
        }
        points.push(CurvePoint {
            budget_fraction: (consumed_total - n) as f64 / (n * extra_max) as f64,
            captured_fraction: fraction(captured, full),
        });
    }
    points.sort_by(|a, b| a.budget_fraction.total_cmp(&b.budget_fraction));
    points.dedup_by(|a, b| a.budget_fraction == b.budget_fraction);
    Ok(DiversityCurve {
        strategy: mode.strategy().as_str().to_string(),
        measure,
        points,
        seeds_used: 1,
    })
}
