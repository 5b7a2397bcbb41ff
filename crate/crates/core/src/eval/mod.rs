//! Classifier and segmentation evaluation.

mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use report::{emit_report, read_report, render_report, DiversityRow, ReportFormat};

use crate::error::{Error, Result};
use crate::mask::{iou, PixelMask};
use crate::scoring::Ambiguity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    /// One point per distinct score, highest score first.
    pub points: Vec<PrPoint>,
    pub average_precision: f64,
}

/// Precision/recall at every distinct score (tied scores form one
/// threshold), and non-interpolated AP `sum_k (R_k - R_{k-1}) P_k`.
/// Returns `None` unless both classes are present.
fn pr_points(scores: &[f64], positives: &[bool]) -> Option<(Vec<PrPoint>, f64)> {
    let total_pos = positives.iter().filter(|&&p| p).count();
    if total_pos == 0 || total_pos == positives.len() {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = Vec::new();
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            tp += positives[order[i]] as usize;
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / total_pos as f64;
        let precision = tp as f64 / seen as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        points.push(PrPoint {
            threshold: s,
            recall,
            precision,
        });
    }
    Some((points, ap))
}

/// Average precision of `scores` for the positive flags; `None` when a class
/// is missing.
pub fn average_precision(scores: &[f64], positives: &[bool]) -> Option<f64> {
    pr_points(scores, positives).map(|(_, ap)| ap)
}

/// PR curve with unambiguous as the positive class.
pub fn pr_curve(scores: &BTreeMap<String, f64>, labels: &BTreeMap<String, Ambiguity>) -> Result<PrCurve> {
    check_same_ids(scores, labels)?;
    let s: Vec<f64> = scores.values().copied().collect();
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("scores".into()));
    }
    let p: Vec<bool> = labels.values().map(Ambiguity::is_positive).collect();
    let (points, average_precision) = pr_points(&s, &p).ok_or(Error::SingleClass)?;
    Ok(PrCurve {
        points,
        average_precision,
    })
}

fn check_same_ids<A, B>(a: &BTreeMap<String, A>, b: &BTreeMap<String, B>) -> Result<()> {
    if let Some(id) = a.keys().find(|k| !b.contains_key(*k)) {
        return Err(Error::IdMismatch(id.clone()));
    }
    if let Some(id) = b.keys().find(|k| !a.contains_key(*k)) {
        return Err(Error::IdMismatch(id.clone()));
    }
    Ok(())
}

/// Joint distribution of (judger, drawer) labels; cells sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    /// judger unambiguous, drawer unambiguous
    pub uu: f64,
    pub ua: f64,
    pub au: f64,
    pub aa: f64,
    pub overall_agreement: f64,
    pub images: usize,
}

pub fn agreement_matrix(
    judger: &BTreeMap<String, Ambiguity>,
    drawer: &BTreeMap<String, Ambiguity>,
) -> Result<AgreementMatrix> {
    check_same_ids(judger, drawer)?;
    if judger.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts = [[0usize; 2]; 2];
    for (id, j) in judger {
        let d = drawer[id];
        counts[(*j == Ambiguity::Ambiguous) as usize][(d == Ambiguity::Ambiguous) as usize] += 1;
    }
    let n = judger.len() as f64;
    let f = |c: usize| c as f64 / n;
    Ok(AgreementMatrix {
        uu: f(counts[0][0]),
        ua: f(counts[0][1]),
        au: f(counts[1][0]),
        aa: f(counts[1][1]),
        overall_agreement: f(counts[0][0] + counts[1][1]),
        images: judger.len(),
    })
}

/// Best IoU of a prediction against any of several valid ground truths.
pub fn best_overlap_eval(predicted: &PixelMask, ground_truths: &[PixelMask]) -> Result<f64> {
    if ground_truths.is_empty() {
        return Err(Error::EmptyGroundTruthSet);
    }
    let mut best = 0.0f64;
    for gt in ground_truths {
        best = best.max(iou(predicted, gt)?);
    }
    Ok(best)
}
