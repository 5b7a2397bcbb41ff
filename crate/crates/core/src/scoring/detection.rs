use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::BoundingBox;

/// Suppression threshold used when turning detections into a score.
pub const FENG_NMS_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionWindow {
    pub bbox: BoundingBox,
    pub confidence: f64,
}

/// Greedy non-maximum suppression. Windows are visited by descending
/// confidence (input order among equals) and dropped when their box IoU
/// with an already kept window exceeds `iou_threshold`.
pub fn nms(windows: &[DetectionWindow], iou_threshold: f64) -> Vec<DetectionWindow> {
    let mut order: Vec<&DetectionWindow> = windows.iter().collect();
    order.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    let mut kept: Vec<DetectionWindow> = Vec::new();
    for w in order {
        if kept.iter().all(|k| k.bbox.iou(&w.bbox) <= iou_threshold) {
            kept.push(*w);
        }
    }
    kept
}

/// Confidence gap between the two best windows surviving suppression, or
/// the lone survivor's confidence.
pub fn feng_unambiguity(windows: &[DetectionWindow]) -> Result<f64> {
    if windows.is_empty() {
        return Err(Error::NoWindows);
    }
    if let Some(w) = windows.iter().find(|w| !w.confidence.is_finite()) {
        return Err(Error::NonFinite(format!("detection confidence {}", w.confidence)));
    }
    let kept = nms(windows, FENG_NMS_THRESHOLD);
    Ok(match kept.as_slice() {
        [only] => only.confidence,
        [first, second, ..] => first.confidence - second.confidence,
        [] => unreachable!("nms keeps the best window"),
    })
}
