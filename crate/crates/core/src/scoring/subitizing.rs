use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-6;

/// Probabilities of 0, 1, 2, 3 and 4+ salient objects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubitizingDistribution(pub [f64; 5]);

impl SubitizingDistribution {
    pub fn validate(&self, image_id: &str) -> Result<()> {
        let invalid = |reason: String| Error::InvalidDistribution {
            image_id: image_id.to_string(),
            reason,
        };
        if self.0.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid(format!("entries must be finite and non-negative: {:?}", self.0)));
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(invalid(format!("sums to {sum}")));
        }
        Ok(())
    }

    /// Most probable count class; the lowest class wins ties.
    pub fn predicted(&self) -> usize {
        let mut best = 0;
        for k in 1..5 {
            if self.0[k] > self.0[best] {
                best = k;
            }
        }
        best
    }
}

/// Position of each predicted class in the confidence ranking: images
/// predicted to hold one object come first, then 2, 3, 4+ and finally 0.
fn group_rank(class: usize) -> usize {
    match class {
        1 => 0,
        2 => 1,
        3 => 2,
        4 => 3,
        _ => 4,
    }
}

/// Orders images by redundancy priority, highest first.
///
/// The confidence ranking lists one-object predictions from most to least
/// confident, followed by 2, 3, 4+ and 0-object predictions each from least
/// to most confident. Priority runs the other way, from the end of that
/// ranking. Ties fall back to ascending image id.
pub fn sos_priority_order(distributions: &BTreeMap<String, SubitizingDistribution>) -> Result<Vec<String>> {
    for (id, d) in distributions {
        d.validate(id)?;
    }
    let mut entries: Vec<(&String, usize, f64)> = distributions
        .iter()
        .map(|(id, d)| {
            let class = d.predicted();
            (id, class, d.0[class])
        })
        .collect();
    entries.sort_by(|a, b| priority_cmp(a.1, a.2, b.1, b.2).then_with(|| a.0.cmp(b.0)));
    Ok(entries.into_iter().map(|(id, _, _)| id.clone()).collect())
}

fn priority_cmp(class_a: usize, conf_a: f64, class_b: usize, conf_b: f64) -> Ordering {
    // later groups of the confidence ranking first
    group_rank(class_b)
        .cmp(&group_rank(class_a))
        .then_with(|| {
            if class_a == 1 {
                // most confident single-object predictions rank first, so the
                // least confident get priority
                conf_a.total_cmp(&conf_b)
            } else {
                conf_b.total_cmp(&conf_a)
            }
        })
}

/// Converts a priority ordering into unambiguity scores (rank position), so
/// that lowest-score-first allocation reproduces the ordering.
pub fn ordering_to_scores(order: &[String]) -> BTreeMap<String, f64> {
    order
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i as f64))
        .collect()
}
