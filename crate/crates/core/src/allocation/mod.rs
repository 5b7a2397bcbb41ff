//! Redundancy budget allocation.
//!
//! Every image gets one annotation; a budget of `B` images then receives
//! `extra` redundant annotations each. Strategies differ only in how they
//! order images for redundancy:
//!
//! * greedy: lowest unambiguity score first (the prediction system),
//! * status quo: seeded random order,
//! * perfect: highest true redundant diversity first,
//! * SOS: subitizing-based priority (see [`crate::scoring::sos_priority_order`]),
//! * W&P: per-image agreement thresholds, see [`wp`].

mod curve;
mod wp;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use curve::{budget_diversity_curve, CurvePoint, CurveRow, DiversityCurve};
pub use wp::{agreement, wp_curve, wp_simulate, WpMode, WpOutcome};

use crate::diversity::{DiversityTable, Measure};
use crate::error::{Error, Result};

/// Seconds a worker needs to segment one object.
pub const SECONDS_PER_SEGMENTATION: f64 = 54.0;
pub const DEFAULT_STATUS_QUO_SEEDS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationPlan {
    /// Requested number of images to receive redundancy.
    pub budget: usize,
    /// Redundant annotations per selected image.
    pub extra: usize,
    /// Selected images, highest priority first.
    pub selected: Vec<String>,
    pub strategy: String,
}

impl AllocationPlan {
    pub fn selected_set(&self) -> BTreeSet<&str> {
        self.selected.iter().map(String::as_str).collect()
    }

    fn from_order(mut order: Vec<String>, budget: usize, extra: usize, strategy: &str) -> Self {
        if budget > order.len() {
            log::warn!(
                "budget {budget} exceeds batch size {}; selecting every image",
                order.len()
            );
        }
        order.truncate(budget);
        Self {
            budget,
            extra,
            selected: order,
            strategy: strategy.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Greedy,
    StatusQuo,
    Perfect,
    Sos,
    WpBb,
    WpSeg,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Greedy => "greedy",
            Strategy::StatusQuo => "status-quo",
            Strategy::Perfect => "perfect",
            Strategy::Sos => "sos",
            Strategy::WpBb => "wp-bb",
            Strategy::WpSeg => "wp-seg",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "greedy" => Strategy::Greedy,
            "status-quo" | "random" => Strategy::StatusQuo,
            "perfect" => Strategy::Perfect,
            "sos" => Strategy::Sos,
            "wp-bb" => Strategy::WpBb,
            "wp-seg" => Strategy::WpSeg,
            other => return Err(Error::parse(format!("unknown strategy {other:?}"))),
        })
    }
}

/// Batch ids ordered by ascending score, ties by ascending id.
pub fn priority_from_scores(batch: &[String], scores: &BTreeMap<String, f64>) -> Result<Vec<String>> {
    let mut scored = Vec::with_capacity(batch.len());
    for id in batch {
        let s = *scores.get(id).ok_or_else(|| Error::MissingScore(id.clone()))?;
        if !s.is_finite() {
            return Err(Error::NonFiniteScore(id.clone()));
        }
        scored.push((s, id));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    scored.dedup_by(|a, b| a.1 == b.1);
    Ok(scored.into_iter().map(|(_, id)| id.clone()).collect())
}

/// Gives redundancy to the `budget` images with the lowest unambiguity
/// scores. A budget larger than the batch selects the whole batch.
pub fn greedy_allocate(
    batch: &[String],
    scores: &BTreeMap<String, f64>,
    budget: usize,
    extra: usize,
) -> Result<AllocationPlan> {
    let order = priority_from_scores(batch, scores)?;
    Ok(AllocationPlan::from_order(order, budget, extra, Strategy::Greedy.as_str()))
}

/// Seeded uniform random order of the (sorted, deduplicated) ids.
pub fn random_order(image_ids: &[String], seed: u64) -> Vec<String> {
    let mut ids: Vec<String> = image_ids.to_vec();
    ids.sort();
    ids.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    ids
}

/// Status quo: a seeded uniform sample without replacement. Plans for
/// growing budgets under one seed are nested.
pub fn random_allocate(image_ids: &[String], budget: usize, extra: usize, seed: u64) -> AllocationPlan {
    AllocationPlan::from_order(random_order(image_ids, seed), budget, extra, Strategy::StatusQuo.as_str())
}

/// Images ordered by total redundant diversity, largest first.
pub fn perfect_order(table: &DiversityTable, extra: usize, measure: Measure) -> Result<Vec<String>> {
    let mut totals = BTreeMap::new();
    for id in table.image_ids() {
        totals.insert(id.clone(), -table.redundant(id, extra, measure)?);
    }
    let batch: Vec<String> = table.image_ids().cloned().collect();
    priority_from_scores(&batch, &totals)
}

/// Allocation with hindsight: top-`budget` images by `sum_{a=1..extra} d_ja`.
pub fn perfect_allocate(
    table: &DiversityTable,
    budget: usize,
    extra: usize,
    measure: Measure,
) -> Result<AllocationPlan> {
    let order = perfect_order(table, extra, measure)?;
    Ok(AllocationPlan::from_order(order, budget, extra, Strategy::Perfect.as_str()))
}

pub fn human_hours_saved(annotations_avoided: usize) -> f64 {
    annotations_avoided as f64 * SECONDS_PER_SEGMENTATION / 3600.0
}
