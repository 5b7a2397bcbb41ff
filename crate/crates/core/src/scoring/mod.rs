//! Ambiguity labels and unambiguity scores.
//!
//! Labels come from crowd votes ("judgers") or from the drawn masks
//! themselves ("drawers"). Scores are real-valued; higher means more
//! confidently unambiguous, and the unambiguous class is the positive class
//! everywhere downstream.

mod detection;
mod features;
mod files;
mod model;
mod pca;
mod scorer;
mod subitizing;
mod votes;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use detection::{feng_unambiguity, nms, DetectionWindow, FENG_NMS_THRESHOLD};
pub use features::{extract_features, FeatureVector, CELL_GRID, FEATURE_LEN, ORIENTATION_BINS, RESIZE};
pub use files::{
    parse_detections, parse_label_file, parse_scores, parse_subitizing, read_detections, read_label_file,
    read_scores, read_subitizing, write_scores,
};
pub use model::{features_for, ScoringModel, DEFAULT_PCA_DIMS};
pub use pca::{fit_pca, project, PcaModel};
pub use scorer::{
    cross_validate, fit_linear, score, train_scorer, Expansion, LinearScorer, TrainConfig, TrainReport,
};
pub use subitizing::{ordering_to_scores, sos_priority_order, SubitizingDistribution};
pub use votes::{aggregate_votes, label_from_drawings, VoteRecord, DRAWER_IOU_THRESHOLD, VOTES_PER_IMAGE};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ambiguity {
    Unambiguous,
    Ambiguous,
}

impl Ambiguity {
    /// Training target: unambiguous is the positive class.
    pub fn sign(&self) -> f64 {
        match self {
            Ambiguity::Unambiguous => 1.0,
            Ambiguity::Ambiguous => -1.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        matches!(self, Ambiguity::Unambiguous)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Ambiguity::Unambiguous => "unambiguous",
            Ambiguity::Ambiguous => "ambiguous",
        }
    }
}

impl fmt::Display for Ambiguity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ambiguity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "unambiguous" | "U" | "u" => Ok(Ambiguity::Unambiguous),
            "ambiguous" | "A" | "a" => Ok(Ambiguity::Ambiguous),
            other => Err(Error::Parse(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Judgers,
    Drawers,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbiguityLabel {
    pub image_id: String,
    pub label: Ambiguity,
    pub source: LabelSource,
}
