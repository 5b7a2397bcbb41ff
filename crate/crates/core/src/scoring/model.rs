//! Image → unambiguity score: gradient features, PCA, linear scorer.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{extract_features, fit_pca, project, score, train_scorer, Ambiguity, FeatureVector, PcaModel, TrainConfig, TrainReport};
use crate::error::{Error, Result};
use crate::mask::GrayGrid;

pub const DEFAULT_PCA_DIMS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringModel {
    pub pca: PcaModel,
    pub training: TrainReport,
}

impl ScoringModel {
    /// Fits PCA (at most `pca_dims`, fewer if the sample is small) and then
    /// the scorer on the projected features.
    pub fn fit(features: &[FeatureVector], labels: &[Ambiguity], pca_dims: usize, config: &TrainConfig) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: features.len(),
                actual: labels.len(),
            });
        }
        let limit = features.first().map_or(0, |f| f.len()).min(features.len().saturating_sub(1));
        let pca = fit_pca(features, pca_dims.min(limit))?;
        let projected = features.iter().map(|f| project(&pca, f)).collect::<Result<Vec<_>>>()?;
        let training = train_scorer(&projected, labels, config)?;
        Ok(Self { pca, training })
    }

    pub fn fit_images(images: &[GrayGrid], labels: &[Ambiguity], pca_dims: usize, config: &TrainConfig) -> Result<Self> {
        Self::fit(&features_for(images)?, labels, pca_dims, config)
    }

    pub fn score_features(&self, features: &FeatureVector) -> Result<f64> {
        score(&self.training.scorer, &project(&self.pca, features)?)
    }

    pub fn score_image(&self, image: &GrayGrid) -> Result<f64> {
        self.score_features(&extract_features(image)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

/// Features of every image, computed in parallel, in input order.
pub fn features_for(images: &[GrayGrid]) -> Result<Vec<FeatureVector>> {
    images.par_iter().map(extract_features).collect()
}
