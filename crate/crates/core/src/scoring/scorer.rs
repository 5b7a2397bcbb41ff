//! Max-margin linear scorer trained by deterministic subgradient descent on
//! `mean hinge + lambda * |w|^2`, with lambda picked by 5-fold
//! cross-validated average precision.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Ambiguity, FeatureVector};
use crate::error::{Error, Result};
use crate::eval::average_precision;

pub const MIN_TRAINING_SAMPLES: usize = 10;
pub const DEFAULT_FOLDS: usize = 5;
const MAX_STEP: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expansion {
    #[default]
    Linear,
    /// Appends every pairwise product `x_i * x_j` (i <= j).
    Quadratic,
}

impl Expansion {
    pub fn output_len(&self, input_len: usize) -> usize {
        match self {
            Expansion::Linear => input_len,
            Expansion::Quadratic => input_len + input_len * (input_len + 1) / 2,
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Expansion::Linear => v.to_vec(),
            Expansion::Quadratic => {
                let mut out = Vec::with_capacity(self.output_len(v.len()));
                out.extend_from_slice(v);
                for i in 0..v.len() {
                    for j in i..v.len() {
                        out.push(v[i] * v[j]);
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearScorer {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    #[serde(default)]
    pub expansion: Expansion,
}

impl LinearScorer {
    fn raw_score(&self, expanded: &[f64]) -> f64 {
        self.weights.iter().zip(expanded).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }
}

/// `w . v + b`, higher meaning more confidently unambiguous.
pub fn score(scorer: &LinearScorer, v: &FeatureVector) -> Result<f64> {
    let expanded = scorer.expansion.apply(v.as_slice());
    if expanded.len() != scorer.weights.len() {
        return Err(Error::LengthMismatch {
            expected: scorer.weights.len(),
            actual: expanded.len(),
        });
    }
    Ok(scorer.raw_score(&expanded))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda_grid: Vec<f64>,
    pub iterations: usize,
    pub folds: usize,
    pub seed: u64,
    pub expansion: Expansion,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_grid: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            iterations: 1000,
            folds: DEFAULT_FOLDS,
            seed: 0,
            expansion: Expansion::Linear,
        }
    }
}

/// Everything needed to reproduce a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub scorer: LinearScorer,
    pub config: TrainConfig,
    /// Mean validation AP per grid entry (`None` if no fold was usable).
    pub cv_average_precision: Vec<Option<f64>>,
    pub chosen_lambda: f64,
    /// Fold index of every training sample.
    pub fold_assignment: Vec<usize>,
}

fn validate(features: &[FeatureVector], labels: &[Ambiguity]) -> Result<usize> {
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: features.len(),
            actual: labels.len(),
        });
    }
    let dim = features.first().map(|f| f.len()).unwrap_or(0);
    if let Some(f) = features.iter().find(|f| f.len() != dim) {
        return Err(Error::LengthMismatch {
            expected: dim,
            actual: f.len(),
        });
    }
    Ok(dim)
}

fn has_both_classes(labels: &[Ambiguity]) -> bool {
    labels.iter().any(|l| l.is_positive()) && labels.iter().any(|l| !l.is_positive())
}

/// Fits one scorer at a fixed lambda. Starts from zero, steps
/// `min(1, 1 / (2 lambda t))` along the full-batch subgradient and returns the
/// average of the second half of the iterates.
pub fn fit_linear(
    features: &[FeatureVector],
    labels: &[Ambiguity],
    lambda: f64,
    iterations: usize,
    expansion: Expansion,
) -> Result<LinearScorer> {
    validate(features, labels)?;
    if !has_both_classes(labels) {
        return Err(Error::SingleClass);
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::NonFinite("lambda".into()));
    }
    let xs: Vec<Vec<f64>> = features.iter().map(|f| expansion.apply(f.as_slice())).collect();
    let ys: Vec<f64> = labels.iter().map(Ambiguity::sign).collect();
    let n = xs.len() as f64;
    let dim = xs[0].len();

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut grad = vec![0.0; dim];
    let mut avg_w = vec![0.0; dim];
    let mut avg_b = 0.0;
    let mut averaged = 0usize;
    let iterations = iterations.max(1);
    let start_avg = iterations / 2;

    for t in 1..=iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for (x, &y) in xs.iter().zip(&ys) {
            let margin = y * (w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b);
            if margin < 1.0 {
                for (g, xi) in grad.iter_mut().zip(x) {
                    *g -= y * xi;
                }
                grad_b -= y;
            }
        }
        let step = MAX_STEP.min(1.0 / (2.0 * lambda * t as f64));
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= step * (g / n + 2.0 * lambda * *wi);
        }
        b -= step * grad_b / n;

        if t > start_avg {
            averaged += 1;
            let k = averaged as f64;
            for (a, wi) in avg_w.iter_mut().zip(&w) {
                *a += (wi - *a) / k;
            }
            avg_b += (b - avg_b) / k;
        }
    }
    Ok(LinearScorer {
        weights: avg_w,
        bias: avg_b,
        lambda,
        expansion,
    })
}

/// Stratified fold assignment from a seeded permutation.
fn assign_folds(labels: &[Ambiguity], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut rng);
    let mut assignment = vec![0; labels.len()];
    let (mut pos, mut neg) = (0usize, 0usize);
    for i in order {
        let counter = if labels[i].is_positive() { &mut pos } else { &mut neg };
        assignment[i] = *counter % folds;
        *counter += 1;
    }
    assignment
}

/// Mean validation AP of each lambda over the folds that hold both classes.
pub fn cross_validate(
    features: &[FeatureVector],
    labels: &[Ambiguity],
    config: &TrainConfig,
    assignment: &[usize],
) -> Result<Vec<Option<f64>>> {
    let mut out = Vec::with_capacity(config.lambda_grid.len());
    for &lambda in &config.lambda_grid {
        let mut aps = Vec::new();
        for fold in 0..config.folds {
            let (mut tr_x, mut tr_y, mut va_x, mut va_y) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for (i, &f) in assignment.iter().enumerate() {
                if f == fold {
                    va_x.push(&features[i]);
                    va_y.push(labels[i]);
                } else {
                    tr_x.push(features[i].clone());
                    tr_y.push(labels[i]);
                }
            }
            if !has_both_classes(&tr_y) || !has_both_classes(&va_y) {
                continue;
            }
            let model = fit_linear(&tr_x, &tr_y, lambda, config.iterations, config.expansion)?;
            let scores = va_x.iter().map(|v| score(&model, v)).collect::<Result<Vec<_>>>()?;
            let positives: Vec<bool> = va_y.iter().map(Ambiguity::is_positive).collect();
            if let Some(ap) = average_precision(&scores, &positives) {
                aps.push(ap);
            }
        }
        out.push(if aps.is_empty() {
            None
        } else {
            Some(aps.iter().sum::<f64>() / aps.len() as f64)
        });
    }
    Ok(out)
}

/// Picks lambda by cross-validation, then refits on all samples.
pub fn train_scorer(features: &[FeatureVector], labels: &[Ambiguity], config: &TrainConfig) -> Result<TrainReport> {
    validate(features, labels)?;
    if features.len() < MIN_TRAINING_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_TRAINING_SAMPLES,
            actual: features.len(),
        });
    }
    if !has_both_classes(labels) {
        return Err(Error::SingleClass);
    }
    if config.lambda_grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    let folds = config.folds.max(2);
    let config = TrainConfig {
        folds,
        ..config.clone()
    };
    let assignment = assign_folds(labels, folds, config.seed);
    let cv = cross_validate(features, labels, &config, &assignment)?;
    // first grid entry with the best mean AP; the first entry if none scored
    let mut best = 0usize;
    for (i, ap) in cv.iter().enumerate() {
        if let Some(ap) = ap {
            if cv[best].is_none_or(|b| *ap > b) {
                best = i;
            }
        }
    }
    let chosen_lambda = config.lambda_grid[best];
    let scorer = fit_linear(features, labels, chosen_lambda, config.iterations, config.expansion)?;
    Ok(TrainReport {
        scorer,
        config,
        cv_average_precision: cv,
        chosen_lambda,
        fold_assignment: assignment,
    })
}
