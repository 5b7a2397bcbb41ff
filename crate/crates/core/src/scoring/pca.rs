use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::error::{Error, Result};

/// Principal axes of a feature sample, ordered by decreasing variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Orthonormal components, one per output dimension.
    pub basis: Vec<Vec<f64>>,
    /// Sample variance along each component (divisor n - 1).
    pub explained_variance: Vec<f64>,
    /// Total variance of the input sample.
    pub total_variance: f64,
}

impl PcaModel {
    pub fn input_len(&self) -> usize {
        self.mean.len()
    }

    pub fn target_dims(&self) -> usize {
        self.basis.len()
    }

    pub fn explained_ratio(&self) -> Vec<f64> {
        self.explained_variance
            .iter()
            .map(|v| if self.total_variance > 0.0 { v / self.total_variance } else { 0.0 })
            .collect()
    }

    /// Maps projected coordinates back into input space.
    pub fn reconstruct(&self, coords: &FeatureVector) -> Result<FeatureVector> {
        if coords.len() != self.basis.len() {
            return Err(Error::LengthMismatch {
                expected: self.basis.len(),
                actual: coords.len(),
            });
        }
        let mut out = self.mean.clone();
        for (c, axis) in coords.0.iter().zip(&self.basis) {
            for (o, a) in out.iter_mut().zip(axis) {
                *o += c * a;
            }
        }
        FeatureVector::new(out)
    }
}

pub fn fit_pca(vectors: &[FeatureVector], target: usize) -> Result<PcaModel> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::TooFewSamples { required: 2, actual: n });
    }
    let dim = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::LengthMismatch {
            expected: dim,
            actual: v.len(),
        });
    }
    let limit = dim.min(n - 1);
    if target > limit {
        return Err(Error::TargetTooLarge { target, limit });
    }

    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(&v.0) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let centered = DMatrix::from_fn(n, dim, |i, j| vectors[i].0[j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let total_variance = cov.trace();
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut basis = Vec::with_capacity(target);
    let mut explained_variance = Vec::with_capacity(target);
    for &k in order.iter().take(target) {
        let mut axis: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let pivot = axis
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.abs() > axis[best].abs() { i } else { best });
        if axis[pivot] < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        basis.push(axis);
        explained_variance.push(eig.eigenvalues[k].max(0.0));
    }
    Ok(PcaModel {
        mean,
        basis,
        explained_variance,
        total_variance,
    })
}

/// Coordinates of `v - mean` on the model's ordered basis.
pub fn project(model: &PcaModel, v: &FeatureVector) -> Result<FeatureVector> {
    if v.len() != model.mean.len() {
        return Err(Error::LengthMismatch {
            expected: model.mean.len(),
            actual: v.len(),
        });
    }
    let centered: Vec<f64> = v.0.iter().zip(&model.mean).map(|(x, m)| x - m).collect();
    FeatureVector::new(
        model
            .basis
            .iter()
            .map(|axis| axis.iter().zip(&centered).map(|(a, c)| a * c).sum())
            .collect(),
    )
}
