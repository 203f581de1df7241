//! k-nearest-neighbor regression on standardized features.

use serde::{Deserialize, Serialize};

use super::standardize::Standardizer;
use super::LearnError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnRegressor {
    k: usize,
    standardizer: Standardizer,
    points: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl KnnRegressor {
    pub fn fit(k: usize, inputs: &[Vec<f64>], targets: &[f64]) -> Result<Self, LearnError> {
        if k == 0 {
            return Err(LearnError::BadConfig("k must be positive".into()));
        }
        if k > inputs.len() {
            return Err(LearnError::KTooLarge { k, n: inputs.len() });
        }
        let standardizer = Standardizer::fit(inputs);
        let points = inputs.iter().map(|r| standardizer.transform(r)).collect();
        Ok(Self { k, standardizer, points, targets: targets.to_vec() })
    }

    pub fn predict(&self, input: &[f64]) -> Result<f64, LearnError> {
        if input.len() != self.standardizer.dim() {
            return Err(LearnError::DimensionMismatch {
                got: input.len(),
                expected: self.standardizer.dim(),
            });
        }
        let q = self.standardizer.transform(input);
        let mut dist: Vec<(f64, f64)> = self
            .points
            .iter()
            .zip(&self.targets)
            .map(|(p, &t)| {
                let d2: f64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, t)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(dist[..self.k].iter().map(|(_, t)| t).sum::<f64>() / self.k as f64)
    }
}
