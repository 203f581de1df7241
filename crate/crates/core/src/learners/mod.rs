//! From-scratch learning models: the MLP task model, gradient boosted
//! regression trees and k-NN for interaction-time regression, plus
//! evaluation metrics.

mod knn;
mod metrics;
mod mlp;
mod standardize;
mod tree;

pub use knn::KnnRegressor;
pub use metrics::{accuracy, metrics, RegressionMetrics};
pub use mlp::{train_classifier, Classifier, MlpConfig};
pub use standardize::Standardizer;
pub use tree::GbtRegressor;

use serde::{Deserialize, Serialize};

/// Errors from model training and prediction.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnError {
    #[error("training data is empty")]
    EmptyData,
    #[error("input contains a non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("input dimension {got} does not match training dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("k = {k} exceeds sample count {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("prediction and target lengths differ ({predictions} vs {targets})")]
    LengthMismatch { predictions: usize, targets: usize },
}

/// Hyperparameters selecting and configuring a regression model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorSpec {
    Knn { k: usize },
    BoostedTrees { n_trees: usize, max_depth: usize, shrinkage: f64 },
}

impl RegressorSpec {
    /// Default interaction-time model: boosted trees, chosen by a small
    /// grid search on the unperturbed domain.
    pub fn default_itm() -> Self {
        Self::BoostedTrees { n_trees: 200, max_depth: 4, shrinkage: 0.1 }
    }
}

/// A fitted regression model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Regressor {
    Knn(KnnRegressor),
    BoostedTrees(GbtRegressor),
}

impl Regressor {
    pub fn predict(&self, input: &[f64]) -> Result<f64, LearnError> {
        match self {
            Regressor::Knn(m) => m.predict(input),
            Regressor::BoostedTrees(m) => m.predict(input),
        }
    }
}

/// Fit a regression model of the requested kind.
pub fn train_regressor(
    spec: RegressorSpec,
    inputs: &[Vec<f64>],
    targets: &[f64],
) -> Result<Regressor, LearnError> {
    check_matrix(inputs)?;
    if targets.len() != inputs.len() {
        return Err(LearnError::LengthMismatch {
            predictions: targets.len(),
            targets: inputs.len(),
        });
    }
    if let Some((row, t)) = targets.iter().enumerate().find(|(_, t)| !t.is_finite()) {
        let _ = t;
        return Err(LearnError::NonFinite { row, col: usize::MAX });
    }
    match spec {
        RegressorSpec::Knn { k } => Ok(Regressor::Knn(KnnRegressor::fit(k, inputs, targets)?)),
        RegressorSpec::BoostedTrees { n_trees, max_depth, shrinkage } => {
            Ok(Regressor::BoostedTrees(GbtRegressor::fit(
                n_trees, max_depth, shrinkage, inputs, targets,
            )?))
        }
    }
}

pub(crate) fn check_matrix(inputs: &[Vec<f64>]) -> Result<(), LearnError> {
    if inputs.is_empty() {
        return Err(LearnError::EmptyData);
    }
    let dim = inputs[0].len();
    for (row, r) in inputs.iter().enumerate() {
        if r.len() != dim {
            return Err(LearnError::DimensionMismatch { got: r.len(), expected: dim });
        }
        for (col, v) in r.iter().enumerate() {
            if !v.is_finite() {
                return Err(LearnError::NonFinite { row, col });
            }
        }
    }
    Ok(())
}
