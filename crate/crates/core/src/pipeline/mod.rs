//! The self-labeling engine.
//!
//! Effect state transitions detected on the effect stream become labels;
//! interaction-time models map each event back to per-cause timestamps;
//! the cause streams are sampled there and the (input, label) pairs feed
//! incremental retraining. Noise injection, the pseudo-label baseline,
//! and nested k-fold evaluation live here too.

mod experiment;
mod selflabel;

pub use experiment::{
    aggregate_results, incremental_retrain, nested_kfold, pseudo_label_baseline,
    stratified_folds, AggregateRow, ExperimentSpec, LabeledSet, PseudoOutcome, ResultRow,
};
pub use selflabel::{
    ball_plan_graph, ball_stream, build_selflabeled_dataset, detect_effect_events, infer_times,
    resimulate_episode, sample_cause_window, train_itms, CAUSE_IDS, EFFECT_ID,
};

use serde::{Deserialize, Serialize};

use crate::causal::CausalError;
use crate::learners::LearnError;
use crate::sim::SimError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("no interaction-time model fitted for cause {0:?}")]
    MissingItm(String),
    #[error("invalid noise spec: {0}")]
    BadNoise(String),
    #[error("invalid run spec: {0}")]
    BadSpec(String),
    #[error("outer fold of {fold_size} samples cannot cover {n_classes} classes")]
    FoldTooSmall { fold_size: usize, n_classes: usize },
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Causal(#[from] CausalError),
}

/// One timestamped sample from a cause or effect stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSample {
    pub t: f64,
    pub features: Vec<f64>,
}

/// A detected effect state transition with its label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEvent {
    pub t_detect: f64,
    pub label: usize,
    pub effect_features: Vec<f64>,
}

/// Where a self-labeled example came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub event_id: usize,
    /// (cause id, inferred interaction time) per plan binding.
    pub inferred_times: Vec<(String, f64)>,
    /// Cause-stream timestamps actually sampled, same order as above.
    pub sampled_timestamps: Vec<f64>,
    /// True when any target timestamp fell outside a stream's extent.
    pub clamped: bool,
}

/// An automatically generated training pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfLabeledExample {
    pub input: Vec<f64>,
    pub label: usize,
    pub provenance: Provenance,
}

/// Label / interaction-time corruption levels for robustness studies.
///
/// ESD noise: with probability `esd_fraction`, the label is redrawn
/// uniformly over all classes (so the expected corrupted fraction is
/// `esd_fraction`·7/8 for 8 classes). ITM noise: each inferred time gets
/// `±ε` added, with ε normal with the given mean and variance and a fair
/// random sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub esd_fraction: f64,
    pub itm_error_mean: f64,
    pub itm_error_variance: f64,
    pub seed: u64,
}

impl NoiseSpec {
    /// No corruption; assembly becomes deterministic in its other inputs.
    pub fn clean(seed: u64) -> Self {
        Self { esd_fraction: 0.0, itm_error_mean: 0.0, itm_error_variance: 0.0, seed }
    }

    /// The published protocol sets the variance to half the mean error.
    pub fn timing_protocol(mean: f64, seed: u64) -> Self {
        Self { esd_fraction: 0.0, itm_error_mean: mean, itm_error_variance: mean / 2.0, seed }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(0.0..=1.0).contains(&self.esd_fraction) {
            return Err(PipelineError::BadNoise(format!(
                "esd_fraction {} not in [0, 1]",
                self.esd_fraction
            )));
        }
        if self.itm_error_mean < 0.0 || self.itm_error_variance < 0.0 {
            return Err(PipelineError::BadNoise(
                "itm error mean and variance must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_protocol_halves_the_mean() {
        let n = NoiseSpec::timing_protocol(50.0, 1);
        assert_eq!(n.itm_error_variance, 25.0);
        n.validate().unwrap();
    }

    #[test]
    fn bad_noise_specs_are_rejected() {
        let mut n = NoiseSpec::clean(0);
        n.esd_fraction = 1.5;
        assert!(n.validate().is_err());
        let mut n = NoiseSpec::clean(0);
        n.itm_error_variance = -1.0;
        assert!(n.validate().is_err());
    }
}
