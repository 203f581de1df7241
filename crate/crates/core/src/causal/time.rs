//! Interval-valued interaction times and their composition laws.

use serde::{Deserialize, Serialize};

use super::CausalError;

/// A causal time lag: a mean with interval bounds, all in time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeLaw {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

impl TimeLaw {
    pub fn new(mean: f64, low: f64, high: f64) -> Result<Self, CausalError> {
        if low >= 0.0 && low <= mean && mean <= high {
            Ok(Self { mean, low, high })
        } else {
            Err(CausalError::InvalidTimeLaw { low, mean, high })
        }
    }

    /// A point law with no uncertainty.
    pub fn exact(mean: f64) -> Result<Self, CausalError> {
        Self::new(mean, mean, mean)
    }

    pub fn zero() -> Self {
        Self { mean: 0.0, low: 0.0, high: 0.0 }
    }

    pub fn validate(&self) -> Result<(), CausalError> {
        Self::new(self.mean, self.low, self.high).map(|_| ())
    }
}

/// Sequential (chain) composition: component-wise sum.
pub fn chain_time(first: TimeLaw, second: TimeLaw) -> TimeLaw {
    TimeLaw {
        mean: first.mean + second.mean,
        low: first.low + second.low,
        high: first.high + second.high,
    }
}

/// Parallel (fork) combination: component-wise maximum, capturing the last
/// effect transition.
pub fn fork_time(times: &[TimeLaw]) -> Result<TimeLaw, CausalError> {
    let mut iter = times.iter();
    let first = *iter.next().ok_or(CausalError::EmptyFork)?;
    Ok(iter.fold(first, |acc, t| TimeLaw {
        mean: acc.mean.max(t.mean),
        low: acc.low.max(t.low),
        high: acc.high.max(t.high),
    }))
}
