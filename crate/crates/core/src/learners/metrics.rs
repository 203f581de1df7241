//! Regression and classification evaluation metrics.

use super::LearnError;

/// R² and mean absolute error; `r2` is `None` when the targets have zero
/// variance (undefined total sum of squares).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionMetrics {
    pub r2: Option<f64>,
    pub mae: f64,
}

/// Compute `r2 = 1 - SS_res/SS_tot` and the mean absolute error.
pub fn metrics(predictions: &[f64], targets: &[f64]) -> Result<RegressionMetrics, LearnError> {
    if predictions.len() != targets.len() || targets.is_empty() {
        return Err(LearnError::LengthMismatch {
            predictions: predictions.len(),
            targets: targets.len(),
        });
    }
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let ss_tot: f64 = targets.iter().map(|t| (t - mean) * (t - mean)).sum();
    let ss_res: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    let mae = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / n;
    let r2 = if ss_tot > 0.0 { Some(1.0 - ss_res / ss_tot) } else { None };
    Ok(RegressionMetrics { r2, mae })
}

/// Fraction of matching labels.
pub fn accuracy(predictions: &[usize], targets: &[usize]) -> f64 {
    if targets.is_empty() {
        return 0.0;
    }
    let hits = predictions.iter().zip(targets).filter(|(p, t)| p == t).count();
    hits as f64 / targets.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let m = metrics(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(m.r2, Some(1.0));
        assert_eq!(m.mae, 0.0);
    }

    #[test]
    fn mean_prediction_has_zero_r2() {
        let targets = [0.0, 1.0, 2.0, 3.0];
        let m = metrics(&[1.5; 4], &targets).unwrap();
        assert!((m.r2.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_case() {
        let m = metrics(&[0.0, 1.0, 2.0, 7.0], &[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.mae, 1.0);
        assert!((m.r2.unwrap() - (1.0 - 16.0 / 5.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_targets_have_no_r2() {
        let m = metrics(&[1.0, 2.0], &[5.0, 5.0]).unwrap();
        assert_eq!(m.r2, None);
        assert_eq!(m.mae, 3.5);
    }

    #[test]
    fn length_mismatch_errors() {
        assert!(metrics(&[1.0], &[1.0, 2.0]).is_err());
        assert!(metrics(&[], &[]).is_err());
    }

    #[test]
    fn accuracy_counts_hits() {
        assert_eq!(accuracy(&[0, 1, 2, 2], &[0, 1, 2, 3]), 0.75);
    }
}
