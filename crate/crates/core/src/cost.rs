//! Post-deployment cost economics: the cost index and the SLB-vs-FS
//! cost-efficiency condition.
//!
//! The cost index is accuracy change per dollar of electricity plus manual
//! labeling. Self-labeling trades labeling cost for extra inference passes
//! (the interaction-time model and effect detector run alongside training),
//! captured by the inference/training duration ratio `alpha` and the data
//! volume ratio `beta = n_slb / n_fs`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CostError {
    #[error("cost denominator is zero (no electricity or labeling cost)")]
    ZeroDenominator,
    #[error("accuracy ratio {acc_ratio} admits no finite positive threshold (limit {limit})")]
    NoThreshold { acc_ratio: f64, limit: f64 },
    #[error("sweep grid must be nonempty")]
    EmptyGrid,
    #[error("beta = {beta} is inconsistent with n_slb/n_fs = {ratio}")]
    InconsistentBeta { beta: f64, ratio: f64 },
}

/// Economic parameters of the comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Post-deployment accuracy change of the self-labeled system.
    pub delta_acc_slb: f64,
    /// Post-deployment accuracy change of the fully supervised system.
    pub delta_acc_fs: f64,
    pub n_slb: u64,
    pub n_fs: u64,
    /// Dollars per manual label.
    pub c_m: f64,
    /// Hours of compute per sample.
    pub t_compute: f64,
    /// Power draw in kilowatts.
    pub p_kw: f64,
    /// Electricity rate in dollars per kWh.
    pub rate: f64,
    /// Inference/training duration ratio, in (0, 1].
    pub alpha: f64,
    /// Sample-count ratio n_slb / n_fs.
    pub beta: f64,
}

impl CostParams {
    /// Constants from the reference analysis: SageMaker-style labeling at
    /// $0.104 per label, a 400 W accelerator, $0.09 per kWh.
    pub fn default_costs() -> (f64, f64, f64) {
        (0.104, 0.4, 0.09)
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let ratio = self.n_slb as f64 / self.n_fs as f64;
        if (self.beta - ratio).abs() > 1e-9 * ratio.max(1.0) {
            return Err(CostError::InconsistentBeta { beta: self.beta, ratio });
        }
        Ok(())
    }
}

/// Unit electricity cost per sample in dollars: `t * P * r`.
pub fn unit_electricity_cost(t_compute: f64, p_kw: f64, rate: f64) -> f64 {
    t_compute * p_kw * rate
}

/// Accuracy change per dollar of post-deployment spend.
pub fn cost_index(delta_acc: f64, e_dollars: f64, m_dollars: f64) -> Result<f64, CostError> {
    let denom = e_dollars + m_dollars;
    if denom <= 0.0 {
        return Err(CostError::ZeroDenominator);
    }
    Ok(delta_acc / denom)
}

/// Right-hand side of the SLB cost-favorability condition:
/// `((1 + 2α)·t·P·r) / (t·P·r + c_m) · β`. Self-labeling is cost-favorable
/// iff `Δacc_slb / Δacc_fs` is at least this value.
pub fn slb_condition_rhs(params: &CostParams) -> Result<f64, CostError> {
    let ce = unit_electricity_cost(params.t_compute, params.p_kw, params.rate);
    let denom = ce + params.c_m;
    if denom <= 0.0 {
        return Err(CostError::ZeroDenominator);
    }
    Ok((1.0 + 2.0 * params.alpha) * ce / denom * params.beta)
}

/// Solve `acc_ratio = rhs(t)` for the compute-time threshold in hours:
/// `t = acc_ratio · c_m / (P·r·((1+2α)·β − acc_ratio))`.
pub fn solve_t_compute_threshold(
    alpha: f64,
    beta: f64,
    c_m: f64,
    p_kw: f64,
    rate: f64,
    acc_ratio: f64,
) -> Result<f64, CostError> {
    let limit = (1.0 + 2.0 * alpha) * beta;
    if acc_ratio < 0.0 {
        return Err(CostError::NoThreshold { acc_ratio, limit });
    }
    if acc_ratio >= limit {
        // Labeling-free advantage can never be overtaken: favorable for all t.
        return Ok(f64::INFINITY);
    }
    Ok(acc_ratio * c_m / (p_kw * rate * (limit - acc_ratio)))
}

/// One row of a threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub acc_ratio: f64,
    pub t_compute_hours: f64,
}

/// Solve the threshold over a full `(alpha, beta, acc_ratio)` grid.
pub fn cost_sweep(
    alphas: &[f64],
    betas: &[f64],
    acc_ratios: &[f64],
    c_m: f64,
    p_kw: f64,
    rate: f64,
) -> Result<Vec<CostSweepRow>, CostError> {
    if alphas.is_empty() || betas.is_empty() || acc_ratios.is_empty() {
        return Err(CostError::EmptyGrid);
    }
    let mut rows = Vec::with_capacity(alphas.len() * betas.len() * acc_ratios.len());
    for &alpha in alphas {
        for &beta in betas {
            for &acc_ratio in acc_ratios {
                let t = solve_t_compute_threshold(alpha, beta, c_m, p_kw, rate, acc_ratio)?;
                rows.push(CostSweepRow { alpha, beta, acc_ratio, t_compute_hours: t });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cost_fixture() {
        assert!((unit_electricity_cost(1.0, 0.4, 0.09) - 0.036).abs() < 1e-15);
        assert_eq!(unit_electricity_cost(0.0, 0.4, 0.09), 0.0);
        assert!((unit_electricity_cost(2.0, 0.2, 0.1) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn cost_index_arithmetic() {
        assert_eq!(cost_index(0.1, 5.0, 5.0).unwrap(), 0.01);
        assert_eq!(cost_index(0.0, 5.0, 5.0).unwrap(), 0.0);
        assert_eq!(cost_index(0.1, 0.0, 0.0), Err(CostError::ZeroDenominator));
    }

    #[test]
    fn cost_index_composed_fs() {
        // 1000 samples at c_m = 0.104, t = 0.001 h, P = 0.4, r = 0.09
        let e = 1000.0 * unit_electricity_cost(0.001, 0.4, 0.09);
        let m = 1000.0 * 0.104;
        let idx = cost_index(0.2, e, m).unwrap();
        assert!((idx - 0.2 / (1000.0 * (0.104 + 3.6e-5))).abs() < 1e-12);
        assert!((idx - 1.922e-3).abs() < 1e-5);
    }

    fn params(alpha: f64, beta: f64, t: f64) -> CostParams {
        let (c_m, p_kw, rate) = CostParams::default_costs();
        CostParams {
            delta_acc_slb: 0.1,
            delta_acc_fs: 0.2,
            n_slb: (1000.0 * beta) as u64,
            n_fs: 1000,
            c_m,
            t_compute: t,
            p_kw,
            rate,
            alpha,
            beta,
        }
    }

    #[test]
    fn rhs_matches_extreme_point() {
        let rhs = slb_condition_rhs(&params(0.9, 15.0, 0.0173)).unwrap();
        assert!((rhs - 0.25).abs() < 0.01, "rhs = {rhs}");
    }

    #[test]
    fn rhs_degenerate_cases() {
        assert_eq!(slb_condition_rhs(&params(0.9, 15.0, 0.0)).unwrap(), 0.0);
        let tiny = slb_condition_rhs(&params(0.9, 1e-12, 0.0173)).unwrap();
        assert!(tiny < 1e-11);
    }

    #[test]
    fn threshold_extreme_case() {
        // consistent with the roughly one-minute extreme case
        let t = solve_t_compute_threshold(0.9, 15.0, 0.104, 0.4, 0.09, 0.25).unwrap();
        assert!((t - 0.0173).abs() / 0.0173 < 0.05, "t = {t}");
    }

    #[test]
    fn threshold_reference_case() {
        let t = solve_t_compute_threshold(0.5, 1.0, 0.104, 0.4, 0.09, 0.5).unwrap();
        assert!((t - 0.963).abs() < 1e-3, "t = {t}");
    }

    #[test]
    fn threshold_limits() {
        let t = solve_t_compute_threshold(0.5, 1.0, 0.104, 0.4, 0.09, 0.0).unwrap();
        assert_eq!(t, 0.0);
        let t = solve_t_compute_threshold(0.5, 1.0, 0.104, 0.4, 0.09, 2.0).unwrap();
        assert!(t.is_infinite());
    }

    #[test]
    fn round_trip_rhs_at_threshold() {
        let t = solve_t_compute_threshold(0.9, 15.0, 0.104, 0.4, 0.09, 0.25).unwrap();
        let rhs = slb_condition_rhs(&params(0.9, 15.0, t)).unwrap();
        assert!((rhs - 0.25).abs() < 1e-12, "rhs = {rhs}");
    }

    #[test]
    fn sweep_cardinality_and_monotonicity() {
        let rows = cost_sweep(
            &[0.1, 0.5, 0.9],
            &[1.0, 5.0, 15.0],
            &[0.25, 0.5, 1.0],
            0.104,
            0.4,
            0.09,
        )
        .unwrap();
        assert_eq!(rows.len(), 27);
        // doubled beta shrinks the threshold; larger acc_ratio grows it
        let t1 = solve_t_compute_threshold(0.5, 1.0, 0.104, 0.4, 0.09, 0.5).unwrap();
        let t2 = solve_t_compute_threshold(0.5, 2.0, 0.104, 0.4, 0.09, 0.5).unwrap();
        assert!(t2 < t1);
        let t3 = solve_t_compute_threshold(0.5, 1.0, 0.104, 0.4, 0.09, 0.6).unwrap();
        assert!(t3 > t1);
    }

    #[test]
    fn beta_consistency_check() {
        let mut p = params(0.5, 1.0, 0.1);
        assert!(p.validate().is_ok());
        p.beta = 3.0;
        assert!(matches!(p.validate(), Err(CostError::InconsistentBeta { .. })));
    }
}
