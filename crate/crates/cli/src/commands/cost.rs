//! `slb cost` — compute-time thresholds for cost-favorable self-labeling.

use std::collections::BTreeMap;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};

use slb_core::cost::{cost_sweep, solve_t_compute_threshold, CostParams};

use super::{csv_bytes, parse_list, CommandOutput};

#[derive(Debug, Args)]
pub struct CostArgs {
    /// Inference/training duration ratios, comma separated.
    #[arg(long, default_value = "0.1,0.5,0.9")]
    pub alphas: String,
    /// Sample-count ratios n_slb / n_fs, comma separated.
    #[arg(long, default_value = "1,5,15")]
    pub betas: String,
    /// Accuracy-change ratios, comma separated.
    #[arg(long = "acc-ratios", default_value = "0.25,0.5,0.75")]
    pub acc_ratios: String,
    /// Dollars per manual label.
    #[arg(long = "cost-per-label")]
    pub c_m: Option<f64>,
    /// Accelerator power draw in kilowatts.
    #[arg(long = "power-kw")]
    pub p_kw: Option<f64>,
    /// Electricity rate in dollars per kWh.
    #[arg(long)]
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostConfig {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub acc_ratios: Vec<f64>,
    pub c_m: f64,
    pub p_kw: f64,
    pub rate: f64,
}

pub fn resolve(args: &CostArgs) -> Result<CostConfig> {
    let (c_m, p_kw, rate) = CostParams::default_costs();
    Ok(CostConfig {
        alphas: parse_list(&args.alphas)?,
        betas: parse_list(&args.betas)?,
        acc_ratios: parse_list(&args.acc_ratios)?,
        c_m: args.c_m.unwrap_or(c_m),
        p_kw: args.p_kw.unwrap_or(p_kw),
        rate: args.rate.unwrap_or(rate),
    })
}

pub fn execute(config: &CostConfig) -> Result<CommandOutput> {
    let rows = cost_sweep(
        &config.alphas,
        &config.betas,
        &config.acc_ratios,
        config.c_m,
        config.p_kw,
        config.rate,
    )?;
    let sweep = csv_bytes(
        &["alpha", "beta", "acc_ratio", "t_compute_hours"],
        rows.iter().map(|r| {
            vec![
                r.alpha.to_string(),
                r.beta.to_string(),
                r.acc_ratio.to_string(),
                r.t_compute_hours.to_string(),
            ]
        }),
    )?;

    let extreme =
        solve_t_compute_threshold(0.9, 15.0, config.c_m, config.p_kw, config.rate, 0.25)?;
    let reference =
        solve_t_compute_threshold(0.5, 1.0, config.c_m, config.p_kw, config.rate, 0.5)?;
    let notes = vec![
        format!("{} grid cells solved", rows.len()),
        format!(
            "extreme case (alpha 0.9, beta 15, acc ratio 0.25): t = {extreme:.4} h (~{:.1} min)",
            extreme * 60.0
        ),
        format!(
            "reference case (alpha 0.5, beta 1, acc ratio 0.5): t = {reference:.3} h; \
             cited elsewhere as 1.3 h, which this formula does not reproduce"
        ),
    ];

    let files = BTreeMap::from([("cost_sweep.csv".to_string(), sweep)]);
    Ok(CommandOutput { files, notes })
}
