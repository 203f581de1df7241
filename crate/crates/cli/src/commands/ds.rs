//! `slb ds` — learned-mapping curves, error-factor sweeps, and
//! sampling-bound tables for a coupled dynamical system.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use slb_core::ds::{CoupledSystem, ErrorFactors, Method};

use super::{csv_bytes, CommandOutput};

const XI_GRID: [f64; 5] = [0.7, 0.85, 1.0, 1.15, 1.3];
const EPSILONS: [f64; 3] = [0.1, 0.3, 0.5];

#[derive(Debug, Args)]
pub struct DsArgs {
    /// Built-in system preset.
    #[arg(long, default_value = "identity", conflicts_with = "system")]
    pub preset: String,
    /// Path to a coupled-system JSON description.
    #[arg(long)]
    pub system: Option<String>,
    /// Cause-side sampling point for the sampling-bound table.
    #[arg(long, default_value_t = 80.0)]
    pub x1: f64,
    /// Cause state at effect detection.
    #[arg(long, default_value_t = 100.0)]
    pub x2: f64,
    /// Effect state at the cause sampling moment.
    #[arg(long, default_value_t = 10.0)]
    pub y1: f64,
    /// Timing error factor applied to the SLB curve.
    #[arg(long = "xi-t", default_value_t = 1.0)]
    pub xi_t: f64,
    /// Effect-detection error factor applied to the SLB curve.
    #[arg(long = "xi-e", default_value_t = 1.0)]
    pub xi_e: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DsConfig {
    pub system: CoupledSystem,
    pub x1: f64,
    pub x2: f64,
    pub y1: f64,
    pub xi_t: f64,
    pub xi_e: f64,
}

pub fn resolve(args: &DsArgs) -> Result<DsConfig> {
    let system = if let Some(path) = &args.system {
        let body = std::fs::read_to_string(path)
            .with_context(|| format!("reading system file {path}"))?;
        serde_json::from_str(&body).with_context(|| format!("parsing system file {path}"))?
    } else if args.preset == "identity" {
        CoupledSystem::identity_example()
    } else {
        bail!("unknown preset {:?}; available: identity", args.preset);
    };
    Ok(DsConfig {
        system,
        x1: args.x1,
        x2: args.x2,
        y1: args.y1,
        xi_t: args.xi_t,
        xi_e: args.xi_e,
    })
}

pub fn execute(config: &DsConfig) -> Result<CommandOutput> {
    let sys = &config.system;
    let (x2, y1) = (config.x2, config.y1);
    let errors = ErrorFactors::new(config.xi_t, config.xi_e);
    // grid of cause sampling points in (0, x2)
    let x_grid: Vec<f64> = (1..20).map(|k| x2 * k as f64 / 20.0).collect();

    let mut curve_rows = Vec::new();
    for &x in &x_grid {
        let slb = sys.y2_learned(Method::Slb, x, x2, y1, errors)?;
        let trad = sys.y2_learned(Method::Trad, x, x2, y1, ErrorFactors::IDENTITY)?;
        let fs = sys.y2_learned(Method::Fs, x, x2, y1, ErrorFactors::IDENTITY)?;
        curve_rows.push([x, slb, trad, fs].map(|v| v.to_string()).to_vec());
    }
    let curves = csv_bytes(&["x", "y2_slb", "y2_trad", "y2_fs"], curve_rows)?;

    // one factor varied at a time, the other held at 1
    let mut xi_values: Vec<ErrorFactors> = XI_GRID
        .iter()
        .map(|&t| ErrorFactors::new(t, 1.0))
        .chain(XI_GRID.iter().map(|&e| ErrorFactors::new(1.0, e)))
        .collect();
    xi_values.dedup();
    let sweep_rows = sys.error_sweep(&x_grid, x2, y1, &xi_values)?;
    let sweep = csv_bytes(
        &["x_slb", "xi_t", "xi_e", "y2"],
        sweep_rows
            .iter()
            .map(|r| [r.x_slb, r.xi_t, r.xi_e, r.y2].map(|v| v.to_string()).to_vec()),
    )?;

    let mut bound_rows = Vec::new();
    for eps in EPSILONS {
        let b = sys.itm_sampling_bounds(config.x1, x2, y1, eps)?;
        bound_rows.push(vec![
            b.epsilon.to_string(),
            b.y2_fs.to_string(),
            b.y2_low.to_string(),
            b.y2_high.to_string(),
            b.t_if_low.to_string(),
            b.t_if_high.to_string(),
            b.t_if_nominal.to_string(),
            b.y2_slb_nominal.to_string(),
            b.within_bounds.to_string(),
        ]);
    }
    let bounds = csv_bytes(
        &[
            "epsilon",
            "y2_fs",
            "y2_low",
            "y2_high",
            "t_if_low",
            "t_if_high",
            "t_if_nominal",
            "y2_slb_nominal",
            "within_bounds",
        ],
        bound_rows,
    )?;

    let files = BTreeMap::from([
        ("curves.csv".to_string(), curves),
        ("error_sweep.csv".to_string(), sweep),
        ("sampling_bounds.csv".to_string(), bounds),
    ]);
    Ok(CommandOutput {
        files,
        notes: vec![format!(
            "wrote mapping curves over {} sampling points, x2 = {x2}, y1 = {y1}",
            x_grid.len()
        )],
    })
}
