//! `slb run` — nested k-fold self-labeling experiment.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use slb_core::pipeline::{aggregate_results, nested_kfold, ExperimentSpec, NoiseSpec};

use super::{csv_bytes, parse_list, CommandOutput};

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Path to an experiment-spec JSON file; flags below override it.
    #[arg(long)]
    pub spec: Option<String>,
    /// Target-domain wind gust magnitude.
    #[arg(long)]
    pub wind: Option<f64>,
    /// Fraction of effect labels redrawn uniformly at random.
    #[arg(long = "noise-esd")]
    pub noise_esd: Option<f64>,
    /// Mean interaction-time error; its variance follows the timing
    /// protocol (half the mean).
    #[arg(long = "noise-itm-mean")]
    pub noise_itm_mean: Option<f64>,
    /// Replicate seeds, comma separated.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Methods to run, comma separated (slb, fs, pseudo).
    #[arg(long)]
    pub methods: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub spec: ExperimentSpec,
}

pub fn resolve(args: &RunArgs, master_seed: u64) -> Result<RunConfig> {
    let mut spec: ExperimentSpec = match &args.spec {
        Some(path) => {
            let body = std::fs::read_to_string(path)
                .with_context(|| format!("reading spec file {path}"))?;
            serde_json::from_str(&body).with_context(|| format!("parsing spec file {path}"))?
        }
        None => ExperimentSpec::desk_scale(),
    };
    spec.sim.seed = master_seed;
    if let Some(wind) = args.wind {
        spec.wind_magnitude = wind;
    }
    if let Some(esd) = args.noise_esd {
        spec.noise.esd_fraction = esd;
    }
    if let Some(mean) = args.noise_itm_mean {
        let seed = spec.noise.seed;
        spec.noise = NoiseSpec {
            esd_fraction: spec.noise.esd_fraction,
            ..NoiseSpec::timing_protocol(mean, seed)
        };
    }
    if let Some(seeds) = &args.seeds {
        spec.seeds = parse_list(seeds)?;
    }
    if let Some(methods) = &args.methods {
        spec.methods = methods.split(',').map(|m| m.trim().to_string()).collect();
    }
    Ok(RunConfig { spec })
}

pub fn execute(config: &RunConfig) -> Result<CommandOutput> {
    let mut rows = nested_kfold(&config.spec)?;
    rows.sort_by(|a, b| {
        (&a.method, a.seed, a.fold, a.increment).cmp(&(&b.method, b.seed, b.fold, b.increment))
    });
    let results = csv_bytes(
        &["fold", "seed", "increment", "method", "accuracy"],
        rows.iter().map(|r| {
            vec![
                r.fold.to_string(),
                r.seed.to_string(),
                r.increment.to_string(),
                r.method.clone(),
                r.accuracy.to_string(),
            ]
        }),
    )?;
    let aggregates = aggregate_results(&rows);
    let aggregate = csv_bytes(
        &["method", "increment", "mean", "std", "cells"],
        aggregates.iter().map(|a| {
            vec![
                a.method.clone(),
                a.increment.to_string(),
                a.mean.to_string(),
                a.std.to_string(),
                a.cells.to_string(),
            ]
        }),
    )?;

    let mut notes = Vec::new();
    for method in &config.spec.methods {
        let finals: Vec<&_> = aggregates
            .iter()
            .filter(|a| &a.method == method)
            .collect();
        if let (Some(first), Some(last)) = (finals.first(), finals.last()) {
            notes.push(format!(
                "{method}: accuracy {:.4} -> {:.4} over {} increments",
                first.mean,
                last.mean,
                config.spec.n_increments
            ));
        }
    }

    let files = BTreeMap::from([
        ("results.csv".to_string(), results),
        ("aggregate.csv".to_string(), aggregate),
    ]);
    Ok(CommandOutput { files, notes })
}
