//! `slb simulate` — generate a class-balanced two-ball episode dataset.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use slb_core::sim::{generate_dataset, split_csv_bytes, SimConfig, SplitCounts, Threshold};

use super::{parse_list, CommandOutput};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Path to a simulation-config JSON file; flags below override it.
    #[arg(long)]
    pub config: Option<String>,
    /// Wind gust magnitude (horizontal acceleration).
    #[arg(long)]
    pub wind: Option<f64>,
    /// Pre-drop drift speed applied to held balls.
    #[arg(long)]
    pub penalty: Option<f64>,
    /// Split sizes as "pretrain,increment,test,validation".
    #[arg(long, default_value = "64,32,64,32")]
    pub counts: String,
    /// Number of incremental batches.
    #[arg(long, default_value_t = 2)]
    pub increments: usize,
    /// Fixed class-magnitude threshold; calibrated from wind-free
    /// episodes when omitted.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub sim: SimConfig,
    pub counts: SplitCounts,
    pub threshold: Threshold,
}

pub fn resolve(args: &SimulateArgs, master_seed: u64) -> Result<SimulateConfig> {
    let mut sim: SimConfig = match &args.config {
        Some(path) => {
            let body = std::fs::read_to_string(path)
                .with_context(|| format!("reading config file {path}"))?;
            serde_json::from_str(&body).with_context(|| format!("parsing config file {path}"))?
        }
        None => SimConfig::default(),
    };
    sim.seed = master_seed;
    if let Some(wind) = args.wind {
        sim.wind_magnitude = wind;
    }
    if let Some(penalty) = args.penalty {
        sim.penalty_velocity = penalty;
    }
    let parts: Vec<usize> = parse_list(&args.counts)?;
    let [pretrain, increment, test, validation] = parts[..] else {
        bail!("--counts expects four values: pretrain,increment,test,validation");
    };
    let counts = SplitCounts {
        pretrain,
        increment,
        n_increments: args.increments,
        test,
        validation,
    };
    let threshold = match args.threshold {
        Some(v) => Threshold::Fixed(v),
        None => Threshold::Auto,
    };
    Ok(SimulateConfig { sim, counts, threshold })
}

pub fn execute(config: &SimulateConfig) -> Result<CommandOutput> {
    let (split, manifest) = generate_dataset(&config.sim, &config.counts, config.threshold)?;
    let mut files = BTreeMap::new();
    for (name, rows) in split.named_splits() {
        files.insert(format!("{name}.csv"), split_csv_bytes(rows)?);
    }
    files.insert(
        "dataset_manifest.json".to_string(),
        serde_json::to_vec_pretty(&manifest)?,
    );
    let notes = vec![format!(
        "simulated {} episodes ({} unsettled), collision rate {:.3}, magnitude threshold {:.4}",
        manifest.episodes_simulated,
        manifest.unsettled_episodes,
        manifest.collision_rate,
        manifest.magnitude_threshold
    )];
    Ok(CommandOutput { files, notes })
}
