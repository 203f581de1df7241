//! `slb plan` — compile a causal graph into a self-labeling plan.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use slb_core::causal::CausalGraph;

use super::CommandOutput;

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Path to a causal-graph JSON description.
    #[arg(long)]
    pub graph: String,
    /// Identifier of the cause node the labels attach to.
    #[arg(long)]
    pub cause: String,
    /// Identifier of the observable effect node.
    #[arg(long)]
    pub effect: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanConfig {
    /// The graph is embedded so a manifest replay needs no input files.
    pub graph: CausalGraph,
    pub cause: String,
    pub effect: String,
}

pub fn resolve(args: &PlanArgs) -> Result<PlanConfig> {
    let body = std::fs::read_to_string(&args.graph)
        .with_context(|| format!("reading graph file {}", args.graph))?;
    let graph: CausalGraph =
        serde_json::from_str(&body).with_context(|| format!("parsing graph file {}", args.graph))?;
    Ok(PlanConfig { graph, cause: args.cause.clone(), effect: args.effect.clone() })
}

pub fn execute(config: &PlanConfig) -> Result<CommandOutput> {
    let plan = config.graph.build_labeling_plan(&config.cause, &config.effect)?;

    let mut summary = String::new();
    writeln!(summary, "self-labeling plan: {} -> {}", config.cause, config.effect)?;
    writeln!(summary, "interaction-time models:")?;
    for binding in &plan.itm_bindings {
        let law = binding.expression.eval()?;
        writeln!(
            summary,
            "  {} -> {}: mean {} in [{}, {}]",
            binding.cause_id, config.effect, law.mean, law.low, law.high
        )?;
    }
    writeln!(summary, "required observers: {}", plan.required_observers.join(", "))?;
    writeln!(summary, "paths:")?;
    for note in &plan.path_notes {
        writeln!(
            summary,
            "  {}: mean {} in [{}, {}]",
            note.path.join(" -> "),
            note.law.mean,
            note.law.low,
            note.law.high
        )?;
    }

    let notes = vec![format!(
        "plan compiled: {} interaction-time model(s), {} observer(s)",
        plan.itm_bindings.len(),
        plan.required_observers.len()
    )];
    let files = BTreeMap::from([
        ("plan.json".to_string(), serde_json::to_vec_pretty(&plan)?),
        ("summary.txt".to_string(), summary.into_bytes()),
    ]);
    Ok(CommandOutput { files, notes })
}
