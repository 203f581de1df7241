//! The five subcommands, each split into argument resolution and a pure
//! `execute` step that maps a resolved configuration to output files.

pub mod cost;
pub mod ds;
pub mod plan;
pub mod run;
pub mod simulate;

use std::collections::BTreeMap;

use anyhow::Result;
use serde::{Deserialize, Serialize};

/// A fully resolved, self-contained command configuration; this is what
/// the run manifest stores and what `--from-manifest` replays.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum ResolvedCommand {
    Ds(ds::DsConfig),
    Plan(plan::PlanConfig),
    Simulate(simulate::SimulateConfig),
    Run(run::RunConfig),
    Cost(cost::CostConfig),
}

/// Everything a command produces: files to write and console notes.
pub struct CommandOutput {
    pub files: BTreeMap<String, Vec<u8>>,
    pub notes: Vec<String>,
}

impl ResolvedCommand {
    pub fn execute(&self) -> Result<CommandOutput> {
        match self {
            ResolvedCommand::Ds(c) => ds::execute(c),
            ResolvedCommand::Plan(c) => plan::execute(c),
            ResolvedCommand::Simulate(c) => simulate::execute(c),
            ResolvedCommand::Run(c) => run::execute(c),
            ResolvedCommand::Cost(c) => cost::execute(c),
        }
    }
}

/// Render rows into CSV bytes with the given header.
pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())?;
    }
    Ok(w.into_inner()?)
}

/// Parse a comma-separated list of numbers.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|e| anyhow::anyhow!("bad list entry {p:?}: {e}"))
        })
        .collect()
}
