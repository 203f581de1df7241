//! Command-line laboratory for interactive-causality self-labeling.
//!
//! Every invocation resolves its arguments into a self-contained
//! configuration, executes it, and writes the outputs together with a
//! run manifest. `--from-manifest` replays a previous run byte-for-byte.

mod commands;
mod manifest;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use commands::ResolvedCommand;

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "SLB_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "slb", version, about = "Numerical laboratory for self-labeling via interactive causality")]
struct Cli {
    /// Master seed; every stochastic stage derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory (default: $SLB_OUT_DIR, then ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Replay a previous run from its manifest instead of resolving a
    /// subcommand.
    #[arg(long = "from-manifest", global = true)]
    from_manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learned-mapping curves and sampling bounds for a coupled system.
    Ds(commands::ds::DsArgs),
    /// Compile a causal graph into a self-labeling plan.
    Plan(commands::plan::PlanArgs),
    /// Generate a class-balanced two-ball episode dataset.
    Simulate(commands::simulate::SimulateArgs),
    /// Run the nested k-fold self-labeling experiment.
    Run(commands::run::RunArgs),
    /// Sweep compute-time thresholds for cost-favorable self-labeling.
    Cost(commands::cost::CostArgs),
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();

    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }

    let (master_seed, resolved) = match (&cli.from_manifest, &cli.command) {
        (Some(path), None) => {
            let previous = manifest::load(path)?;
            (previous.master_seed, previous.command)
        }
        (Some(_), Some(_)) => bail!("--from-manifest replaces the subcommand; pass one or the other"),
        (None, Some(command)) => {
            let resolved = match command {
                Command::Ds(args) => ResolvedCommand::Ds(commands::ds::resolve(args)?),
                Command::Plan(args) => ResolvedCommand::Plan(commands::plan::resolve(args)?),
                Command::Simulate(args) => {
                    ResolvedCommand::Simulate(commands::simulate::resolve(args, cli.seed)?)
                }
                Command::Run(args) => ResolvedCommand::Run(commands::run::resolve(args, cli.seed)?),
                Command::Cost(args) => ResolvedCommand::Cost(commands::cost::resolve(args)?),
            };
            (cli.seed, resolved)
        }
        (None, None) => bail!("a subcommand (or --from-manifest) is required; see --help"),
    };

    let out_dir = cli
        .out
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let output = resolved.execute()?;
    manifest::write_outputs(&out_dir, master_seed, resolved, &output.files)?;

    for note in &output.notes {
        println!("{note}");
    }
    for name in output.files.keys() {
        println!("wrote {}", out_dir.join(name).display());
    }
    println!("wrote {}", out_dir.join(manifest::MANIFEST_FILE).display());
    Ok(())
}
