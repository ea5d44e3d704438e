mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{EstimateArgs, FitArgs, LatticeArgs, LowerBoundArgs, RouteArgs};

#[derive(Parser)]
#[command(name = "qscale", version, about = "QAOA gate-count, routing and measurement-cost scaling")]
struct Cli {
    /// Worker threads for routing trials (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Route every graph of a corpus onto a lattice and write per-graph stats.
    Route(RouteArgs),
    /// Sweep the measurement bound over sizes, depths, lattices and error rates.
    Estimate(EstimateArgs),
    /// Fit a scaling law to a `route` CSV.
    Fit(FitArgs),
    /// Export a hardware lattice.
    Lattice(LatticeArgs),
    /// SWAP lower bound for every graph of a corpus.
    LowerBound(LowerBoundArgs),
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Output directory (default: the one recorded in the manifest).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    match cli.command {
        Command::Route(a) => commands::route(&a),
        Command::Estimate(a) => commands::estimate(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Lattice(a) => commands::lattice(&a),
        Command::LowerBound(a) => commands::lower_bound(&a),
        Command::Replay { manifest, out } => manifest::replay(&manifest, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
