mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Failure;

#[derive(Debug, Parser)]
#[command(name = "kawasaki", version, about = "Energy landscape and Monte Carlo experiments for the anisotropic Kawasaki lattice gas")]
pub struct Cli {
    /// Parameter file (`key = value` lines); defaults to U1=3, U2=1, delta=18/5, l0=12.
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
    /// Directory for CSV/JSON output; without it the data goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed for the Monte Carlo commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct McArgs {
    /// Inverse temperature (overrides the parameter file).
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Attempted-move cap per run.
    #[arg(long)]
    pub cap: Option<u64>,
    /// `plain` or `rejection-free`.
    #[arg(long, default_value = "rejection-free")]
    pub kernel: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derived constants of the parameter set.
    Constants,
    /// Energy and descriptors of a grid file.
    Energy { grid: PathBuf },
    /// Membership of a grid file in the basin and the gate sets.
    Classify { grid: PathBuf },
    /// Barrier estimates of one rectangle, or a CSV sweep over all of them.
    Barriers {
        #[arg(long)]
        l1: Option<i64>,
        #[arg(long)]
        l2: Option<i64>,
        /// Largest side in the sweep (default: l0).
        #[arg(long)]
        max: Option<i64>,
    },
    /// The reference path from the empty to the full box, as CSV.
    Refpath {
        /// Lower-left anchor `x,y` of the growing droplet.
        #[arg(long, default_value = "1,1")]
        anchor: String,
    },
    /// Independent runs from a start state until one of the targets is hit.
    Simulate {
        #[command(flatten)]
        mc: McArgs,
        /// `zero`, `one`, `R(a,b)` (centred rectangle) or a grid file.
        #[arg(long, default_value = "zero")]
        start: String,
        /// Comma-separated targets: `zero`, `one`, `P`, `R(a,b)`.
        #[arg(long, default_value = "one")]
        targets: String,
        /// Check gate membership on every state instead of near the critical size only.
        #[arg(long)]
        full_gate_check: bool,
    },
    /// Whether a centred rectangle first reaches the empty or the full box.
    Fate {
        #[command(flatten)]
        mc: McArgs,
        #[arg(long, default_value = "R(4,3)")]
        rect: String,
    },
    /// Fraction of random starts reaching the empty or full box quickly.
    Recurrence {
        #[command(flatten)]
        mc: McArgs,
        /// Largest particle count of a random start (default: l0^2).
        #[arg(long)]
        max_particles: Option<usize>,
    },
    /// Exhaustive scan of the moves leaving the subcritical basin.
    OracleScan {
        /// Window `x0,y0,w,h` confining the clusterized part.
        #[arg(long, default_value = "4,4,6,4")]
        window: String,
        #[arg(long, default_value_t = 14)]
        max_particles: usize,
        #[arg(long, default_value_t = 1)]
        max_free: usize,
    },
    /// Inequalities used by the landscape analysis.
    Inequalities {
        #[arg(long, default_value_t = 10)]
        kmax: i64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, err) = match &f {
                Failure::Parse(e) => (2, e),
                Failure::Domain(e) => (3, e),
            };
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
