//! The `ruin` command: solve, asymptotics, simulate, verify and report.

// Negated comparisons are deliberate: they send NaN down the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Overrides, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "ruin",
    version,
    about = "Survival probability of an insurer investing in a risky asset"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for g1 and the survival curve; writes g1.csv, survival.csv, summary.json.
    Solve(CommonArgs),
    /// Large-reserve analysis; writes asymptotics.json.
    Asymptotics(CommonArgs),
    /// Monte Carlo estimate of the ruin probability; writes mc.jsonl.
    Simulate(CommonArgs),
    /// Residual checks and Monte Carlo comparison; writes verify.json, exits 1 on failure.
    Verify(CommonArgs),
    /// SVG plots; writes report.svg.
    Report(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "RUIN_SEED")]
    pub seed: Option<u64>,
    /// Monte Carlo path count.
    #[arg(long)]
    pub paths: Option<u64>,
    /// Number of grid cells.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub umax: Option<f64>,
    /// Worker threads for the Monte Carlo oracle.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Halve Phi(0+) before the comparison (negative control for verify).
    #[arg(long)]
    pub inject_phi0_error: bool,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            paths: self.paths,
            grid: self.grid,
            umax: self.umax,
            workers: self.workers,
            inject_phi0_error: self.inject_phi0_error,
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let args = match &cli.command {
        Command::Solve(a)
        | Command::Asymptotics(a)
        | Command::Simulate(a)
        | Command::Verify(a)
        | Command::Report(a) => a,
    };
    let rc = commands::load(&args.config)?;
    let ov = args.overrides();
    match cli.command {
        Command::Solve(_) => commands::cmd_solve(&rc, &ov).map(|_| ()),
        Command::Asymptotics(_) => commands::cmd_asymptotics(&rc, &ov).map(|_| ()),
        Command::Simulate(_) => commands::cmd_simulate(&rc, &ov).map(|_| ()),
        Command::Verify(_) => commands::cmd_verify(&rc, &ov).map(|_| ()),
        Command::Report(_) => commands::cmd_report(&rc, &ov).map(|_| ()),
    }
}
