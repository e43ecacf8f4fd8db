//! `netbound`: capacity, bounding-model, cut-bound, gap and emulation
//! reports from channel, network and experiment files.

mod bound;
mod capacity;
mod emulate;
mod error;
mod model;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netbound::emulator::DEFAULT_MEM_BUDGET;
use netbound::model::{DEFAULT_GRID, DEFAULT_SLACK};
use netbound::rng::DEFAULT_SEED;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "netbound", version, about = "Bit-pipe bounds for networks of noisy channels")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Write the machine-readable report here (`-` for stdout instead of the table).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Solver tolerance in bits.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Strictness margin added to upper-model rates.
    #[arg(long, global = true, default_value_t = DEFAULT_SLACK)]
    pub slack: f64,
    /// Input-distribution grid resolution.
    #[arg(long, global = true, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// Most codebook symbols an emulation may hold.
    #[arg(long = "mem-budget", global = true, default_value_t = DEFAULT_MEM_BUDGET)]
    pub mem_budget: u64,
    /// Fail when the upper-model condition checker finds negative slack.
    #[arg(long, global = true)]
    pub verify: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Lower,
    Upper,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Capacity of a point-to-point channel.
    Capacity {
        channel: PathBuf,
    },
    /// Lower or upper bit-pipe model of a channel.
    Model(model::ModelArgs),
    /// Cut bounds on a network after model replacement.
    Bound(bound::BoundArgs),
    /// Ratio and additive gaps between lower and upper models.
    Gap(bound::GapArgs),
    /// Monte-Carlo emulation threshold experiment.
    Emulate(emulate::EmulateArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    if g.grid < 2 {
        return Err(CliError::Usage("--grid must be at least 2".into()));
    }
    if !(g.tol > 0.0) || !(g.slack > 0.0) {
        return Err(CliError::Usage("--tol and --slack must be positive".into()));
    }
    match &cli.command {
        Command::Capacity { channel } => capacity::run(g, channel),
        Command::Model(a) => model::run(g, a),
        Command::Bound(a) => bound::run_bound(g, a),
        Command::Gap(a) => bound::run_gap(g, a),
        Command::Emulate(a) => emulate::run(g, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
