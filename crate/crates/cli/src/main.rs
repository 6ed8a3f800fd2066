//! `fpptess`: seeded batch experiments for first-passage percolation on
//! Poisson hyperplane and Poisson–Voronoi tessellations.

mod commands;
mod output;
mod svg;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::output::Format;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<fpptess::Error> for CliError {
    fn from(e: fpptess::Error) -> Self {
        use fpptess::Error as E;
        match e {
            E::Io(_) | E::Json(_) => CliError::Io(e.to_string()),
            e if e.is_config_error() => CliError::Config(e.to_string()),
            e => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fpptess", version, about = "First-passage percolation experiments on random tessellations")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Global {
    /// Base seed for every random stream of the run.
    #[arg(long, env = "FPPTESS_SEED", default_value_t = 0, global = true)]
    pub seed: u64,
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    /// Omit the generation timestamp so repeated runs are byte-identical.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Limit shape boundary of a hyperplane model from its closed-form time constant.
    PhtShape(commands::PhtShape),
    /// Monte Carlo tau(0, r u) / r against mu(u) over a direction grid.
    PhtSweep(commands::PhtSweep),
    /// Exceedance probability of the uniform deviation over a matched direction grid.
    PhtDeviation(commands::PhtDeviation),
    /// Exact Poisson tails next to the Gaussian-type and Chernoff bounds.
    PoissonTail(commands::PoissonTail),
    /// Graph-ball growth and ball averages on Poisson-Voronoi tessellations.
    VoronoiErgodic(commands::VoronoiErgodic),
    /// Time constant estimates for face-marked Voronoi cells.
    VoronoiTimeconst(commands::VoronoiTimeconst),
    /// Grid fields and greedy lattice-animal statistics.
    Tameness(commands::Tameness),
    /// Sphere covering size and coverage check.
    Covering(commands::Covering),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let g = &cli.global;
    match &cli.command {
        Command::PhtShape(a) => commands::pht_shape(a, g),
        Command::PhtSweep(a) => commands::pht_sweep(a, g),
        Command::PhtDeviation(a) => commands::pht_deviation(a, g),
        Command::PoissonTail(a) => commands::poisson_tail(a, g),
        Command::VoronoiErgodic(a) => commands::voronoi_ergodic(a, g),
        Command::VoronoiTimeconst(a) => commands::voronoi_timeconst(a, g),
        Command::Tameness(a) => commands::tameness(a, g),
        Command::Covering(a) => commands::covering(a, g),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fpptess: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
