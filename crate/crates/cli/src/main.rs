//! `bwmarket`: run bandwidth-market simulations, sweep parameters, and
//! calibrate price models from the resulting series.
//!
//! Exit codes: 0 success, 1 validation error (bad flags, config, or
//! input), 2 runtime failure.

mod cmd_estimate;
mod cmd_run;
mod cmd_sweep;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn validation(msg: impl std::fmt::Display) -> Self {
        CliError::Validation(msg.to_string())
    }

    pub fn runtime(msg: impl std::fmt::Display) -> Self {
        CliError::Runtime(msg.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "bwmarket", version, about = "bandwidth spot-market simulator and calibration toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its artifacts.
    Run(RunArgs),
    /// Run a (lambda x C_max x seed) sweep and aggregate efficiency rows.
    Sweep(SweepArgs),
    /// Fit price models to a price CSV and write calibration artifacts.
    Estimate(EstimateArgs),
}

#[derive(clap::Args)]
pub struct RunArgs {
    /// Config file (flat key = value); defaults to the reference setup.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for prices.csv, demands.csv, manifest.txt.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(clap::Args)]
pub struct SweepArgs {
    /// Base config; sweep values override lambda, C_max, and seed.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Liquidity values (uniform across markets).
    #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
    pub lambda: Vec<f64>,
    /// Decision-parameter values.
    #[arg(long, value_delimiter = ',', default_value = "1,4,16,64")]
    pub cmax: Vec<f64>,
    /// Seeds, one independent run per (lambda, cmax, seed) cell.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9")]
    pub seeds: Vec<u64>,
    /// Output CSV path.
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    /// Additive noise (Ornstein-Uhlenbeck).
    Ou,
    /// Multiplicative noise.
    Mn,
}

#[derive(clap::Args)]
pub struct EstimateArgs {
    /// Price CSV (t,S_0,...); every column is calibrated independently.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Sample spacing of the series; alternatively supply --manifest.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Run manifest; provides dt and the topology for adjacency marking.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Histogram bins for the density fit.
    #[arg(long, default_value_t = 15)]
    pub bins: usize,
    /// Lags computed for the decay and autocovariance curves.
    #[arg(long, default_value_t = 40)]
    pub k_max: usize,
    /// Cap on the decay window used to fit the multiplicative alpha.
    #[arg(long, default_value_t = 20)]
    pub k_fit_cap: usize,
    /// Guard band for decay ratios, as a fraction of the sample std dev.
    #[arg(long, default_value_t = 0.04)]
    pub guard: f64,
    /// Topology for adjacency marking: "default" or an edge-list path.
    #[arg(long)]
    pub topology: Option<String>,
    /// Also emit the raw literal correlation display (cov / dt^2).
    #[arg(long)]
    pub literal_rho: bool,
    /// Output directory.
    #[arg(long, default_value = "estimate-out")]
    pub out: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run::execute(&args),
        Command::Sweep(args) => cmd_sweep::execute(&args),
        Command::Estimate(args) => cmd_estimate::execute(&args),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    }
}

/// Loads the config (or the reference defaults) and applies a seed
/// override. Config problems are validation errors.
pub fn load_config(
    path: Option<&PathBuf>,
    seed: Option<u64>,
) -> Result<bwmarket::SimulationConfig, CliError> {
    let mut config = match path {
        Some(p) => bwmarket::config::load_config_file(p).map_err(CliError::validation)?,
        None => bwmarket::SimulationConfig::paper_defaults(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config.validate().map_err(CliError::validation)?;
    Ok(config)
}
