mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::SweepKey;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Geometry(String),
    Numeric(String),
    /// The optimizer stopped before reaching the gradient tolerance; the report was written.
    NotConverged(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Geometry(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::NotConverged(_) => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Geometry(m) => write!(f, "geometry error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical error: {m}"),
            CliError::NotConverged(m) => write!(f, "not converged: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<markov_gap::Error> for CliError {
    fn from(e: markov_gap::Error) -> Self {
        use markov_gap::Error;
        match e {
            Error::Validation(_) => CliError::Config(e.to_string()),
            Error::Geometry(_) => CliError::Geometry(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "markov-gap", version, about = "Markov gap of free-fermion ground states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides output.dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run even when the optimized block exceeds output.max_dim
    #[arg(long)]
    force: bool,
    /// Print optimizer progress to stderr
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bare and optimized Markov gap for one configuration
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// One run per value of a geometry key; writes sweep.csv
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Swept key (defaults to sweep.key in the config)
        #[arg(long, value_enum)]
        key: Option<SweepKey>,
        /// Comma-separated values (defaults to sweep.values in the config)
        #[arg(long)]
        values: Option<String>,
        /// Rows computed concurrently
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Purity, band-gap, Chern, geometry and time-reversal checks for a configuration
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare the Gaussian formulas with the dense state-vector oracle
    OracleCheck {
        /// Number of random Slater states
        #[arg(long, default_value_t = 50)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the 18-qubit toric-code check
        #[arg(long)]
        skip_toric: bool,
    },
    /// Export the magnetic band structure and per-band Chern numbers
    Bands {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Momentum points per direction (k_x per magnetic zone)
        #[arg(long, default_value_t = 24)]
        nk: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { common } => commands::run(&common),
        Command::Sweep { common, key, values, jobs } => commands::sweep(&common, key, values.as_deref(), jobs),
        Command::Validate { config } => commands::validate(&config),
        Command::OracleCheck { count, seed, skip_toric } => commands::oracle_check(count, seed, !skip_toric),
        Command::Bands { config, out, nk } => commands::bands(&config, out.as_deref(), nk),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("markov-gap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
