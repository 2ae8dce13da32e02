mod config;
mod density;
mod error;
mod manifest;
mod simulate;
mod validate;
mod zeros;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::FileConfig;
use error::{CliError, CliResult};

/// Exit-time densities of the Bessel process from [0,1) and (0,1).
#[derive(Debug, Parser)]
#[command(name = "bessel-exit", version)]
struct Cli {
    /// Settings file (defaults to ./bessel-exit.toml when present).
    #[arg(long, global = true, env = "BESSEL_EXIT_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate exit-time densities at points or on grids.
    Density(density::DensityArgs),
    /// Print (and cache) positive zeros of J_mu.
    Zeros(zeros::ZerosArgs),
    /// Monte Carlo exit times by an Euler scheme.
    Simulate(simulate::SimulateArgs),
    /// Run the invariant suites and report measured errors and constants.
    Validate(validate::ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Fallbacks from the config file for values not given as flags or
/// environment variables.
pub struct Settings {
    file: FileConfig,
}

impl Settings {
    pub fn cache_dir(&self, flag: Option<&Path>) -> Option<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.file.cache_dir.clone())
    }

    pub fn constants_file(&self, flag: Option<&Path>) -> Option<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.file.constants_file.clone())
    }

    pub fn workers(&self, flag: Option<usize>) -> usize {
        flag.or(self.file.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }

    pub fn format(&self, flag: Option<Format>) -> CliResult<Format> {
        if let Some(f) = flag {
            return Ok(f);
        }
        match &self.file.format {
            None => Ok(Format::Csv),
            Some(s) => Format::from_str(s, true)
                .map_err(|_| CliError::Usage(format!("bad format '{s}' in config file"))),
        }
    }
}

pub fn worker_pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))
}

fn execute(cli: Cli) -> CliResult<()> {
    let settings = Settings {
        file: FileConfig::load(cli.config.as_deref())?,
    };
    match &cli.command {
        Command::Density(a) => density::run(a, &settings),
        Command::Zeros(a) => zeros::run(a, &settings),
        Command::Simulate(a) => simulate::run(a, &settings),
        Command::Validate(a) => validate::run(a, &settings),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bessel-exit: {e}");
            e.into()
        }
    }
}
