use std::io::Write;
use std::path::{Path, PathBuf};

use bessel_exit::mc::{
    add_ks_comparison, simulate_batch_with_workers, summarize, write_samples_csv, BatchSummary,
    SimConfig,
};
use bessel_exit::{Index, ZeroBoundary};
use clap::{Args, ValueEnum};

use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::Settings;

/// Timeout fractions further than this many standard errors above the
/// analytic value are reported as an anomaly.
pub const TIMEOUT_Z_LIMIT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZeroBoundaryArg {
    Reflect,
    Kill,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, value_enum, default_value = "reflect")]
    pub zero_boundary: ZeroBoundaryArg,
    #[arg(long)]
    pub x0: f64,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub step: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Paths still inside at this time count as timeouts.
    #[arg(long, default_value_t = 20.0)]
    pub max_time: f64,
    /// Turns off the Brownian-bridge crossing test.
    #[arg(long)]
    pub no_bridge: bool,
    #[arg(long, env = "BESSEL_EXIT_WORKERS")]
    pub workers: Option<usize>,
    /// Writes `<prefix>.samples.csv`, `<prefix>.summary.json` and
    /// `<prefix>.manifest.json`; without it the summary goes to stdout.
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
    /// Adds KS distances to the analytic exit-time laws.
    #[arg(long)]
    pub compare: bool,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn index(mu: f64, zb: ZeroBoundaryArg) -> bessel_exit::Result<Index> {
    match zb {
        ZeroBoundaryArg::Kill => Index::killing(mu),
        ZeroBoundaryArg::Reflect if mu >= 0.0 => Index::new(mu, ZeroBoundary::NotApplicable),
        ZeroBoundaryArg::Reflect => Index::reflecting(mu),
    }
}

pub fn run(args: &SimulateArgs, settings: &Settings) -> CliResult<()> {
    let index = index(args.mu, args.zero_boundary)?;
    let cfg = SimConfig {
        step: args.step,
        max_time: args.max_time,
        seed: args.seed,
        n_paths: args.paths,
        bridge_correction: !args.no_bridge,
    };
    let workers = settings.workers(args.workers);
    log::info!(
        "simulating {} paths from x0 = {} with step {}, workers: {workers}",
        args.paths,
        args.x0,
        args.step
    );
    let batch = simulate_batch_with_workers(index, args.x0, &cfg, workers)?;
    let mut summary = summarize(index, args.x0, cfg.max_time, &batch)?;
    if args.compare {
        add_ks_comparison(index, args.x0, &batch, &mut summary)?;
    }
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serialises");
    json.push('\n');
    match &args.out_prefix {
        Some(prefix) => {
            let samples = with_suffix(prefix, ".samples.csv");
            let mut buf = Vec::new();
            write_samples_csv(&mut buf, &batch.samples).map_err(|e| CliError::io(&samples, e))?;
            std::fs::write(&samples, buf).map_err(|e| CliError::io(&samples, e))?;
            let path = with_suffix(prefix, ".summary.json");
            std::fs::write(&path, &json).map_err(|e| CliError::io(&path, e))?;
            manifest(args, &cfg).write(&with_suffix(prefix, ".manifest.json"))?;
            log::info!("wrote {} and {}", samples.display(), path.display());
        }
        None => std::io::stdout()
            .write_all(json.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e))?,
    }
    check_timeouts(&summary)
}

fn manifest(args: &SimulateArgs, cfg: &SimConfig) -> RunManifest {
    RunManifest::new("simulate")
        .with_f64("mu", args.mu)
        .with(
            "zero_boundary",
            match args.zero_boundary {
                ZeroBoundaryArg::Reflect => "reflect",
                ZeroBoundaryArg::Kill => "kill",
            },
        )
        .with_f64("x0", args.x0)
        .with("paths", cfg.n_paths)
        .with_f64("step", cfg.step)
        .with("seed", cfg.seed)
        .with_f64("max_time", cfg.max_time)
        .with("bridge_correction", cfg.bridge_correction)
        .with("compare", args.compare)
}

fn check_timeouts(summary: &BatchSummary) -> CliResult<()> {
    let tc = &summary.timeout_check;
    if tc.z > TIMEOUT_Z_LIMIT {
        return Err(CliError::Anomaly(format!(
            "timeout fraction {:.3e} exceeds the analytic {:.3e} by {:.1} standard errors",
            tc.observed, tc.expected, tc.z
        )));
    }
    Ok(())
}
