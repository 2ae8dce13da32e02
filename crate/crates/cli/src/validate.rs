use std::io::Write;
use std::path::{Path, PathBuf};

use bessel_exit::validate::{
    constants_drift, run as run_suite, EmpiricalConstants, Suite, ValidateOptions, ValidationReport,
};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::Settings;

/// File name used inside the cache directory when no constants file is given.
pub const CONSTANTS_FILE: &str = "sandwich_constants.json";

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value = "all")]
    pub suite: Suite,
    /// Smaller grids and sample counts.
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report file; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Archive of empirical sandwich constants, compared and updated on
    /// every passing run.
    #[arg(long, env = "BESSEL_EXIT_CONSTANTS")]
    pub constants: Option<PathBuf>,
    #[arg(long, env = "BESSEL_EXIT_CACHE")]
    pub cache_dir: Option<PathBuf>,
}

/// Archived constants, kept apart for quick and full grids.
#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsArchive {
    #[serde(default)]
    pub quick: Vec<EmpiricalConstants>,
    #[serde(default)]
    pub full: Vec<EmpiricalConstants>,
}

impl ConstantsArchive {
    fn load(path: &Path) -> CliResult<Option<Self>> {
        match std::fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text).map(Some).map_err(|e| {
                CliError::Usage(format!("cannot read constants {}: {e}", path.display()))
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(CliError::io(path, e)),
        }
    }

    fn entries(&mut self, quick: bool) -> &mut Vec<EmpiricalConstants> {
        if quick {
            &mut self.quick
        } else {
            &mut self.full
        }
    }

    /// Replaces entries with the same kernel and index, appends new ones.
    fn merge(&mut self, quick: bool, current: &[EmpiricalConstants]) {
        let list = self.entries(quick);
        for c in current {
            match list
                .iter_mut()
                .find(|p| p.kernel == c.kernel && p.mu == c.mu)
            {
                Some(p) => *p = c.clone(),
                None => list.push(c.clone()),
            }
        }
    }
}

#[derive(Serialize)]
struct Output<'a> {
    manifest: RunManifest,
    #[serde(flatten)]
    report: &'a ValidationReport,
}

fn compare_with_archive(report: &mut ValidationReport, path: &Path) -> CliResult<()> {
    let mut archive = ConstantsArchive::load(path)?.unwrap_or_default();
    let checks = constants_drift(archive.entries(report.quick), &report.constants);
    log::info!(
        "compared {} constants with {}",
        checks.len(),
        path.display()
    );
    report.checks.extend(checks);
    report.passed = report.checks.iter().all(|c| c.passed);
    if report.passed {
        archive.merge(report.quick, &report.constants);
        let text = serde_json::to_string_pretty(&archive).expect("constants serialise");
        std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))?;
    } else {
        log::warn!("not updating {} after a failed run", path.display());
    }
    Ok(())
}

pub fn run(args: &ValidateArgs, settings: &Settings) -> CliResult<()> {
    let mut opts = ValidateOptions {
        quick: args.quick,
        ..ValidateOptions::default()
    };
    if let Some(seed) = args.seed {
        opts.seed = seed;
    }
    log::info!(
        "running suite {} (quick = {})",
        args.suite.as_str(),
        args.quick
    );
    let mut report = run_suite(args.suite, &opts);
    let archive = settings
        .constants_file(args.constants.as_deref())
        .or_else(|| {
            settings
                .cache_dir(args.cache_dir.as_deref())
                .map(|d| d.join(CONSTANTS_FILE))
        });
    match archive {
        Some(path) if !report.constants.is_empty() => compare_with_archive(&mut report, &path)?,
        Some(_) => {}
        None => log::info!("no constants archive configured; skipping the run-to-run comparison"),
    }
    let manifest = RunManifest::new("validate")
        .with("suite", args.suite.as_str())
        .with("quick", opts.quick)
        .with("seed", opts.seed);
    let mut json = serde_json::to_string_pretty(&Output {
        manifest,
        report: &report,
    })
    .expect("report serialises");
    json.push('\n');
    match &args.out {
        Some(p) => std::fs::write(p, &json).map_err(|e| CliError::io(p, e))?,
        None => std::io::stdout()
            .write_all(json.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e))?,
    }
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        log::info!("all {} checks passed", report.checks.len());
        Ok(())
    } else {
        Err(CliError::ValidationFailed(failed.join(", ")))
    }
}
