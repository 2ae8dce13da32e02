use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use bessel_exit::exitlaw::{
    bm_interval_exit, flux_step, q01_to_one_via_flux, q01_to_zero_series_outcome,
    q01_zero_smalltime, q1_series_outcome, q1_smalltime, q1_via_flux, Side,
};
use bessel_exit::{Boundary, Error, ExitLawQuery, Index, Method, SeriesConfig, ZeroBoundary};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::{worker_pool, Format, Settings};

/// `lo:hi:n` or `lo:hi:n:log`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub log: bool,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| {
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("'{p}' is not a finite number"))
        };
        let log = match parts.len() {
            3 => false,
            4 if parts[3] == "log" => true,
            4 => return Err(format!("unknown spacing '{}', expected 'log'", parts[3])),
            _ => return Err("expected lo:hi:n or lo:hi:n:log".into()),
        };
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2]
            .parse()
            .map_err(|_| format!("'{}' is not a point count", parts[2]))?;
        if n == 0 {
            return Err("a grid needs at least one point".into());
        }
        if log && !(lo > 0.0 && hi > 0.0) {
            return Err("a log grid needs positive end points".into());
        }
        Ok(Grid { lo, hi, n, log })
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}:{:?}:{}", self.lo, self.hi, self.n)?;
        if self.log {
            write!(f, ":log")?;
        }
        Ok(())
    }
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                let s = i as f64 / last;
                if i == 0 {
                    self.lo
                } else if i == self.n - 1 {
                    self.hi
                } else if self.log {
                    (self.lo.ln() + s * (self.hi.ln() - self.lo.ln())).exp()
                } else {
                    self.lo + s * (self.hi - self.lo)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    /// Exit through 1; the origin is killing when mu < 0.
    One,
    /// Exit through 0 before 1 (mu < 0, killing origin).
    Zero,
    /// Exit through 1 with the origin reflecting (mu > -1).
    Reflecting,
}

impl BoundaryArg {
    fn as_str(self) -> &'static str {
        match self {
            BoundaryArg::One => "one",
            BoundaryArg::Zero => "zero",
            BoundaryArg::Reflecting => "reflecting",
        }
    }

    fn query(self, mu: f64, t: f64, x: f64) -> bessel_exit::Result<ExitLawQuery> {
        let (index, boundary) = match self {
            BoundaryArg::Reflecting => (Index::reflecting(mu)?, Boundary::One),
            BoundaryArg::One if mu < 0.0 => (Index::killing(mu)?, Boundary::One),
            BoundaryArg::One => (Index::new(mu, ZeroBoundary::NotApplicable)?, Boundary::One),
            BoundaryArg::Zero => (Index::killing(mu)?, Boundary::Zero),
        };
        ExitLawQuery::unit(index, t, x, boundary)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Series,
    Asymptotic,
    Flux,
    Images,
}

impl MethodArg {
    fn as_str(self) -> &'static str {
        match self {
            MethodArg::Auto => "auto",
            MethodArg::Series => "series",
            MethodArg::Asymptotic => "asymptotic",
            MethodArg::Flux => "flux",
            MethodArg::Images => "images",
        }
    }
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, value_enum)]
    pub boundary: BoundaryArg,
    /// Single time.
    #[arg(long, conflicts_with = "t_grid", required_unless_present = "t_grid")]
    pub t: Option<f64>,
    /// Time grid `lo:hi:n[:log]`.
    #[arg(long)]
    pub t_grid: Option<Grid>,
    /// Single starting point.
    #[arg(long, conflicts_with = "x_grid", required_unless_present = "x_grid")]
    pub x: Option<f64>,
    /// Starting-point grid `lo:hi:n[:log]`.
    #[arg(long)]
    pub x_grid: Option<Grid>,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodArg,
    /// Relative truncation tolerance of the series (method=series only).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; a `<out>.manifest.json` is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "BESSEL_EXIT_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub mu: f64,
    pub t: f64,
    pub x: f64,
    pub boundary: &'static str,
    pub value: f64,
    pub method: &'static str,
    pub est_rel_error: f64,
}

#[derive(Serialize)]
struct JsonOutput<'a> {
    manifest: &'a RunManifest,
    rows: &'a [Row],
}

fn series_config(tol: Option<f64>) -> CliResult<SeriesConfig> {
    let mut cfg = SeriesConfig::default();
    if let Some(tol) = tol {
        cfg.rel_tol = tol;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn not_available(method: MethodArg, detail: &str) -> Error {
    Error::Domain(format!("method {} {detail}", method.as_str()))
}

/// One density value with the method that produced it and its estimated
/// relative error.
pub fn evaluate(
    mu: f64,
    boundary: BoundaryArg,
    method: MethodArg,
    t: f64,
    x: f64,
    cfg: &SeriesConfig,
) -> bessel_exit::Result<(f64, Method, f64)> {
    let query = boundary.query(mu, t, x)?;
    let killed = query.index.kills_at_zero();
    let to_zero = query.boundary == Boundary::Zero;
    // exit through 1 before 0 is x^{-2μ} times q₁ at index −μ
    let (m, weight) = if killed && !to_zero {
        (-mu, x.powf(-2.0 * mu))
    } else {
        (mu, 1.0)
    };
    match method {
        MethodArg::Auto => {
            let (v, r) = query.evaluate()?;
            Ok((v, r.method, r.estimated_rel_error))
        }
        MethodArg::Series => {
            let out = if to_zero {
                q01_to_zero_series_outcome(mu, t, x, cfg)?
            } else {
                q1_series_outcome(m, t, x, cfg)?
            };
            Ok((weight * out.value, Method::Series, out.rel_error()))
        }
        MethodArg::Asymptotic => {
            let (v, r) = if to_zero {
                q01_zero_smalltime(mu, t, x)?
            } else {
                q1_smalltime(m, t, x)?
            };
            Ok((weight * v, r.method, r.estimated_rel_error))
        }
        MethodArg::Flux => {
            if to_zero {
                return Err(not_available(method, "covers only the exit through 1"));
            }
            let h = flux_step(t);
            let f = |h: f64| {
                if killed {
                    q01_to_one_via_flux(mu, t, x, h)
                } else {
                    q1_via_flux(mu, t, x, h)
                }
            };
            let (coarse, fine) = (f(h)?, f(0.5 * h)?);
            let err = ((coarse - fine) / fine).abs();
            Ok((coarse, Method::FluxDifference, err))
        }
        MethodArg::Images => {
            if mu != -0.5 {
                return Err(not_available(method, "needs mu = -0.5 (Brownian motion)"));
            }
            let v = match (killed, to_zero) {
                (true, true) => bm_interval_exit(t, x, 0.0, 1.0, Side::Lower)?,
                (true, false) => bm_interval_exit(t, x, 0.0, 1.0, Side::Upper)?,
                // reflected at 0: Brownian motion on (−1, 1) leaving either side
                _ => {
                    bm_interval_exit(t, x, -1.0, 1.0, Side::Upper)?
                        + bm_interval_exit(t, x, -1.0, 1.0, Side::Lower)?
                }
            };
            Ok((v, Method::ClosedFormImages, 64.0 * f64::EPSILON))
        }
    }
}

pub fn run(args: &DensityArgs, settings: &Settings) -> CliResult<()> {
    let ts = match (args.t, args.t_grid) {
        (Some(t), _) => vec![t],
        (None, Some(g)) => g.points(),
        (None, None) => unreachable!("clap requires one of --t, --t-grid"),
    };
    let xs = match (args.x, args.x_grid) {
        (Some(x), _) => vec![x],
        (None, Some(g)) => g.points(),
        (None, None) => unreachable!("clap requires one of --x, --x-grid"),
    };
    let cfg = series_config(args.tol)?;
    let format = settings.format(args.format)?;
    let workers = settings.workers(args.workers);
    let points: Vec<(f64, f64)> = ts
        .iter()
        .flat_map(|&t| xs.iter().map(move |&x| (t, x)))
        .collect();
    let results: Vec<bessel_exit::Result<Row>> = worker_pool(workers)?.install(|| {
        points
            .par_iter()
            .map(|&(t, x)| {
                let (value, method, err) =
                    evaluate(args.mu, args.boundary, args.method, t, x, &cfg)?;
                Ok(Row {
                    mu: args.mu,
                    t,
                    x,
                    boundary: args.boundary.as_str(),
                    value,
                    method: method.as_str(),
                    est_rel_error: err,
                })
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for (r, (t, x)) in results.into_iter().zip(&points) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                log::debug!("failed at t = {t}, x = {x}");
                return Err(e.into());
            }
        }
    }
    let manifest = RunManifest::new("density")
        .with_f64("mu", args.mu)
        .with("boundary", args.boundary.as_str())
        .with_opt("t", args.t.map(|v| format!("{v:?}")))
        .with_opt("t_grid", args.t_grid)
        .with_opt("x", args.x.map(|v| format!("{v:?}")))
        .with_opt("x_grid", args.x_grid)
        .with("method", args.method.as_str())
        .with_f64("tol", cfg.rel_tol)
        .with("format", format.as_str());
    let bytes = match format {
        Format::Csv => to_csv(&rows)?,
        Format::Json => {
            let out = JsonOutput {
                manifest: &manifest,
                rows: &rows,
            };
            let mut s = serde_json::to_string_pretty(&out).expect("rows serialise");
            s.push('\n');
            s.into_bytes()
        }
    };
    match &args.out {
        Some(path) => {
            std::fs::write(path, &bytes).map_err(|e| CliError::io(path, e))?;
            if format == Format::Csv {
                manifest.write(&RunManifest::sidecar(path))?;
            }
            log::info!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::io("<stdout>", e))?,
    }
    Ok(())
}

/// Rows as CSV; floats use the shortest representation that round-trips.
pub fn to_csv(rows: &[Row]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::Usage(format!("cannot write CSV: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| CliError::Usage(format!("cannot write CSV: {e}")))
}
