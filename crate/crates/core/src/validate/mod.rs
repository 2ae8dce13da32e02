//! Invariant suites shared by the `validate` command and the test suite.
//!
//! Each suite returns a list of [`Check`]s with the measured quantity and the
//! budget it was held to. The two-sided estimate suites also return the
//! empirical comparison constants, which callers may persist and compare
//! across runs with [`constants_drift`].

mod exitlaw;
mod kernels;
mod mc;
mod special;

use std::str::FromStr;
use std::time::Instant;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use exitlaw::{
    asymptotic_convergence, convergence_passes, flux_consistency, mass_conservation,
    q_sandwich_constants, ConvergenceRow, FluxSample, MassRow, Q01_ORDERS, Q1_ORDERS,
};
pub use kernels::{
    chapman_kolmogorov, heat_residual, lemma_sandwich_grid, p1_sandwich_constants, P1_ORDERS,
};
pub use special::lemma_2_1_sweep;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Special,
    Kernels,
    Exitlaw,
    Mc,
    All,
}

impl Suite {
    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Special => "special",
            Suite::Kernels => "kernels",
            Suite::Exitlaw => "exitlaw",
            Suite::Mc => "mc",
            Suite::All => "all",
        }
    }

    fn members(&self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Special, Suite::Kernels, Suite::Exitlaw, Suite::Mc],
            s => vec![*s],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "special" => Suite::Special,
            "kernels" => Suite::Kernels,
            "exitlaw" => Suite::Exitlaw,
            "mc" => Suite::Mc,
            "all" => Suite::All,
            other => return Err(Error::Parse(format!("unknown suite `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidateOptions {
    /// Smaller grids and fewer paths.
    pub quick: bool,
    pub seed: u64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            quick: false,
            seed: 20_240_611,
        }
    }
}

/// Outcome of one invariant check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    /// The quantity held to `budget` (worst error, violation count, ...).
    pub measured: f64,
    pub budget: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `measured ≤ budget`.
    pub fn at_most(
        suite: Suite,
        name: &str,
        measured: f64,
        budget: f64,
        detail: impl Into<String>,
    ) -> Self {
        Check {
            suite,
            name: name.to_string(),
            passed: measured <= budget,
            measured,
            budget,
            detail: detail.into(),
        }
    }

    fn failed(suite: Suite, name: &str, err: &Error) -> Self {
        Check {
            suite,
            name: name.to_string(),
            passed: false,
            measured: f64::NAN,
            budget: f64::NAN,
            detail: format!("error: {err}"),
        }
    }
}

/// Empirical constants `c₁ ≤ q/K ≤ c₂` of a two-sided estimate on a grid and
/// on its 2× refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConstants {
    /// `q1`, `q01_one`, `q01_zero` or `p1`.
    pub kernel: String,
    pub mu: f64,
    pub c1: f64,
    pub c2: f64,
    pub c1_refined: f64,
    pub c2_refined: f64,
}

impl EmpiricalConstants {
    /// Largest relative change of either constant under refinement.
    pub fn drift(&self) -> f64 {
        rel_change(self.c1, self.c1_refined).max(rel_change(self.c2, self.c2_refined))
    }

    pub fn is_sandwich(&self) -> bool {
        [self.c1, self.c2, self.c1_refined, self.c2_refined]
            .iter()
            .all(|c| c.is_finite() && *c > 0.0)
    }
}

fn rel_change(a: f64, b: f64) -> f64 {
    ((b - a) / a).abs()
}

/// Allowed drift of the empirical constants under grid refinement and
/// between runs.
pub const CONSTANT_DRIFT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub suite: Suite,
    pub quick: bool,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub constants: Vec<EmpiricalConstants>,
    pub elapsed_seconds: f64,
}

/// Runs one suite (or all of them).
pub fn run(suite: Suite, opts: &ValidateOptions) -> ValidationReport {
    let start = Instant::now();
    let mut checks = Vec::new();
    let mut constants = Vec::new();
    for s in suite.members() {
        match s {
            Suite::Special => checks.extend(special::run(opts)),
            Suite::Kernels => {
                let (c, k) = kernels::run(opts);
                checks.extend(c);
                constants.extend(k);
            }
            Suite::Exitlaw => {
                let (c, k) = exitlaw::run(opts);
                checks.extend(c);
                constants.extend(k);
            }
            Suite::Mc => checks.extend(mc::run(opts)),
            Suite::All => unreachable!(),
        }
    }
    ValidationReport {
        suite,
        quick: opts.quick,
        seed: opts.seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
        constants,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    }
}

/// Compares constants with a previous run; one check per matching entry.
pub fn constants_drift(
    previous: &[EmpiricalConstants],
    current: &[EmpiricalConstants],
) -> Vec<Check> {
    current
        .iter()
        .filter_map(|c| {
            let p = previous
                .iter()
                .find(|p| p.kernel == c.kernel && p.mu == c.mu)?;
            let drift =
                rel_change(p.c1_refined, c.c1_refined).max(rel_change(p.c2_refined, c.c2_refined));
            Some(Check::at_most(
                Suite::All,
                &format!("constants_drift_{}_mu{}", c.kernel, c.mu),
                drift,
                CONSTANT_DRIFT,
                "relative change of archived c1, c2 against the previous run",
            ))
        })
        .collect()
}

/// Uniform draws for the randomised checks.
pub(crate) struct Draws(ChaCha8Rng);

impl Draws {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Draws(rng)
    }

    /// Uniform on the open interval `(a, b)`.
    pub fn uniform(&mut self, a: f64, b: f64) -> f64 {
        let u = ((self.0.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
        a + (b - a) * u
    }

    pub fn log_uniform(&mut self, a: f64, b: f64) -> f64 {
        self.uniform(a.ln(), b.ln()).exp()
    }
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

pub(crate) fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// Unwraps a measured result into a check, turning errors into failures.
pub(crate) fn checked(suite: Suite, name: &str, r: Result<Check>) -> Check {
    r.unwrap_or_else(|e| Check::failed(suite, name, &e))
}
