//! Densities of the first exit times of the Bessel process from `[0, 1)`
//! (reflecting or inaccessible origin) and from `(0, 1)` (killing origin).
//!
//! Every evaluator has a spectral series valid for moderate and large times,
//! and the dispatchers in this module switch to closed forms or explicit
//! small-time asymptotics where the series is unusable. Quantities tied to
//! a whole exit law (mass, distribution function) live in [`law`].

mod asymptotics;
mod ball;
mod brownian;
mod dispatch;
mod estimates;
mod flux;
pub mod law;
mod series;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::special::{Index, ZeroBoundary};

pub use asymptotics::{
    q01_zero_smalltime, q1_smalltime, q1_smalltime_branch, small_time_branch,
    structural_asymptotics, SmallTimeBranch, Structural,
};
pub use ball::q_ball;
pub use brownian::{bm_interval_exit, bm_interval_exit_cdf, Side};
pub use dispatch::{
    q01_to_one_auto, q01_to_zero_auto, q1_auto, series_crossover_time, splitting_probability,
    CROSSOVER_EXPONENT,
};
pub use estimates::{
    ln_q01_estimate_kernels, ln_q1_estimate_kernel, q01_estimate_kernels, q1_estimate_kernel,
};
pub use flux::{flux_step, q01_to_one_via_flux, q1_flux_quotient, q1_via_flux, MAX_FLUX_STEP};
pub use series::{
    q01_to_one_series, q01_to_zero_series, q01_to_zero_series_outcome, q1_series,
    q1_series_outcome, q1_survival_series,
};

/// Boundary point through which the process leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    One,
    Zero,
}

/// Representation used to produce a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    FluxDifference,
    SmallTimeAsymptotic,
    ClosedFormImages,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Series => "series",
            Method::FluxDifference => "flux",
            Method::SmallTimeAsymptotic => "asymptotic",
            Method::ClosedFormImages => "images",
        }
    }
}

/// How a value was computed and how far it may be from the true density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub method: Method,
    /// Relative error estimate; always finite and nonnegative.
    pub estimated_rel_error: f64,
}

impl RegimeReport {
    /// Non-finite or negative estimates are clamped to `f64::MAX` and 0.
    pub fn new(method: Method, estimated_rel_error: f64) -> Self {
        let e = if estimated_rel_error.is_nan() {
            f64::MAX
        } else {
            estimated_rel_error.clamp(0.0, f64::MAX)
        };
        RegimeReport {
            method,
            estimated_rel_error: e,
        }
    }
}

/// A single exit-density evaluation on the interval `[0, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitLawQuery {
    pub index: Index,
    pub t: f64,
    pub x: f64,
    pub boundary: Boundary,
    pub radius: f64,
}

impl ExitLawQuery {
    /// Validates the query; `radius` defaults to 1 through [`ExitLawQuery::unit`].
    pub fn new(index: Index, t: f64, x: f64, boundary: Boundary, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return domain(format!("radius must be positive, got {radius}"));
        }
        if !(t > 0.0) || !t.is_finite() {
            return domain(format!("time must be positive, got {t}"));
        }
        if !(x > 0.0 && x < radius) {
            return domain(format!("starting point must lie in (0, {radius}), got {x}"));
        }
        if boundary == Boundary::Zero && index.zero_boundary() != ZeroBoundary::Killing {
            return domain("exit through 0 needs a killing boundary at 0");
        }
        Ok(ExitLawQuery {
            index,
            t,
            x,
            boundary,
            radius,
        })
    }

    pub fn unit(index: Index, t: f64, x: f64, boundary: Boundary) -> Result<Self> {
        Self::new(index, t, x, boundary, 1.0)
    }

    /// Density through the dispatchers, rescaled from the unit interval.
    pub fn evaluate(&self) -> Result<(f64, RegimeReport)> {
        let r2 = self.radius * self.radius;
        let (t, x) = (self.t / r2, self.x / self.radius);
        let mu = self.index.mu();
        let (v, report) = match (self.boundary, self.index.kills_at_zero()) {
            (Boundary::One, false) => q1_auto(mu, t, x)?,
            (Boundary::One, true) => q01_to_one_auto(mu, t, x)?,
            (Boundary::Zero, _) => q01_to_zero_auto(mu, t, x)?,
        };
        Ok((v / r2, report))
    }
}
