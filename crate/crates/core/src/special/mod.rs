//! Bessel functions, their zeros, and the index/boundary conventions shared
//! by every evaluator in the crate.

mod bessel;
mod ratio;
mod zeros;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub use bessel::{
    bessel_i_normalized_scaled, bessel_i_scaled, bessel_j, bessel_j_normalized,
    ln_bessel_i_normalized_scaled,
};
pub use ratio::{i_ratio_bounds, ln_i_ratio_bounds};
pub use zeros::{
    bessel_j_deriv_at_zero, bessel_zeros, cached_zeros, ZeroTable, ZERO_REL_WIDTH,
    ZERO_TABLE_FORMAT,
};

/// Behaviour of the Bessel process at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroBoundary {
    /// Paths are reflected at 0 (needs `μ > -1`).
    Reflecting,
    /// Paths are absorbed at 0 (needs `μ < 0`).
    Killing,
    /// The origin is never reached (`μ ≥ 0`).
    NotApplicable,
}

/// A Bessel index together with its boundary convention at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Index {
    mu: f64,
    zero_boundary: ZeroBoundary,
}

impl Index {
    pub fn new(mu: f64, zero_boundary: ZeroBoundary) -> Result<Self> {
        if !mu.is_finite() {
            return domain(format!("index must be finite, got {mu}"));
        }
        let ok = match zero_boundary {
            ZeroBoundary::Reflecting => mu > -1.0,
            ZeroBoundary::Killing => mu < 0.0,
            ZeroBoundary::NotApplicable => mu >= 0.0,
        };
        if !ok {
            let rule = match zero_boundary {
                ZeroBoundary::Reflecting => "a reflecting origin needs mu > -1",
                ZeroBoundary::Killing => "a killing origin needs mu < 0",
                ZeroBoundary::NotApplicable => "an unattainable origin needs mu >= 0",
            };
            return domain(format!("{rule}, got mu = {mu}"));
        }
        Ok(Index { mu, zero_boundary })
    }

    pub fn reflecting(mu: f64) -> Result<Self> {
        Self::new(mu, ZeroBoundary::Reflecting)
    }

    pub fn killing(mu: f64) -> Result<Self> {
        Self::new(mu, ZeroBoundary::Killing)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn zero_boundary(&self) -> ZeroBoundary {
        self.zero_boundary
    }

    /// True when paths may be absorbed at the origin.
    pub fn kills_at_zero(&self) -> bool {
        self.zero_boundary == ZeroBoundary::Killing
    }
}

/// Truncation policy for the Fourier–Bessel series.
///
/// A series is cut after term `N` once `j_N² t / 2 ≥ min_exponent` and the
/// analytic tail envelope is below `abs_tol` or below `rel_tol` times the
/// partial sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_terms: usize,
    pub min_exponent: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            abs_tol: 1e-12,
            rel_tol: 1e-14,
            max_terms: 20_000,
            min_exponent: 40.0,
        }
    }
}

impl SeriesConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return domain("series tolerances must be positive");
        }
        if self.max_terms == 0 {
            return domain("series max_terms must be at least 1");
        }
        if !(self.min_exponent >= 0.0) || !self.min_exponent.is_finite() {
            return domain("series min_exponent must be finite and non-negative");
        }
        Ok(())
    }
}
