//! Small-time forms of the exit densities.
//!
//! The explicit forms carry nominal error orders only; the constants are
//! `μ`-dependent and not known in closed form, so [`RegimeReport`]s from this
//! module give the order itself (constant 1).

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};
use crate::kernels::{check_mu, check_time, free_density, ln_free_density};

use super::brownian::{bm_interval_exit, Side};
use super::series::{check_negative, check_x};
use super::{Method, RegimeReport};

/// Which explicit small-time form `q1_smalltime` used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallTimeBranch {
    /// `x ≥ t`: `(1−x)/√(2πt³) · e^{-(1−x)²/2t} / x^{μ+1/2}`, error `O(t/x)`.
    Bulk,
    /// `x < t`: `(1−x)/(2^μ Γ(μ+1) t^{μ+2}) · e^{-(1+x²)/2t}`, error `O((x/t)² + t)`.
    NearOrigin,
}

/// Selector for the structural small-time identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structural {
    /// `q₁ ≈ 2(1−x)/t · p^{(μ)}(t, x, 1)`, error `O(t/(1−x))`.
    FreeKernelAtOne,
    /// `q₁ ≈ q^{BM}_{(x/4,1)}(t, x) / x^{μ+1/2}` for `x ∈ (1/2, 1)`, error `O(t)`.
    ShiftedBrownian,
    /// `q_{0,1}(·,0) ≈ −2μ x^{-2μ} p^{(−μ)}(t, x, 0)`, error `O(e^{-2(1−x)/t})`.
    ZeroKernel,
    /// `q_{0,1}(·,0) ≈ −4μ x^{-2μ} (1−x)/t · p^{(−μ)}(t, x, 0)`, error `O((1−x)/t + t)`.
    ZeroKernelNearOne,
}

impl Structural {
    /// Nominal relative error order at `(t, x)`.
    pub fn error_order(&self, t: f64, x: f64) -> f64 {
        match self {
            Structural::FreeKernelAtOne => t / (1.0 - x),
            Structural::ShiftedBrownian => t,
            Structural::ZeroKernel => (-2.0 * (1.0 - x) / t).exp(),
            Structural::ZeroKernelNearOne => (1.0 - x) / t + t,
        }
    }
}

/// Branch `q1_smalltime` picks at `(t, x)`: the two error orders `t/x` and
/// `(x/t)²` cross at `x = t`.
pub fn small_time_branch(t: f64, x: f64) -> SmallTimeBranch {
    if x >= t {
        SmallTimeBranch::Bulk
    } else {
        SmallTimeBranch::NearOrigin
    }
}

fn bulk(mu: f64, t: f64, x: f64) -> f64 {
    let ln = (1.0 - x).ln()
        - 0.5 * (2.0 * std::f64::consts::PI * t * t * t).ln()
        - (1.0 - x) * (1.0 - x) / (2.0 * t)
        - (mu + 0.5) * x.ln();
    ln.exp()
}

fn near_origin(mu: f64, t: f64, x: f64) -> f64 {
    let ln = (1.0 - x).ln()
        - mu * std::f64::consts::LN_2
        - ln_gamma(mu + 1.0)
        - (mu + 2.0) * t.ln()
        - (1.0 + x * x) / (2.0 * t);
    ln.exp()
}

/// Explicit small-time form of `q₁` in a chosen branch, `x ∈ [0, 1)`.
pub fn q1_smalltime_branch(
    mu: f64,
    t: f64,
    x: f64,
    branch: SmallTimeBranch,
) -> Result<(f64, RegimeReport)> {
    check_mu(mu)?;
    check_time(t)?;
    if !(0.0..1.0).contains(&x) {
        return domain(format!("starting point must lie in [0, 1), got {x}"));
    }
    let (value, err) = match branch {
        SmallTimeBranch::Bulk => {
            if x == 0.0 {
                return domain("the bulk small-time form needs x > 0");
            }
            (bulk(mu, t, x), t / x)
        }
        SmallTimeBranch::NearOrigin => (near_origin(mu, t, x), (x / t).powi(2) + t),
    };
    Ok((value, RegimeReport::new(Method::SmallTimeAsymptotic, err)))
}

/// Explicit small-time form of `q₁`, bulk branch for `x ≥ t`.
pub fn q1_smalltime(mu: f64, t: f64, x: f64) -> Result<(f64, RegimeReport)> {
    check_x(x)?;
    q1_smalltime_branch(mu, t, x, small_time_branch(t, x))
}

/// Explicit small-time form of `q_{0,1}(t, x, 0)` for `μ < 0`.
pub fn q01_zero_smalltime(mu: f64, t: f64, x: f64) -> Result<(f64, RegimeReport)> {
    check_negative(mu)?;
    check_time(t)?;
    check_x(x)?;
    let nu = -mu;
    let base = std::f64::consts::LN_2 + 2.0 * nu * x.ln() - ln_gamma(nu) - x * x / (2.0 * t);
    if 1.0 - x >= t * t.ln().abs() {
        let ln = base - (nu + 1.0) * (2.0 * t).ln();
        let err = (-2.0 * (1.0 - x) / t).exp();
        Ok((
            ln.exp(),
            RegimeReport::new(Method::SmallTimeAsymptotic, err),
        ))
    } else {
        let ln = base + 2.0 * std::f64::consts::LN_2 + (1.0 - x).ln() - (nu + 2.0) * (2.0 * t).ln();
        let err = (1.0 - x) / t + t;
        Ok((
            ln.exp(),
            RegimeReport::new(Method::SmallTimeAsymptotic, err),
        ))
    }
}

/// Leading-order structural forms of the exit densities.
pub fn structural_asymptotics(mu: f64, t: f64, x: f64, which: Structural) -> Result<f64> {
    check_time(t)?;
    check_x(x)?;
    match which {
        Structural::FreeKernelAtOne => {
            check_mu(mu)?;
            Ok((2.0 * (1.0 - x) / t).ln().exp() * free_density(mu, t, x, 1.0)?)
        }
        Structural::ShiftedBrownian => {
            check_mu(mu)?;
            if !(x > 0.5 && x < 1.0) {
                return domain(format!(
                    "the shifted Brownian form needs x in (1/2, 1), got {x}"
                ));
            }
            Ok(bm_interval_exit(t, x, 0.25 * x, 1.0, Side::Upper)? / x.powf(mu + 0.5))
        }
        Structural::ZeroKernel | Structural::ZeroKernelNearOne => {
            check_negative(mu)?;
            let nu = -mu;
            let mut ln = (2.0 * nu).ln() + 2.0 * nu * x.ln() + ln_free_density(nu, t, 0.0, x)?;
            if which == Structural::ZeroKernelNearOne {
                ln += (2.0 * (1.0 - x) / t).ln();
            }
            Ok(ln.exp())
        }
    }
}
