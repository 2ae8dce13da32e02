//! Spectral series for the exit-time densities and their time integrals.

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};
use crate::kernels::{check_mu, check_time};
use crate::special::SeriesConfig;
use crate::spectral::{eigen_factor, eigenfunction, Envelope, Expansion, SeriesOutcome};

pub(crate) fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return domain(format!("starting point must lie in (0, 1), got {x}"));
    }
    Ok(())
}

pub(crate) fn check_negative(mu: f64) -> Result<()> {
    if !(mu < 0.0) || !mu.is_finite() {
        return domain(format!("two-sided exit laws need mu < 0, got {mu}"));
    }
    Ok(())
}

/// Series whose coefficients are `j^k · x^{-μ} J_μ(j x) / J_{μ+1}(j)^m`
/// times a constant, for `k ∈ {−1, 0, 1}`, `m ∈ {1, 2}`. `x = 0` is allowed.
pub(crate) fn expansion(
    mu: f64,
    x: f64,
    j_power: i32,
    denom_power: i32,
    constant: f64,
) -> Result<Expansion> {
    check_mu(mu)?;
    if !(0.0..1.0).contains(&x) {
        return domain(format!("starting point must lie in [0, 1), got {x}"));
    }
    Expansion::new(
        mu,
        move |j, jp1| {
            let phi = eigenfunction(mu, j, x)?;
            Ok(constant * j.powi(j_power) * phi / jp1.powi(denom_power))
        },
        move |s| {
            let denom = if denom_power == 2 {
                s.denom
            } else {
                s.denom.sqrt()
            };
            Envelope {
                scale: constant.abs() * s.envelope * denom,
                pow: mu + j_power as f64 + 0.5 * denom_power as f64,
                factors: [eigen_factor(mu, x), (0.0, 0.0)],
            }
        },
    )
}

/// `q₁` series `x^{-μ} Σ j_n J_μ(j_n x)/J_{μ+1}(j_n) e^{-j_n² t/2}`.
pub(crate) fn q1_expansion(mu: f64, x: f64) -> Result<Expansion> {
    expansion(mu, x, 1, 1, 1.0)
}

/// `P(T₁ > t) = 2 x^{-μ} Σ J_μ(j_n x)/(j_n J_{μ+1}(j_n)) e^{-j_n² t/2}`.
pub(crate) fn survival_expansion(mu: f64, x: f64) -> Result<Expansion> {
    expansion(mu, x, -1, 1, 2.0)
}

/// Prefactor of the exit-through-zero series, without its `x^{2ν}` weight.
fn zero_constant(nu: f64) -> f64 {
    ((1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu)).exp()
}

/// `q_{0,1}(t,x,0)` series at index `ν = −μ` without the `x^{2ν}` weight:
/// `2^{1−ν}/Γ(ν) Σ j^ν x^{-ν}J_ν(jx)/J_{ν+1}(j)² e^{-j²t/2}`.
pub(crate) fn zero_expansion(nu: f64, x: f64) -> Result<Expansion> {
    let c = zero_constant(nu);
    check_mu(nu)?;
    Expansion::new(
        nu,
        move |j, jp1| Ok(c * j.powf(nu) * eigenfunction(nu, j, x)? / (jp1 * jp1)),
        move |s| Envelope {
            scale: c * s.envelope * s.denom,
            pow: 2.0 * nu + 1.0,
            factors: [eigen_factor(nu, x), (0.0, 0.0)],
        },
    )
}

/// Exit density through 1 for the process reflected (or not reaching) 0,
/// with truncation diagnostics.
pub fn q1_series_outcome(mu: f64, t: f64, x: f64, cfg: &SeriesConfig) -> Result<SeriesOutcome> {
    check_time(t)?;
    check_x(x)?;
    q1_expansion(mu, x)?.eval(t, cfg)
}

/// `q₁^{(μ)}(t, x) = x^{-μ} Σ_n j_n J_μ(j_n x)/J_{μ+1}(j_n) e^{-j_n² t/2}`.
pub fn q1_series(mu: f64, t: f64, x: f64, cfg: &SeriesConfig) -> Result<f64> {
    Ok(q1_series_outcome(mu, t, x, cfg)?.value)
}

/// Survival function `P_x(T₁ > t)` from the integrated series.
pub fn q1_survival_series(mu: f64, t: f64, x: f64, cfg: &SeriesConfig) -> Result<f64> {
    check_time(t)?;
    check_x(x)?;
    Ok(survival_expansion(mu, x)?.eval(t, cfg)?.value)
}

/// Exit through 1 before 0 for `μ < 0`: `x^{-2μ} q₁^{(−μ)}(t, x)`.
pub fn q01_to_one_series(mu: f64, t: f64, x: f64, cfg: &SeriesConfig) -> Result<f64> {
    check_negative(mu)?;
    Ok(x.powf(-2.0 * mu) * q1_series(-mu, t, x, cfg)?)
}

pub fn q01_to_zero_series_outcome(
    mu: f64,
    t: f64,
    x: f64,
    cfg: &SeriesConfig,
) -> Result<SeriesOutcome> {
    check_negative(mu)?;
    check_time(t)?;
    check_x(x)?;
    let nu = -mu;
    let mut out = zero_expansion(nu, x)?.eval(t, cfg)?;
    let w = x.powf(2.0 * nu);
    out.value *= w;
    out.tail_bound *= w;
    Ok(out)
}

/// Exit through 0 before 1 for `μ < 0`, `ν = −μ`:
/// `2^{1−ν} x^ν/Γ(ν) Σ_n j_n^ν J_ν(j_n x)/J_{ν+1}(j_n)² e^{-j_n² t/2}`.
pub fn q01_to_zero_series(mu: f64, t: f64, x: f64, cfg: &SeriesConfig) -> Result<f64> {
    Ok(q01_to_zero_series_outcome(mu, t, x, cfg)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn reflected_brownian_hitting_density() {
        let cfg = SeriesConfig::default();
        for &(t, x) in &[(0.02, 0.3), (0.2, 0.6), (1.5, 0.9)] {
            let mut oracle = 0.0;
            for n in 1..300 {
                let k = (n as f64 - 0.5) * PI;
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                oracle += sign * k * (k * x).cos() * (-k * k * t / 2.0).exp();
            }
            let out = q1_series_outcome(-0.5, t, x, &cfg).unwrap();
            // the alternating sum loses digits like its condition number
            assert!(out.rel_error() < 1e-10);
            assert!(rel(out.value, oracle) <= out.rel_error(), "({t},{x})");
        }
    }

    #[test]
    fn survival_brownian() {
        let cfg = SeriesConfig::default();
        let (t, x) = (0.3, 0.4);
        let mut oracle = 0.0;
        for n in 1..300 {
            let k = (n as f64 - 0.5) * PI;
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            oracle += 2.0 * sign * (k * x).cos() / k * (-k * k * t / 2.0).exp();
        }
        assert!(rel(q1_survival_series(-0.5, t, x, &cfg).unwrap(), oracle) < 1e-12);
    }

    #[test]
    fn zero_series_brownian() {
        let cfg = SeriesConfig::default();
        let (t, x) = (0.1, 0.35);
        let oracle: f64 = (1..300)
            .map(|n| {
                let k = n as f64 * PI;
                k * (k * x).sin() * (-k * k * t / 2.0).exp()
            })
            .sum();
        assert!(rel(q01_to_zero_series(-0.5, t, x, &cfg).unwrap(), oracle) < 1e-12);
    }

    #[test]
    fn large_time_first_term() {
        let cfg = SeriesConfig::default();
        let mu = 1.2;
        let j1 = crate::spectral::first_zero(mu).unwrap();
        let t = 81.0 / (j1 * j1);
        let out = q1_series_outcome(mu, t, 0.4, &cfg).unwrap();
        assert_eq!(out.terms, 1);
    }

    #[test]
    fn domains() {
        let cfg = SeriesConfig::default();
        assert!(q1_series(0.0, 0.1, 1.0, &cfg).is_err());
        assert!(q1_series(0.0, 0.0, 0.5, &cfg).is_err());
        assert!(q01_to_one_series(0.0, 0.1, 0.5, &cfg).is_err());
        assert!(q01_to_zero_series(0.3, 0.1, 0.5, &cfg).is_err());
    }
}
