//! Free and killed transition densities of the Bessel process, all taken
//! with respect to the speed measure `m(dy) = 2 y^{2μ+1} dy`.

use crate::error::{domain, Result};
use crate::special::{ln_bessel_i_normalized_scaled, SeriesConfig};
use crate::spectral::{
    eigen_factor, eigenfunction, first_zero, Envelope, Expansion, SeriesOutcome,
};

/// Fixed constants of the speed measure `m(dy) = 2 y^{2μ+1} dy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedMeasure {
    pub mu: f64,
}

impl SpeedMeasure {
    pub const NORMALIZATION: f64 = 2.0;

    pub fn density_exponent(&self) -> f64 {
        2.0 * self.mu + 1.0
    }

    /// `2 y^{2μ+1}`.
    pub fn density(&self, y: f64) -> f64 {
        Self::NORMALIZATION * y.powf(self.density_exponent())
    }
}

/// A space-time point at which a density is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub t: f64,
    pub x: f64,
    pub y: Option<f64>,
}

impl EvalPoint {
    /// Point for a killed kernel: `t > 0`, `x, y ∈ (0, 1)`.
    pub fn killed(t: f64, x: f64, y: f64) -> Result<Self> {
        check_time(t)?;
        check_open_unit("x", x)?;
        check_open_unit("y", y)?;
        Ok(EvalPoint { t, x, y: Some(y) })
    }

    /// Point for the free kernel: `t > 0`, `x ≥ 0`, `y > 0`.
    pub fn free(t: f64, x: f64, y: f64) -> Result<Self> {
        check_time(t)?;
        if !(x >= 0.0) || !x.is_finite() || !(y > 0.0) || !y.is_finite() {
            return domain(format!(
                "free kernel needs x >= 0 and y > 0, got x = {x}, y = {y}"
            ));
        }
        Ok(EvalPoint { t, x, y: Some(y) })
    }
}

pub(crate) fn check_mu(mu: f64) -> Result<()> {
    if !(mu > -1.0) || !mu.is_finite() {
        return domain(format!("index must exceed -1, got {mu}"));
    }
    Ok(())
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("time must be positive and finite, got {t}"));
    }
    Ok(())
}

pub(crate) fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return domain(format!("{name} must lie in (0, 1), got {v}"));
    }
    Ok(())
}

fn check_closed_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return domain(format!("{name} must lie in [0, 1], got {v}"));
    }
    Ok(())
}

/// `ln p^{(μ)}(t; x, y)` for the process reflected at the origin.
pub fn ln_free_density(mu: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    check_mu(mu)?;
    EvalPoint::free(t, x, y)?;
    let z = x * y / t;
    let d = x - y;
    Ok(-(mu + 1.0) * (2.0 * t).ln() + ln_bessel_i_normalized_scaled(mu, z)? - d * d / (2.0 * t))
}

/// Transition density `p^{(μ)}(t; x, y) = (2t)^{-(μ+1)} G_μ(xy/t) e^{-(x-y)²/2t}`
/// where `G_μ(z) = e^{-z} (z/2)^{-μ} I_μ(z)`; at `x = 0` this is
/// `e^{-y²/2t} / ((2t)^{μ+1} Γ(μ+1))`.
pub fn free_density(mu: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    check_mu(mu)?;
    EvalPoint::free(t, x, y)?;
    let d = x - y;
    let exponent = -d * d / (2.0 * t);
    let power = (2.0 * t).powf(-(mu + 1.0));
    if exponent > -600.0 && power.is_normal() {
        let g = ln_bessel_i_normalized_scaled(mu, x * y / t)?.exp();
        let v = power * g * exponent.exp();
        if v.is_normal() {
            return Ok(v);
        }
    }
    Ok(ln_free_density(mu, t, x, y)?.exp())
}

/// Comparison kernel `e^{-(x-y)²/2t} / ((xy + t)^{μ+1/2} √t)`, equivalent to
/// the free density up to constants depending on `μ` only.
pub fn free_density_comparison(mu: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    check_mu(mu)?;
    EvalPoint::free(t, x, y)?;
    if x == 0.0 {
        return domain("comparison kernel needs x > 0");
    }
    let d = x - y;
    let ln = -d * d / (2.0 * t) - (mu + 0.5) * (x * y + t).ln() - 0.5 * t.ln();
    Ok(ln.exp())
}

fn killed_expansion(mu: f64, x: f64, y: f64) -> Result<Expansion> {
    Expansion::new(
        mu,
        move |j, jp1| Ok(eigenfunction(mu, j, x)? * eigenfunction(mu, j, y)? / (jp1 * jp1)),
        move |s| Envelope {
            scale: s.envelope * s.envelope * s.denom,
            pow: 2.0 * mu + 1.0,
            factors: [eigen_factor(mu, x), eigen_factor(mu, y)],
        },
    )
}

/// Eigenfunction expansion of the density killed at 1, with diagnostics.
///
/// `x` and `y` may be `0` or `1`; the eigenfunctions `x^{-μ}J_μ(jx)` extend
/// continuously to both ends.
pub fn killed_density_series_outcome(
    mu: f64,
    t: f64,
    x: f64,
    y: f64,
    cfg: &SeriesConfig,
) -> Result<SeriesOutcome> {
    check_mu(mu)?;
    check_time(t)?;
    check_closed_unit("x", x)?;
    check_closed_unit("y", y)?;
    killed_expansion(mu, x, y)?.eval(t, cfg)
}

/// `p₁^{(μ)}(t, x, y) = (xy)^{-μ} Σ J_μ(j_n x) J_μ(j_n y) / J_{μ+1}(j_n)² · e^{-j_n² t/2}`.
pub fn killed_density_series(mu: f64, t: f64, x: f64, y: f64, cfg: &SeriesConfig) -> Result<f64> {
    Ok(killed_density_series_outcome(mu, t, x, y, cfg)?.value)
}

/// Reflection-principle imitation `p(t,x,y) − p(t,x,2−y)` for `y ∈ (1/2, 1]`.
///
/// The image term is computed as a ratio so the difference keeps full
/// relative accuracy when the two kernels nearly coincide.
pub fn killed_density_reflection(mu: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    check_mu(mu)?;
    check_time(t)?;
    check_open_unit("x", x)?;
    if !(y > 0.5 && y <= 1.0) {
        return domain(format!(
            "reflection approximation needs y in (1/2, 1], got {y}"
        ));
    }
    if y == 1.0 {
        return Ok(0.0);
    }
    let ln_direct = ln_free_density(mu, t, x, y)?;
    let ln_image = ln_free_density(mu, t, x, 2.0 - y)?;
    Ok(-ln_direct.exp() * (ln_image - ln_direct).exp_m1())
}

/// Relative size of the neglected remainder in [`killed_density_reflection`].
///
/// The remainder is at most `M · p(t,x,2−y)` with
/// `M = max(((2−y)/y)^{2μ+4} − 1, 1 − (y/(2−y))²)`, from the ratio bounds
/// of `I_μ`; this returns `M p(t,x,2−y) / (p(t,x,y) − p(t,x,2−y))`.
pub fn killed_density_reflection_error(mu: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    let approx = killed_density_reflection(mu, t, x, y)?;
    if y == 1.0 {
        return Ok(0.0);
    }
    let image = free_density(mu, t, x, 2.0 - y)?;
    let m = (((2.0 - y) / y).powf(2.0 * mu + 4.0) - 1.0).max(1.0 - (y / (2.0 - y)).powi(2));
    Ok(m * image / approx)
}

/// Density of the process killed at both 0 and 1, `μ < 0`:
/// `p_{0,1}^{(μ)} = (xy)^{-2μ} p₁^{(−μ)}`.
pub fn killed_density_two_sided(
    mu: f64,
    t: f64,
    x: f64,
    y: f64,
    cfg: &SeriesConfig,
) -> Result<f64> {
    if !(mu < 0.0) {
        return domain(format!("two-sided killing needs mu < 0, got {mu}"));
    }
    check_closed_unit("x", x)?;
    check_closed_unit("y", y)?;
    let weight = (x * y).powf(-2.0 * mu);
    Ok(weight * killed_density_series(-mu, t, x, y, cfg)?)
}

/// Comparison kernel `(1 ∧ (1−x)(1−y)/t) e^{-j_{μ,1}² t/2} p^{(μ)}(t,x,y)` of
/// the two-sided estimate for `p₁`.
pub fn killed_density_estimate_kernel(mu: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    Ok(ln_killed_density_estimate_kernel(mu, t, x, y)?.exp())
}

/// Logarithm of [`killed_density_estimate_kernel`].
pub fn ln_killed_density_estimate_kernel(mu: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    check_mu(mu)?;
    EvalPoint::killed(t, x, y)?;
    let j1 = first_zero(mu)?;
    let factor = ((1.0 - x) * (1.0 - y) / t).min(1.0);
    Ok(factor.ln() - 0.5 * j1 * j1 * t + ln_free_density(mu, t, x, y)?)
}

#[cfg(test)]
/// Centred Gaussian density with variance `t`, evaluated at `x − y`.
pub(crate) fn gaussian(t: f64, x: f64, y: f64) -> f64 {
    (-(x - y) * (x - y) / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt()
}
