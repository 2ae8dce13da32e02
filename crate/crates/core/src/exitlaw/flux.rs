//! Exit densities as boundary fluxes of the killed kernel, evaluated by
//! one-sided differences at `y = 1` with one Richardson step.

use crate::error::{domain, Result};
use crate::kernels::{killed_density_series, killed_density_two_sided};
use crate::special::SeriesConfig;

use super::series::{check_negative, check_x};

/// Largest step accepted by the difference quotients.
pub const MAX_FLUX_STEP: f64 = 1e-3;

/// Step balancing the `O(h²/t)` error left after extrapolation against
/// the `1/h` growth of rounding in the quotient: `min(10⁻³, 0.0025 √t)`.
pub fn flux_step(t: f64) -> f64 {
    (0.0025 * t.sqrt()).min(MAX_FLUX_STEP)
}

fn tight() -> SeriesConfig {
    SeriesConfig {
        abs_tol: 1e-300,
        rel_tol: 1e-16,
        ..SeriesConfig::default()
    }
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= MAX_FLUX_STEP) {
        return domain(format!(
            "flux step must lie in (0, {MAX_FLUX_STEP}], got {h}"
        ));
    }
    Ok(())
}

fn richardson(kernel: impl Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    let coarse = kernel(1.0 - h)? / h;
    let fine = kernel(1.0 - 0.5 * h)? / (0.5 * h);
    Ok(2.0 * fine - coarse)
}

/// First-order quotient `p₁(t, x, 1−h)/h` without extrapolation.
pub fn q1_flux_quotient(mu: f64, t: f64, x: f64, h: f64) -> Result<f64> {
    check_x(x)?;
    check_step(h)?;
    Ok(killed_density_series(mu, t, x, 1.0 - h, &tight())? / h)
}

/// `−∂_y p₁(t, x, y)|_{y=1}` from `p₁(t,x,1−h)/h` and `p₁(t,x,1−h/2)/(h/2)`
/// combined to cancel the `O(h)` term.
pub fn q1_via_flux(mu: f64, t: f64, x: f64, h: f64) -> Result<f64> {
    check_x(x)?;
    check_step(h)?;
    let cfg = tight();
    richardson(|y| killed_density_series(mu, t, x, y, &cfg), h)
}

/// `−∂_y p_{0,1}(t, x, y)|_{y=1}` for `μ < 0`.
pub fn q01_to_one_via_flux(mu: f64, t: f64, x: f64, h: f64) -> Result<f64> {
    check_negative(mu)?;
    check_x(x)?;
    check_step(h)?;
    let cfg = tight();
    richardson(|y| killed_density_two_sided(mu, t, x, y, &cfg), h)
}
