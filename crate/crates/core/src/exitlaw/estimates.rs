//! Comparison kernels of the two-sided estimates for the exit densities.

use crate::error::Result;
use crate::kernels::{check_mu, check_time};
use crate::spectral::first_zero;

use super::series::{check_negative, check_x};

/// `(1−x)(1+t)^{μ+2} / ((x+t)^{μ+1/2} t^{3/2}) · exp(−(1−x)²/2t − j_{μ,1}² t/2)`.
pub fn q1_estimate_kernel(mu: f64, t: f64, x: f64) -> Result<f64> {
    Ok(ln_q1_estimate_kernel(mu, t, x)?.exp())
}

/// Logarithm of [`q1_estimate_kernel`], finite where the kernel underflows.
pub fn ln_q1_estimate_kernel(mu: f64, t: f64, x: f64) -> Result<f64> {
    check_mu(mu)?;
    check_time(t)?;
    check_x(x)?;
    let j1 = first_zero(mu)?;
    let ln = (1.0 - x).ln() + (mu + 2.0) * t.ln_1p()
        - (mu + 0.5) * (x + t).ln()
        - 1.5 * t.ln()
        - (1.0 - x) * (1.0 - x) / (2.0 * t)
        - 0.5 * j1 * j1 * t;
    Ok(ln)
}

/// Comparison kernels `(to_one, to_zero)` for exit from `(0, 1)`, `μ < 0`.
pub fn q01_estimate_kernels(mu: f64, t: f64, x: f64) -> Result<(f64, f64)> {
    let (one, zero) = ln_q01_estimate_kernels(mu, t, x)?;
    Ok((one.exp(), zero.exp()))
}

/// Logarithms of [`q01_estimate_kernels`].
pub fn ln_q01_estimate_kernels(mu: f64, t: f64, x: f64) -> Result<(f64, f64)> {
    check_negative(mu)?;
    check_time(t)?;
    check_x(x)?;
    let nu = -mu;
    let j1 = first_zero(nu)?;
    let common = 2.0 * nu * x.ln() + (1.0 - x).ln() + (nu + 2.0) * t.ln_1p() - 0.5 * j1 * j1 * t;
    let one = common - (nu + 0.5) * (x + t).ln() - 1.5 * t.ln() - (1.0 - x) * (1.0 - x) / (2.0 * t);
    let zero = common - (1.0 - x + t).ln() - (nu + 1.0) * t.ln() - x * x / (2.0 * t);
    Ok((one, zero))
}
