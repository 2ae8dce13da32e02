//! Exit of one-dimensional Brownian motion from an interval `(a, b)`.
//!
//! Small normalised times use the method of images,
//! `Σ_k (d+2k)/√(2πτ³) e^{-(d+2k)²/2τ}` with `d` the normalised distance
//! to the exit side; large times use the sine expansion
//! `π Σ_n n sin(nπd) e^{-n²π²τ/2}`, which avoids the cancellation the image
//! sum suffers once `τ` is of order one.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{domain, Result};
use crate::kernels::check_time;
use crate::sum::CompensatedSum;

/// Side of the interval through which the path leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
}

const SWITCH_TAU: f64 = 1.0;
const MIN_EXPONENT: f64 = -700.0;

fn normalise(t: f64, x: f64, a: f64, b: f64, side: Side) -> Result<(f64, f64, f64)> {
    check_time(t)?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return domain(format!("interval must satisfy a < b, got ({a}, {b})"));
    }
    if !(x > a && x < b) {
        return domain(format!("starting point {x} is outside ({a}, {b})"));
    }
    let len = b - a;
    let d = match side {
        Side::Upper => (b - x) / len,
        Side::Lower => (x - a) / len,
    };
    Ok((t / (len * len), d, len))
}

fn image_density(tau: f64, d: f64) -> f64 {
    let norm = 1.0 / (2.0 * PI * tau * tau * tau).sqrt();
    let term = |k: i64| {
        let s = d + 2.0 * k as f64;
        let e = -s * s / (2.0 * tau);
        if e < MIN_EXPONENT {
            0.0
        } else {
            s * e.exp()
        }
    };
    let mut sum = CompensatedSum::new();
    sum.add(term(0));
    let mut k = 1;
    loop {
        // pair the k-th image on each side; both shrink together
        let pair = term(k) + term(-k);
        sum.add(pair);
        let s = 2.0 * k as f64 - d;
        if -s * s / (2.0 * tau) < MIN_EXPONENT {
            break;
        }
        k += 1;
    }
    norm * sum.value()
}

fn sine_density(tau: f64, d: f64) -> f64 {
    let mut sum = CompensatedSum::new();
    let mut n = 1.0;
    loop {
        let k = n * PI;
        let e = -0.5 * k * k * tau;
        if e < MIN_EXPONENT {
            break;
        }
        sum.add(k * (k * d).sin() * e.exp());
        n += 1.0;
    }
    sum.value()
}

/// Exit density of standard Brownian motion from `(a, b)` through `side`.
pub fn bm_interval_exit(t: f64, x: f64, a: f64, b: f64, side: Side) -> Result<f64> {
    let (tau, d, len) = normalise(t, x, a, b, side)?;
    let q = if tau <= SWITCH_TAU {
        image_density(tau, d)
    } else {
        sine_density(tau, d)
    };
    Ok(q.max(0.0) / (len * len))
}

/// `P_x(T_{a,b} ≤ t, exit through side)`.
pub fn bm_interval_exit_cdf(t: f64, x: f64, a: f64, b: f64, side: Side) -> Result<f64> {
    let (tau, d, _) = normalise(t, x, a, b, side)?;
    let mut sum = CompensatedSum::new();
    if tau <= SWITCH_TAU {
        let scale = (2.0 * tau).sqrt();
        let term = |k: i64| {
            let s = d + 2.0 * k as f64;
            s.signum() * erfc(s.abs() / scale)
        };
        sum.add(term(0));
        let mut k = 1;
        loop {
            sum.add(term(k) + term(-k));
            let s = 2.0 * k as f64 - d;
            if -s * s / (2.0 * tau) < MIN_EXPONENT {
                break;
            }
            k += 1;
        }
    } else {
        sum.add(1.0 - d);
        let mut n = 1.0;
        loop {
            let k = n * PI;
            let e = -0.5 * k * k * tau;
            if e < MIN_EXPONENT {
                break;
            }
            sum.add(-2.0 / k * (k * d).sin() * e.exp());
            n += 1.0;
        }
    }
    Ok(sum.value().clamp(0.0, 1.0 - d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representations_agree_at_switch() {
        for &d in &[0.05, 0.3, 0.5, 0.77] {
            for &tau in &[0.3, 0.6, 1.0] {
                let a = image_density(tau, d);
                let b = sine_density(tau, d);
                assert!(((a - b) / b).abs() < 1e-12, "tau={tau} d={d}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn sides_swap_under_reflection() {
        let (t, x) = (0.07, 0.23);
        let up = bm_interval_exit(t, x, 0.0, 1.0, Side::Upper).unwrap();
        let low = bm_interval_exit(t, 1.0 - x, 0.0, 1.0, Side::Lower).unwrap();
        assert_eq!(up, low);
    }

    #[test]
    fn cdf_limits_and_scaling() {
        let x = 0.3;
        let f = bm_interval_exit_cdf(200.0, x, 0.0, 1.0, Side::Upper).unwrap();
        assert!((f - x).abs() < 1e-14);
        let g = bm_interval_exit_cdf(200.0, x, 0.0, 1.0, Side::Lower).unwrap();
        assert!((g - (1.0 - x)).abs() < 1e-14);
        let small = bm_interval_exit_cdf(0.5, 0.6, 0.0, 2.0, Side::Upper).unwrap();
        let unit = bm_interval_exit_cdf(0.125, 0.3, 0.0, 1.0, Side::Upper).unwrap();
        assert!((small - unit).abs() < 1e-15);
        for &t in &[0.2, 0.9, 1.1, 3.0] {
            // both CDF branches against a difference quotient of the density
            let h = 1e-5;
            let fd = (bm_interval_exit_cdf(t + h, x, 0.0, 1.0, Side::Upper).unwrap()
                - bm_interval_exit_cdf(t - h, x, 0.0, 1.0, Side::Upper).unwrap())
                / (2.0 * h);
            let q = bm_interval_exit(t, x, 0.0, 1.0, Side::Upper).unwrap();
            assert!((fd - q).abs() < 1e-6 * q.max(1e-3), "t={t}");
        }
    }

    #[test]
    fn rejects_outside_points() {
        assert!(bm_interval_exit(0.1, 1.5, 0.0, 1.0, Side::Upper).is_err());
        assert!(bm_interval_exit(0.1, 0.5, 1.0, 0.0, Side::Upper).is_err());
    }
}
