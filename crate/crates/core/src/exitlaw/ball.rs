use crate::error::{domain, Result};

use super::dispatch::q1_dispatch;

/// Exit-time density of `n`-dimensional Brownian motion started at distance
/// `x_norm` from the centre of a ball of radius `radius`.
///
/// The radial part is the Bessel process of index `n/2 − 1`, so this is `q₁`
/// rescaled to the ball; the centre is handled by the regular limit of the
/// eigenfunctions at 0.
pub fn q_ball(n: u32, t: f64, x_norm: f64, radius: f64) -> Result<f64> {
    if n == 0 {
        return domain("dimension must be at least 1");
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return domain(format!("radius must be positive, got {radius}"));
    }
    if !(x_norm >= 0.0 && x_norm < radius) {
        return domain(format!(
            "starting point must lie in [0, {radius}), got {x_norm}"
        ));
    }
    let mu = 0.5 * n as f64 - 1.0;
    let r2 = radius * radius;
    Ok(q1_dispatch(mu, t / r2, x_norm / radius)?.0 / r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn three_dimensional_centre() {
        for &t in &[0.05, 0.2, 1.0] {
            let mut s = 0.0;
            for k in 1..200 {
                let a = k as f64 * PI;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                s += sign * a * a * (-0.5 * a * a * t).exp();
            }
            let v = q_ball(3, t, 0.0, 1.0).unwrap();
            assert!(((v - s) / s).abs() < 1e-10, "t = {t}: {v} vs {s}");
        }
    }

    #[test]
    fn radius_scaling() {
        for &(n, t, x) in &[(2u32, 0.3, 0.8), (3, 0.1, 0.4), (5, 0.05, 1.2)] {
            let a = q_ball(n, t, x, 2.0).unwrap();
            let b = q_ball(n, t / 4.0, x / 2.0, 1.0).unwrap();
            assert!((a - 0.25 * b).abs() <= 1e-14 * a);
        }
    }

    #[test]
    fn one_dimension_is_interval_exit() {
        let v = q_ball(1, 0.2, 0.3, 1.0).unwrap();
        let w = crate::exitlaw::bm_interval_exit(0.2, 0.3, -1.0, 1.0, crate::exitlaw::Side::Upper)
            .unwrap()
            + crate::exitlaw::bm_interval_exit(0.2, 0.3, -1.0, 1.0, crate::exitlaw::Side::Lower)
                .unwrap();
        assert_eq!(v, w);
    }

    #[test]
    fn domain_checks() {
        assert!(q_ball(0, 0.1, 0.0, 1.0).is_err());
        assert!(q_ball(3, 0.1, 1.0, 1.0).is_err());
        assert!(q_ball(3, 0.1, 0.5, -1.0).is_err());
    }
}
