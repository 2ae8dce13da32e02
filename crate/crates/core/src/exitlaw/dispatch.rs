//! Regime selection between the spectral series, the `μ = −1/2` closed
//! forms and the explicit small-time asymptotics.
//!
//! The series is used whenever its own error estimate (certified tail plus
//! rounding amplified by the summation's condition number) beats the budget
//! of the best asymptotic form. Above the crossover exponent it is always
//! attempted; below it, only while the Gaussian factor of the density keeps
//! the condition number representable.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::kernels::{check_mu, check_time, free_density};
use crate::quad::{integrate, QuadConfig};
use crate::special::SeriesConfig;
use crate::spectral::first_zero;

use super::asymptotics::{
    q01_zero_smalltime, q1_smalltime_branch, structural_asymptotics, SmallTimeBranch, Structural,
};
use super::brownian::{bm_interval_exit, Side};
use super::series::{check_negative, check_x, q1_expansion, zero_expansion};
use super::{Method, RegimeReport};

/// `j_{μ,1}² t / 2` at and above which the series is the primary representation.
pub const CROSSOVER_EXPONENT: f64 = 0.02;

/// Below the crossover the series is still tried while `d²/2t` stays under
/// this, `d` the distance to the exit boundary; the condition number of the
/// sum grows like `e^{d²/2t}`.
pub(crate) const GAUSSIAN_LIMIT: f64 = 25.0;

/// Multipliers turning the nominal error orders of the asymptotic forms into
/// conservative estimates. The leading corrections come from the large-argument
/// expansion of `I_μ`, whose first coefficient is `(4μ²−1)/8`; the constants
/// below are about twice the largest deviation observed against the series
/// for `μ ∈ [−0.9, 5]` and `t` up to four times the crossover time.
struct Calibration {
    bulk: f64,
    near_origin: f64,
    free_kernel: f64,
    shifted: f64,
    zero_near: f64,
}

impl Calibration {
    fn for_mu(mu: f64) -> Self {
        let a = (4.0 * mu * mu - 1.0).abs() / 8.0;
        Calibration {
            bulk: 2.0 * (a + 0.5),
            near_origin: 1.0 + 1.0 / (4.0 * (mu + 1.0)),
            free_kernel: 1.0,
            shifted: 2.0 * (2.0 * a + 0.5),
            zero_near: 1.0 + mu.abs(),
        }
    }

    /// The first neglected image for the exit through 0 sits at distance
    /// `2 − x` instead of `x`.
    fn zero_far(x: f64) -> f64 {
        2.0 * (2.0 - x) / x
    }
}

/// Time at which `j_{μ,1}² t/2` equals [`CROSSOVER_EXPONENT`].
pub fn series_crossover_time(mu: f64) -> Result<f64> {
    let j = first_zero(mu)?;
    Ok(2.0 * CROSSOVER_EXPONENT / (j * j))
}

fn default_cfg() -> SeriesConfig {
    SeriesConfig::default()
}

/// Smallest time at which the series is tried at all; it needs about
/// `√(80/t)/π` terms, which is 4000 here.
pub(crate) const MIN_SERIES_TIME: f64 = 80.0 / (4000.0 * PI * 4000.0 * PI);

pub(crate) fn series_attempt(crossover: f64, t: f64, d: f64) -> bool {
    t >= crossover || (t >= MIN_SERIES_TIME && d * d / (2.0 * t) <= GAUSSIAN_LIMIT)
}

/// Best explicit small-time form for `q₁^{(μ)}` at `x ∈ [0, 1)`.
pub(crate) fn q1_smalltime_best(mu: f64, t: f64, x: f64) -> Result<(f64, RegimeReport)> {
    let c = Calibration::for_mu(mu);
    let mut best: Option<(f64, f64)> = None;
    let mut offer = |value: f64, err: f64| {
        // an underflowed value is still the right answer in f64
        if value.is_finite() && value >= 0.0 && best.is_none_or(|(_, e)| err < e) {
            best = Some((value, err));
        }
    };
    if x > 0.0 {
        let (v, r) = q1_smalltime_branch(mu, t, x, SmallTimeBranch::Bulk)?;
        offer(v, c.bulk * r.estimated_rel_error);
    }
    let (v, r) = q1_smalltime_branch(mu, t, x, SmallTimeBranch::NearOrigin)?;
    offer(v, c.near_origin * r.estimated_rel_error);
    if x > 0.0 {
        let v = structural_asymptotics(mu, t, x, Structural::FreeKernelAtOne)?;
        offer(
            v,
            c.free_kernel * Structural::FreeKernelAtOne.error_order(t, x),
        );
    }
    if x > 0.5 {
        let v = structural_asymptotics(mu, t, x, Structural::ShiftedBrownian)?;
        offer(v, c.shifted * Structural::ShiftedBrownian.error_order(t, x));
    }
    let (v, e) = best.unwrap_or((0.0, f64::MAX));
    Ok((v, RegimeReport::new(Method::SmallTimeAsymptotic, e)))
}

fn images_report() -> RegimeReport {
    RegimeReport::new(Method::ClosedFormImages, 64.0 * f64::EPSILON)
}

/// `q₁` on `x ∈ [0, 1)`; the origin is reachable through the regular
/// limit of the eigenfunctions.
pub(crate) fn q1_dispatch(mu: f64, t: f64, x: f64) -> Result<(f64, RegimeReport)> {
    check_mu(mu)?;
    check_time(t)?;
    if !(0.0..1.0).contains(&x) {
        return domain(format!("starting point must lie in [0, 1), got {x}"));
    }
    if mu == -0.5 {
        // reflected Brownian motion from x hits 1 when free motion leaves (−1, 1)
        let v = bm_interval_exit(t, x, -1.0, 1.0, Side::Upper)?
            + bm_interval_exit(t, x, -1.0, 1.0, Side::Lower)?;
        return Ok((v, images_report()));
    }
    let crossover = series_crossover_time(mu)?;
    let asym = q1_smalltime_best(mu, t, x)?;
    if series_attempt(crossover, t, 1.0 - x) {
        match q1_expansion(mu, x)?.eval(t, &default_cfg()) {
            Ok(out) => {
                let err = out.rel_error();
                if out.value > 0.0 && err <= asym.1.estimated_rel_error {
                    return Ok((out.value, RegimeReport::new(Method::Series, err)));
                }
            }
            Err(e) if t >= crossover => return Err(e),
            Err(_) => {}
        }
    }
    Ok(asym)
}

/// Exit density through 1 of the process reflected at (or never reaching)
/// 0, for any `t > 0`, with the method used and its error estimate.
pub fn q1_auto(mu: f64, t: f64, x: f64) -> Result<(f64, RegimeReport)> {
    check_x(x)?;
    q1_dispatch(mu, t, x)
}

/// Exit density through 1 before 0 for the process killed at 0 (`μ < 0`).
pub fn q01_to_one_auto(mu: f64, t: f64, x: f64) -> Result<(f64, RegimeReport)> {
    check_negative(mu)?;
    check_x(x)?;
    if mu == -0.5 {
        return Ok((
            bm_interval_exit(t, x, 0.0, 1.0, Side::Upper)?,
            images_report(),
        ));
    }
    let (v, r) = q1_dispatch(-mu, t, x)?;
    Ok((x.powf(-2.0 * mu) * v, r))
}

/// The small-time form for the exit through 0 with its calibrated error.
pub(crate) fn q01_zero_smalltime_best(mu: f64, t: f64, x: f64) -> Result<(f64, RegimeReport)> {
    let (v, r) = q01_zero_smalltime(mu, t, x)?;
    let scale = if 1.0 - x >= t * t.ln().abs() {
        Calibration::zero_far(x)
    } else {
        Calibration::for_mu(mu).zero_near
    };
    Ok((
        v,
        RegimeReport::new(Method::SmallTimeAsymptotic, scale * r.estimated_rel_error),
    ))
}

/// Exit density through 0 before 1 for the process killed at 0 (`μ < 0`).
pub fn q01_to_zero_auto(mu: f64, t: f64, x: f64) -> Result<(f64, RegimeReport)> {
    check_negative(mu)?;
    check_time(t)?;
    check_x(x)?;
    if mu == -0.5 {
        return Ok((
            bm_interval_exit(t, x, 0.0, 1.0, Side::Lower)?,
            images_report(),
        ));
    }
    let nu = -mu;
    let mut best = q01_zero_smalltime_best(mu, t, x)?;
    let asym_err = best.1.estimated_rel_error;
    let crossover = series_crossover_time(nu)?;
    if series_attempt(crossover, t, x) {
        match zero_expansion(nu, x)?.eval(t, &default_cfg()) {
            Ok(out) => {
                let err = out.rel_error();
                if out.value > 0.0 && err <= asym_err {
                    best = (
                        x.powf(2.0 * nu) * out.value,
                        RegimeReport::new(Method::Series, err),
                    );
                }
            }
            Err(e) if t >= crossover => return Err(e),
            Err(_) => {}
        }
    }
    if best.1.estimated_rel_error > DECOMPOSITION_TRIGGER {
        let (p, err) = killed_at_zero_by_decomposition(nu, t, x)?;
        if p > 0.0 && err < best.1.estimated_rel_error {
            best = (
                2.0 * nu * x.powf(2.0 * nu) * p,
                RegimeReport::new(Method::FluxDifference, err),
            );
        }
    }
    Ok(best)
}

/// Error level above which the exit through 0 is also computed from the
/// first-passage decomposition of the killed kernel.
const DECOMPOSITION_TRIGGER: f64 = 1e-3;

/// `p₁^{(ν)}(t, x, 0) = p^{(ν)}(t, x, 0) − ∫₀ᵗ q₁^{(ν)}(s, x) p^{(ν)}(t−s, 1, 0) ds`,
/// with its relative error estimate.
///
/// Used where `x` is close to 1 at small `t`: the series is then lost to
/// rounding deep in its Gaussian tail, and the near-one asymptotic form is
/// only first order in `(1−x)/t`. The subtracted term is a small fraction
/// of the free density, so the dispatcher's error on `q₁` enters scaled
/// down by that fraction.
fn killed_at_zero_by_decomposition(nu: f64, t: f64, x: f64) -> Result<(f64, f64)> {
    let free = free_density(nu, t, 0.0, x)?;
    let cfg = QuadConfig {
        abs_tol: 1e-14 * free,
        rel_tol: 1e-10,
        max_intervals: 500,
    };
    let mut failure = None;
    let mut worst_q_err: f64 = 0.0;
    let mut flux = 0.0;
    let mut quad_err = 0.0;
    let cuts = [0.0, 0.25 * t, 0.5 * t, 0.75 * t, 0.9 * t, t];
    for w in cuts.windows(2) {
        let q = integrate(
            |s| {
                if s <= 0.0 || s >= t {
                    return 0.0;
                }
                match q1_dispatch(nu, s, x).and_then(|(q, r)| {
                    worst_q_err = worst_q_err.max(r.estimated_rel_error);
                    Ok(q * free_density(nu, t - s, 0.0, 1.0)?)
                }) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            w[0],
            w[1],
            &cfg,
        );
        flux += q.value;
        quad_err += q.error;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let value = free - flux;
    let err = (quad_err + worst_q_err * flux + 4.0 * f64::EPSILON * free)
        / value.abs().max(f64::MIN_POSITIVE);
    Ok((value, err))
}

/// Probability `x^{-2μ}` of leaving `(0, 1)` through 1 when 0 is killing.
pub fn splitting_probability(mu: f64, x: f64) -> Result<f64> {
    check_negative(mu)?;
    check_x(x)?;
    Ok(x.powf(-2.0 * mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exitlaw::{q01_to_zero_series, q1_series};

    #[test]
    fn splitting_values() {
        assert_eq!(splitting_probability(-0.5, 0.5).unwrap(), 0.5);
        assert_eq!(splitting_probability(-0.5, 0.25).unwrap(), 0.25);
        assert!(
            (splitting_probability(-0.9, 0.5).unwrap() - 0.287_174_588_749_258_7).abs() < 1e-15
        );
        assert!(splitting_probability(0.0, 0.5).is_err());
    }

    #[test]
    fn decomposition_matches_series_for_exit_through_zero() {
        let cfg = SeriesConfig::default();
        for (mu, t, x) in [(-0.25, 0.05, 0.8), (-0.7, 0.1, 0.6), (-0.5, 0.03, 0.9)] {
            let nu = -mu;
            let (p, err) = killed_at_zero_by_decomposition(nu, t, x).unwrap();
            let v = 2.0 * nu * x.powf(2.0 * nu) * p;
            let s = q01_to_zero_series(mu, t, x, &cfg).unwrap();
            let rel = ((v - s) / s).abs();
            assert!(
                rel < 1e-6 && rel <= err.max(1e-12),
                "{mu} {t} {x}: {rel:e} vs {err:e}"
            );
        }
    }

    #[test]
    fn exit_through_zero_near_one_at_small_time() {
        // series and near-one form both fail here; the decomposition does not
        let (v, r) = q01_to_zero_auto(-0.25, 0.0108, 0.953).unwrap();
        assert_eq!(r.method, Method::FluxDifference);
        assert!(r.estimated_rel_error < 1e-3, "{r:?}");
        let (a, _) = q01_zero_smalltime(-0.25, 0.0108, 0.953).unwrap();
        assert!(a / v > 0.1 && a / v < 10.0, "{a:e} {v:e}");
    }

    #[test]
    fn images_for_brownian_motion() {
        let (v, r) = q1_auto(-0.5, 0.3, 0.4).unwrap();
        assert_eq!(r.method, Method::ClosedFormImages);
        let s = q1_series(-0.5, 0.3, 0.4, &SeriesConfig::default()).unwrap();
        assert!(((v - s) / s).abs() < 1e-12);
        let (z, _) = q01_to_zero_auto(-0.5, 0.3, 0.4).unwrap();
        let zs = q01_to_zero_series(-0.5, 0.3, 0.4, &SeriesConfig::default()).unwrap();
        assert!(((z - zs) / zs).abs() < 1e-12);
    }

    #[test]
    fn series_above_crossover() {
        let (v, r) = q1_auto(0.5, 0.5, 0.3).unwrap();
        assert_eq!(r.method, Method::Series);
        assert!(r.estimated_rel_error < 1e-12);
        assert_eq!(
            v,
            q1_series(0.5, 0.5, 0.3, &SeriesConfig::default()).unwrap()
        );
    }

    #[test]
    fn asymptotic_deep_in_small_time() {
        let (v, r) = q1_auto(1.0, 1e-5, 0.9).unwrap();
        assert_eq!(r.method, Method::SmallTimeAsymptotic);
        assert!(v > 0.0 && r.estimated_rel_error < 1e-3);
        let (v, _) = q1_auto(1.0, 1e-5, 0.2).unwrap();
        assert_eq!(v, 0.0);
        let (_, r) = q01_to_zero_auto(-0.3, 1e-5, 0.5).unwrap();
        assert_eq!(r.method, Method::SmallTimeAsymptotic);
    }

    #[test]
    fn continuous_at_crossover() {
        let mu = 0.0;
        let ts = series_crossover_time(mu).unwrap();
        for &x in &[0.3, 0.5, 0.8] {
            let (v, r) = q1_auto(mu, ts, x).unwrap();
            let out = q1_expansion(mu, x)
                .unwrap()
                .eval(ts, &default_cfg())
                .unwrap();
            let (a, ar) = q1_smalltime_best(mu, ts, x).unwrap();
            let budget = out.rel_error() + ar.estimated_rel_error;
            assert!(((a - out.value) / out.value).abs() <= budget, "x = {x}");
            assert!(((v - out.value) / out.value).abs() <= budget.max(r.estimated_rel_error));
        }
    }
}
