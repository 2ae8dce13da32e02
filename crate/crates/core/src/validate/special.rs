use std::f64::consts::{PI, SQRT_2};

use super::{checked, linspace, logspace, Check, Draws, Suite, ValidateOptions, CONSTANT_DRIFT};
use crate::error::Result;
use crate::special::{bessel_i_scaled, bessel_j, cached_zeros, ln_i_ratio_bounds};

const S: Suite = Suite::Special;

const ORDERS: [f64; 9] = [-0.9, -0.5, -0.25, 0.0, 0.5, 1.0, 2.5, 5.0, 10.0];

pub(super) fn run(opts: &ValidateOptions) -> Vec<Check> {
    let n_zeros = if opts.quick { 20 } else { 60 };
    let env_points = if opts.quick { 2000 } else { 8000 };
    let draws = if opts.quick { 2000 } else { 10_000 };
    vec![
        checked(S, "zeros_vanish", zeros_vanish(n_zeros)),
        checked(
            S,
            "zeros_interlace",
            interlacing(if opts.quick { 12 } else { 40 }),
        ),
        checked(S, "j_envelope_stable", j_envelope(env_points)),
        checked(S, "i_envelope_bounded", i_envelope(env_points)),
        checked(
            S,
            "lemma_2_1_sandwich",
            lemma_2_1_sweep(opts.seed, draws).map(|(v, n)| {
                Check::at_most(
                    S,
                    "lemma_2_1_sandwich",
                    v as f64,
                    0.0,
                    format!("{v} violations in {n} draws"),
                )
            }),
        ),
        checked(S, "i_recurrence", recurrence()),
        checked(
            S,
            "zero_derivative_limit",
            derivative_limit(if opts.quick { 100 } else { 400 }),
        ),
    ]
}

fn zeros_vanish(n: usize) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for &mu in &ORDERS {
        for &j in cached_zeros(mu, n)?.zeros() {
            worst = worst.max(bessel_j(mu, j)?.abs());
        }
    }
    Ok(Check::at_most(
        S,
        "zeros_vanish",
        worst,
        1e-11,
        format!("max |J_mu(j_k)| over {} orders, k <= {n}", ORDERS.len()),
    ))
}

fn interlacing(n_orders: usize) -> Result<Check> {
    let mut violations = 0usize;
    for mu in linspace(-0.95, 10.0, n_orders) {
        let a = cached_zeros(mu, 21)?;
        let b = cached_zeros(mu + 1.0, 20)?;
        for k in 0..20 {
            if !(a.zeros()[k] < b.zeros()[k] && b.zeros()[k] < a.zeros()[k + 1]) {
                violations += 1;
            }
        }
    }
    Ok(Check::at_most(
        S,
        "zeros_interlace",
        violations as f64,
        0.0,
        format!("j(mu,k) < j(mu+1,k) < j(mu,k+1) for {n_orders} orders in (-1, 10], k <= 20"),
    ))
}

/// Range of `f` over `(0, 200]`: a log grid down to `1e−8` for the limit at
/// the origin, then a uniform grid of `n` points.
fn sup_on_grid(n: usize, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let near = logspace(1e-8, 1.0, n / 20);
    let uniform = (1..=n).map(|k| 200.0 * k as f64 / n as f64);
    for z in near.into_iter().chain(uniform) {
        let v = f(z)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

fn j_envelope(n: usize) -> Result<Check> {
    let mut worst_drift: f64 = 0.0;
    let mut detail = Vec::new();
    for &mu in &ORDERS {
        let g = |z: f64| -> Result<f64> {
            Ok(bessel_j(mu, z)?.abs() * (1.0 + z).powf(mu + 0.5) / z.powf(mu))
        };
        let (_, coarse) = sup_on_grid(n, g)?;
        let (_, fine) = sup_on_grid(2 * n, g)?;
        if !coarse.is_finite() || !fine.is_finite() {
            worst_drift = f64::INFINITY;
        }
        worst_drift = worst_drift.max((fine / coarse - 1.0).abs());
        detail.push(format!("mu={mu}: {fine:.4}"));
    }
    Ok(Check::at_most(
        S,
        "j_envelope_stable",
        worst_drift,
        CONSTANT_DRIFT,
        format!(
            "sup |J_mu(z)|(1+z)^(mu+1/2)/z^mu on (0,200]; {}",
            detail.join(", ")
        ),
    ))
}

fn i_envelope(n: usize) -> Result<Check> {
    let mut worst_drift: f64 = 0.0;
    let mut positive = true;
    let mut detail = Vec::new();
    for &mu in &ORDERS {
        let g = |z: f64| -> Result<f64> {
            Ok(bessel_i_scaled(mu, z)? * (1.0 + z).powf(mu + 0.5) / z.powf(mu))
        };
        let (lo, hi) = sup_on_grid(n, g)?;
        let (lo2, hi2) = sup_on_grid(2 * n, g)?;
        positive &= lo > 0.0 && hi.is_finite();
        worst_drift = worst_drift
            .max((lo2 / lo - 1.0).abs())
            .max((hi2 / hi - 1.0).abs());
        detail.push(format!("mu={mu}: [{lo2:.4}, {hi2:.4}]"));
    }
    let measured = if positive { worst_drift } else { f64::INFINITY };
    Ok(Check::at_most(
        S,
        "i_envelope_bounded",
        measured,
        CONSTANT_DRIFT,
        format!(
            "range of e^-z I_mu(z)(1+z)^(mu+1/2)/z^mu on (0,200]; {}",
            detail.join(", ")
        ),
    ))
}

/// `ln(I_μ(y)/I_μ(x))` from the ascending series, independent of the
/// library's evaluator.
fn ln_ratio_oracle(mu: f64, x: f64, y: f64) -> f64 {
    // Both sums share the same number of terms; terms are positive so the
    // ratio of partial sums is well conditioned.
    let series = |z: f64| {
        let q = 0.25 * z * z;
        let (mut term, mut sum, mut k) = (1.0_f64, 1.0_f64, 1.0_f64);
        loop {
            term *= q / (k * (k + mu));
            sum += term;
            if k > q && term < 1e-17 * sum {
                break sum;
            }
            k += 1.0;
        }
    };
    mu * (y / x).ln() + series(y).ln() - series(x).ln()
}

/// Random checks of the modified-Bessel ratio bounds; returns the number of
/// violations and the number of draws.
pub fn lemma_2_1_sweep(seed: u64, draws: usize) -> Result<(usize, usize)> {
    let mut rng = Draws::new(seed, 21);
    let mut violations = 0;
    for _ in 0..draws {
        let mu = rng.uniform(-1.0, 10.0);
        let (a, b) = (rng.uniform(0.0, 50.0), rng.uniform(0.0, 50.0));
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        if x == y {
            continue;
        }
        let (lo, hi) = ln_i_ratio_bounds(mu, x, y)?;
        let r = ln_ratio_oracle(mu, x, y);
        let slack = 1e-13 * (1.0 + r.abs());
        if !(lo <= r + slack && r <= hi + slack) {
            violations += 1;
        }
    }
    Ok((violations, draws))
}

fn recurrence() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for &mu in &ORDERS {
        for z in logspace(1e-3, 200.0, 80) {
            let a = bessel_i_scaled(mu, z)?;
            let b = bessel_i_scaled(mu + 1.0, z)?;
            let c = bessel_i_scaled(mu + 2.0, z)?;
            worst = worst.max((a - c - 2.0 * (mu + 1.0) / z * b).abs() / a);
        }
    }
    Ok(Check::at_most(
        S,
        "i_recurrence",
        worst,
        1e-12,
        "max |I_mu - I_(mu+2) - 2(mu+1)/z I_(mu+1)| / I_mu",
    ))
}

/// `|J_{μ+1}(j_k)|·√k` approaches `√2/π`; the deviation must shrink like `1/k`.
fn derivative_limit(n: usize) -> Result<Check> {
    let target = SQRT_2 / PI;
    let mut worst: f64 = 0.0;
    for &mu in &ORDERS {
        let zeros = cached_zeros(mu, n)?;
        let jk = zeros.zeros()[n - 1];
        let dev = (bessel_j(mu + 1.0, jk)?.abs() * (n as f64).sqrt() / target - 1.0).abs();
        worst = worst.max(dev * n as f64 / (1.0 + (0.5 * mu - 0.25).abs()));
    }
    Ok(Check::at_most(
        S,
        "zero_derivative_limit",
        worst,
        1.0,
        format!("k |J_(mu+1)(j_k) sqrt(k) pi/sqrt2 - 1| / (1 + |mu/2 - 1/4|) at k = {n}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_matches_half_integer_closed_form() {
        let exact = (2.0_f64.sinh() / 1.0_f64.sinh() / 2.0_f64.sqrt()).ln();
        assert!((ln_ratio_oracle(0.5, 1.0, 2.0) - exact).abs() < 1e-14);
    }

    #[test]
    fn quick_suite_passes() {
        for c in run(&ValidateOptions {
            quick: true,
            seed: 1,
        }) {
            assert!(c.passed, "{c:?}");
        }
    }
}
