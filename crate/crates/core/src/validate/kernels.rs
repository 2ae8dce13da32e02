use rayon::prelude::*;

use super::{
    checked, linspace, logspace, Check, Draws, EmpiricalConstants, Suite, ValidateOptions,
    CONSTANT_DRIFT,
};
use crate::error::Result;
use crate::exitlaw::law::ExitLaw;
use crate::exitlaw::{q1_survival_series, Boundary};
use crate::kernels::{
    free_density, killed_density_series, killed_density_series_outcome, killed_density_two_sided,
    ln_killed_density_estimate_kernel,
};
use crate::quad::{integrate, QuadConfig};
use crate::special::{Index, SeriesConfig};
use crate::spectral::first_zero;

const S: Suite = Suite::Kernels;

/// Orders of the `p₁` comparison sweep.
pub const P1_ORDERS: [f64; 6] = [-0.75, -0.25, 0.0, 0.5, 1.0, 3.0];

pub(super) fn run(opts: &ValidateOptions) -> (Vec<Check>, Vec<EmpiricalConstants>) {
    let mut checks = vec![
        checked(S, "heat_residual", heat_residual(opts.quick)),
        checked(
            S,
            "chapman_kolmogorov",
            chapman_kolmogorov(opts.seed, if opts.quick { 12 } else { 60 }),
        ),
        checked(S, "killed_below_free", killed_below_free()),
        checked(S, "opposite_index_exact", opposite_index()),
    ];
    match initial_mass(opts.quick) {
        Ok(c) => checks.extend(c),
        Err(e) => checks.push(Check::failed(S, "initial_mass", &e)),
    }
    let mut constants = Vec::new();
    for mu in P1_ORDERS {
        match p1_sandwich_constants(mu, opts.quick) {
            Ok(c) => {
                checks.push(sandwich_check(S, &c));
                constants.push(c);
            }
            Err(e) => checks.push(Check::failed(S, &format!("sandwich_p1_mu{mu}"), &e)),
        }
    }
    (checks, constants)
}

/// Check that a set of empirical constants is a genuine sandwich and is
/// stable under grid refinement.
pub(super) fn sandwich_check(suite: Suite, c: &EmpiricalConstants) -> Check {
    let measured = if c.is_sandwich() {
        c.drift()
    } else {
        f64::INFINITY
    };
    Check::at_most(
        suite,
        &format!("sandwich_{}_mu{}", c.kernel, c.mu),
        measured,
        CONSTANT_DRIFT,
        format!(
            "ratio range [{:.4e}, {:.4e}], refined [{:.4e}, {:.4e}]",
            c.c1, c.c2, c.c1_refined, c.c2_refined
        ),
    )
}

/// Largest value of `|∂ₜp − ½∂ᵧᵧp − ((2μ+1)/2y)∂ᵧp| / max(|∂ₜp|, 1e−8)` by
/// centred differences with step `1e−4`.
///
/// The grid stays away from `y = 0` and `t = 0` and places `y` within
/// `2.3√t` of `x`: further into the Gaussian tail the `O(h²)` truncation
/// of the difference quotients, not the density, sets the residual.
///
/// The kernel is accurate to about `1e−13` relative, and the second difference
/// amplifies that by `1/h² = 1e8`, so the noise in the residual relative to
/// `∂ₜp` is about `1e−5/|∂ₜ ln p|`. Points where `|∂ₜ ln p| < 0.1` are skipped,
/// since that floor alone would exceed a tenth of the budget there.
pub fn heat_residual(quick: bool) -> Result<Check> {
    const H: f64 = 1e-4;
    const STATIONARY: f64 = 0.1;
    let mus: &[f64] = if quick {
        &[-0.75, 0.0, 2.0]
    } else {
        &[-0.75, -0.25, 0.0, 0.5, 2.0, 5.0]
    };
    let ts = logspace(0.05, 2.0, if quick { 3 } else { 6 });
    let offsets = [-2.3, -1.6, -0.9, -0.3, 0.3, 0.9, 1.6, 2.3];
    let mut worst: f64 = 0.0;
    let mut points = 0;
    let mut skipped = 0;
    for &mu in mus {
        for &t in &ts {
            for x in [0.0, 0.3, 1.0] {
                for c in offsets {
                    let y = x + c * t.sqrt();
                    if y < 0.2 {
                        continue;
                    }
                    let p = |t: f64, y: f64| free_density(mu, t, x, y);
                    let p0 = p(t, y)?;
                    let dt = (p(t + H, y)? - p(t - H, y)?) / (2.0 * H);
                    if dt.abs() < STATIONARY * p0 {
                        skipped += 1;
                        continue;
                    }
                    points += 1;
                    let (pp, pm) = (p(t, y + H)?, p(t, y - H)?);
                    let dy = (pp - pm) / (2.0 * H);
                    let dyy = (pp - 2.0 * p0 + pm) / (H * H);
                    let residual = dt - 0.5 * dyy - (2.0 * mu + 1.0) / (2.0 * y) * dy;
                    worst = worst.max(residual.abs() / dt.abs().max(1e-8));
                }
            }
        }
    }
    Ok(Check::at_most(
        S,
        "heat_residual",
        worst,
        1e-4,
        format!(
            "worst residual relative to max(|dp/dt|, 1e-8) over {points} points, \
             {skipped} near-stationary points skipped"
        ),
    ))
}

/// `∫₀^b f(z)·2z^{2μ+1}dz`, removing the power singularity at 0 by
/// `u = z^{2μ+2}` on `[0, c]` and integrating directly on `[c, b]`.
fn speed_integral(mu: f64, f: impl Fn(f64) -> f64, cuts: &[f64], cfg: &QuadConfig) -> (f64, f64) {
    let a = 2.0 * mu + 2.0;
    let c = cuts[0];
    let head = integrate(|u: f64| f(u.powf(1.0 / a)), 0.0, c.powf(a), cfg);
    let (mut value, mut error) = (head.value / (mu + 1.0), head.error / (mu + 1.0));
    for w in cuts.windows(2) {
        let q = integrate(
            |z: f64| f(z) * 2.0 * z.powf(2.0 * mu + 1.0),
            w[0],
            w[1],
            cfg,
        );
        value += q.value;
        error += q.error;
    }
    (value, error)
}

/// Random Chapman–Kolmogorov checks on the free density; returns the worst
/// relative mismatch.
pub fn chapman_kolmogorov(seed: u64, draws: usize) -> Result<Check> {
    let mut rng = Draws::new(seed, 31);
    let points: Vec<[f64; 5]> = (0..draws)
        .map(|_| {
            [
                rng.uniform(-0.9, 5.0),
                rng.log_uniform(0.05, 2.0),
                rng.log_uniform(0.05, 2.0),
                rng.uniform(0.05, 2.0),
                rng.uniform(0.05, 2.0),
            ]
        })
        .collect();
    let errors: Vec<f64> = points
        .par_iter()
        .map(|&[mu, t, s, x, y]| -> Result<f64> {
            let target = free_density(mu, t + s, x, y)?;
            let reach = x.max(y) + 12.0 * t.max(s).sqrt();
            let lo = 0.5 * x.min(y);
            let mut cuts = vec![lo, x.min(y), x.max(y), reach];
            cuts.dedup();
            let cfg = QuadConfig {
                abs_tol: 1e-13 * target,
                rel_tol: 1e-10,
                max_intervals: 4000,
            };
            let f = |z: f64| {
                free_density(mu, t, x, z).unwrap_or(f64::NAN)
                    * free_density(mu, s, z, y).unwrap_or(f64::NAN)
            };
            let (v, _) = speed_integral(mu, f, &cuts, &cfg);
            Ok((v / target - 1.0).abs())
        })
        .collect::<Result<_>>()?;
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    Ok(Check::at_most(
        S,
        "chapman_kolmogorov",
        worst,
        1e-6,
        format!("{draws} random (mu, t, s, x, y)"),
    ))
}

fn killed_below_free() -> Result<Check> {
    let cfg = SeriesConfig::default();
    let (mut violations, mut tested) = (0usize, 0usize);
    for mu in P1_ORDERS {
        for t in logspace(0.01, 5.0, 8) {
            for x in linspace(0.05, 0.95, 7) {
                for y in linspace(0.05, 0.95, 7) {
                    let out = killed_density_series_outcome(mu, t, x, y, &cfg)?;
                    if out.rel_error() > 1e-10 {
                        continue;
                    }
                    tested += 1;
                    let free = free_density(mu, t, x, y)?;
                    // 1e-12 of slack on the scale of the value, on top of the
                    // series' own error estimate
                    let slack = 1e-12 * free.max(1.0) + out.rel_error() * out.value;
                    if out.value > free + slack {
                        violations += 1;
                    }
                }
            }
        }
    }
    Ok(Check::at_most(
        S,
        "killed_below_free",
        violations as f64,
        0.0,
        format!("{violations} violations at {tested} points where the series is resolved"),
    ))
}

/// `∫₀¹ p₁(t, x, y) m(dy)` by quadrature of the series.
fn killed_mass(mu: f64, t: f64, x: f64) -> f64 {
    let cfg = SeriesConfig::default();
    let w = t.sqrt();
    let f = |y: f64| killed_density_series(mu, t, x, y, &cfg).unwrap_or(f64::NAN);
    let mut cuts: Vec<f64> = [x - 12.0 * w, x - 3.0 * w, x, x + 3.0 * w, 1.0]
        .iter()
        .map(|c| c.clamp(0.5 * x.min(0.1), 1.0))
        .collect();
    cuts.dedup();
    let q = QuadConfig {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        max_intervals: 2000,
    };
    speed_integral(mu, f, &cuts, &q).0
}

/// The killed mass at `t = 0.05(1−x)²` is within `1e−3` of 1, and it equals
/// the survival probability from its own series to `1e−6`.
///
/// The first check uses `μ ≤ 1`: with a strong outward drift from near the
/// origin the process genuinely reaches 1 by that time with probability
/// above `1e−3` (about `1.06e−3` at `μ = 2, x = 0.1`), which the second
/// check confirms.
fn initial_mass(quick: bool) -> Result<Vec<Check>> {
    let mus: &[f64] = if quick {
        &[-0.75, 0.5, 2.0]
    } else {
        &[-0.75, -0.25, 0.0, 0.5, 1.0, 2.0]
    };
    let xs: &[f64] = if quick {
        &[0.1, 0.8]
    } else {
        &[0.1, 0.3, 0.5, 0.7, 0.9]
    };
    let cfg = SeriesConfig::default();
    let (mut to_one, mut to_survival): (f64, f64) = (0.0, 0.0);
    for &mu in mus {
        for &x in xs {
            let t = 0.05 * (1.0 - x) * (1.0 - x);
            let mass = killed_mass(mu, t, x);
            if mu <= 1.0 {
                to_one = to_one.max((mass - 1.0).abs());
            }
            let survival = q1_survival_series(mu, t, x, &cfg)?;
            to_survival = to_survival.max((mass - survival).abs());
        }
    }
    Ok(vec![
        Check::at_most(
            S,
            "initial_mass",
            to_one,
            1e-3,
            "|mass of p1(t, x, .) - 1| at t = 0.05(1-x)^2, mu <= 1",
        ),
        Check::at_most(
            S,
            "initial_mass_vs_survival",
            to_survival,
            1e-6,
            "|mass of p1(t, x, .) - P(T1 > t)| at t = 0.05(1-x)^2",
        ),
    ])
}

fn opposite_index() -> Result<Check> {
    let cfg = SeriesConfig::default();
    let mut mismatches = 0usize;
    for mu in [-0.9, -0.75, -0.5, -0.25, -0.1] {
        for t in [0.05, 0.3, 2.0] {
            for x in linspace(0.1, 0.9, 5) {
                for y in linspace(0.1, 0.9, 5) {
                    let a = killed_density_two_sided(mu, t, x, y, &cfg)?;
                    let b = (x * y).powf(-2.0 * mu) * killed_density_series(-mu, t, x, y, &cfg)?;
                    if a.to_bits() != b.to_bits() {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    Ok(Check::at_most(
        S,
        "opposite_index_exact",
        mismatches as f64,
        0.0,
        "bitwise mismatches",
    ))
}

/// `j₁²t/2` beyond which `p₁` is continued from its leading eigenterm,
/// exact there far below rounding and free of underflow.
const LEADING_EXPONENT: f64 = 300.0;

/// `min` and `max` of `p₁/K` over `t × x × y` for one order.
fn p1_ratio_range(mu: f64, ts: &[f64], xs: &[f64]) -> Result<(f64, f64)> {
    let index = Index::reflecting(mu)?;
    let j1 = first_zero(mu)?;
    let decay = 0.5 * j1 * j1;
    let t_leading = LEADING_EXPONENT / decay;
    let ranges: Vec<(f64, f64)> = xs
        .par_iter()
        .map(|&x| -> Result<(f64, f64)> {
            let mut law = ExitLaw::new(index, x, Boundary::One)?;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &t in ts {
                for &y in xs {
                    let ln_p = if t > t_leading {
                        law.killed_density(t_leading, y)?.0.ln() - decay * (t - t_leading)
                    } else {
                        law.killed_density(t, y)?.0.ln()
                    };
                    let r = ln_p - ln_killed_density_estimate_kernel(mu, t, x, y)?;
                    if r.is_nan() {
                        return Ok((f64::NAN, f64::NAN));
                    }
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
            }
            Ok((lo, hi))
        })
        .collect::<Result<_>>()?;
    Ok(fold_range(&ranges))
}

/// Combines per-slice `(ln min, ln max)` into `(min, max)`; any NaN poisons
/// the result so it cannot pass as a sandwich.
pub(super) fn fold_range(ranges: &[(f64, f64)]) -> (f64, f64) {
    if ranges.iter().any(|r| r.0.is_nan() || r.1.is_nan()) {
        return (f64::NAN, f64::NAN);
    }
    let (lo, hi) = ranges
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(l, h)| {
            (a.min(l), b.max(h))
        });
    (lo.exp(), hi.exp())
}

/// Grid sizes `(n_t, n_x)` of the coarse comparison grids.
pub(super) fn grid_size(quick: bool) -> (usize, usize) {
    if quick {
        (7, 5)
    } else {
        (13, 9)
    }
}

/// The `t × x × y` grid for `p₁` with `n_t` times on `[1e−3, 50]` and `n_x`
/// points on `[0.05, 0.95]`.
pub fn lemma_sandwich_grid(n_t: usize, n_x: usize) -> (Vec<f64>, Vec<f64>) {
    (logspace(1e-3, 50.0, n_t), linspace(0.05, 0.95, n_x))
}

/// Empirical constants of the two-sided estimate for `p₁` on the standard
/// grid and its 2× refinement.
pub fn p1_sandwich_constants(mu: f64, quick: bool) -> Result<EmpiricalConstants> {
    let (nt, nx) = grid_size(quick);
    let (ts, xs) = lemma_sandwich_grid(nt, nx);
    let (c1, c2) = p1_ratio_range(mu, &ts, &xs)?;
    let (ts, xs) = lemma_sandwich_grid(2 * nt - 1, 2 * nx - 1);
    let (c1_refined, c2_refined) = p1_ratio_range(mu, &ts, &xs)?;
    Ok(EmpiricalConstants {
        kernel: "p1".into(),
        mu,
        c1,
        c2,
        c1_refined,
        c2_refined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speed_integral_of_one() {
        // ∫₀¹ 2z^{2μ+1} dz = 1/(μ+1)
        for mu in [-0.9, 0.0, 2.0] {
            let cfg = QuadConfig::default();
            let (v, _) = speed_integral(mu, |_| 1.0, &[0.3, 0.6, 1.0], &cfg);
            assert!((v * (mu + 1.0) - 1.0).abs() < 1e-10, "{mu}: {v}");
        }
    }

    #[test]
    fn quick_suite_passes() {
        let (checks, constants) = run(&ValidateOptions {
            quick: true,
            seed: 5,
        });
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
        assert_eq!(constants.len(), P1_ORDERS.len());
    }
}
