use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernels::{fold_range, grid_size, sandwich_check};
use super::{
    checked, linspace, logspace, Check, Draws, EmpiricalConstants, Suite, ValidateOptions,
};
use crate::error::{Error, Result};
use crate::exitlaw::law::ExitLaw;
use crate::exitlaw::{
    flux_step, ln_q01_estimate_kernels, ln_q1_estimate_kernel, q01_to_one_auto, q01_to_one_series,
    q01_to_zero_auto, q01_to_zero_series, q01_zero_smalltime, q1_auto, q1_series,
    q1_series_outcome, q1_smalltime, q1_via_flux, Boundary,
};
use crate::kernels::{free_density, killed_density_series};
use crate::special::{bessel_j, cached_zeros, Index, SeriesConfig};
use crate::spectral::first_zero;

const S: Suite = Suite::Exitlaw;

pub(super) fn run(opts: &ValidateOptions) -> (Vec<Check>, Vec<EmpiricalConstants>) {
    let n_flux = if opts.quick { 40 } else { 200 };
    let mut checks = vec![
        checked(
            S,
            "flux_consistency",
            flux_consistency(opts.seed, n_flux).map(|(samples, rejected)| {
                let worst = samples.iter().map(|s| s.rel_diff).fold(0.0, f64::max);
                Check::at_most(
                    S,
                    "flux_consistency",
                    worst,
                    1e-4,
                    format!(
                        "{} points, {rejected} ill-conditioned draws rejected",
                        samples.len()
                    ),
                )
            }),
        ),
        checked(S, "corollary_direct_series", corollary_direct()),
        checked(S, "zero_boundary_identity", zero_boundary_identity()),
        checked(S, "opposite_index_exact", opposite_index_exact()),
        checked(
            S,
            "mass_conservation",
            mass_conservation().map(|rows| {
                let worst = rows
                    .iter()
                    .map(|r| (r.mass - r.expected).abs())
                    .fold(0.0, f64::max);
                Check::at_most(
                    S,
                    "mass_conservation",
                    worst,
                    1e-4,
                    format!("{} (mu, x, boundary) cases", rows.len()),
                )
            }),
        ),
        checked(S, "asymptotic_convergence", convergence_check()),
        checked(S, "positivity", positivity()),
    ];
    let mut constants = Vec::new();
    for (kernel, mus) in [
        ("q1", &Q1_ORDERS[..]),
        ("q01_one", &Q01_ORDERS[..]),
        ("q01_zero", &Q01_ORDERS[..]),
    ] {
        for &mu in mus {
            match q_sandwich_constants(kernel, mu, opts.quick) {
                Ok(c) => {
                    checks.push(sandwich_check(S, &c));
                    constants.push(c);
                }
                Err(e) => checks.push(Check::failed(S, &format!("sandwich_{kernel}_mu{mu}"), &e)),
            }
        }
    }
    (checks, constants)
}

pub const Q1_ORDERS: [f64; 4] = [-0.75, 0.0, 0.5, 3.0];
pub const Q01_ORDERS: [f64; 3] = [-0.25, -0.5, -0.9];

/// One point of the flux-identity comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxSample {
    pub mu: f64,
    pub t: f64,
    pub x: f64,
    pub series: f64,
    pub flux: f64,
    pub rel_diff: f64,
}

/// Series error estimate above which a draw is rejected before comparison.
const FLUX_CONDITIONING: f64 = 1e-8;

/// Compares the series for `q₁` with the boundary flux of the killed kernel
/// at `n` random `(μ, t, x)` with `μ ∈ (−1, 5]` and `j₁²t/2 ∈ [0.1, 10]`.
///
/// Draws where the series itself cannot resolve the value (error estimate
/// above `1e−8`, deep Gaussian tails) are redrawn; their count is returned.
pub fn flux_consistency(seed: u64, n: usize) -> Result<(Vec<FluxSample>, usize)> {
    let mut rng = Draws::new(seed, 41);
    let cfg = SeriesConfig::default();
    let mut points = Vec::with_capacity(n);
    let mut rejected = 0;
    while points.len() < n {
        let mu = -rng.uniform(-5.0, 1.0);
        let j1 = first_zero(mu)?;
        let t = 2.0 * rng.log_uniform(0.1, 10.0) / (j1 * j1);
        let x = rng.uniform(0.001, 0.999);
        let out = q1_series_outcome(mu, t, x, &cfg)?;
        if out.value > 0.0 && out.rel_error() <= FLUX_CONDITIONING {
            points.push((mu, t, x, out.value));
        } else {
            rejected += 1;
        }
        if rejected > 10 * n {
            return Err(Error::NoConvergence(
                "flux sampling: too many ill-conditioned draws",
            ));
        }
    }
    let samples = points
        .par_iter()
        .map(|&(mu, t, x, series)| -> Result<FluxSample> {
            let flux = q1_via_flux(mu, t, x, flux_step(t))?;
            Ok(FluxSample {
                mu,
                t,
                x,
                series,
                flux,
                rel_diff: ((series - flux) / series).abs(),
            })
        })
        .collect::<Result<_>>()?;
    Ok((samples, rejected))
}

/// Exit through 1 before 0 summed term by term from its own eigenfunctions
/// `x^{−μ} Σ j J_{−μ}(jx)/J_{1−μ}(j) e^{−j²t/2}` with `j = j_{−μ,n}`.
fn corollary_direct_value(mu: f64, t: f64, x: f64) -> Result<f64> {
    let nu = -mu;
    let n = ((100.0 / t).sqrt() / std::f64::consts::PI) as usize + 10;
    let zeros = cached_zeros(nu, n)?;
    let mut sum = 0.0;
    for &j in zeros.zeros() {
        sum += j * bessel_j(nu, j * x)? / bessel_j(nu + 1.0, j)? * (-0.5 * j * j * t).exp();
    }
    Ok(x.powf(-mu) * sum)
}

fn corollary_direct() -> Result<Check> {
    let cfg = SeriesConfig::default();
    let mut worst: f64 = 0.0;
    for mu in Q01_ORDERS {
        for t in [0.1, 0.5, 2.0] {
            for x in [0.2, 0.5, 0.8] {
                let a = q01_to_one_series(mu, t, x, &cfg)?;
                let b = corollary_direct_value(mu, t, x)?;
                worst = worst.max((a / b - 1.0).abs());
            }
        }
    }
    Ok(Check::at_most(
        S,
        "corollary_direct_series",
        worst,
        1e-12,
        "weighted q1 at -mu against the direct series",
    ))
}

fn opposite_index_exact() -> Result<Check> {
    let cfg = SeriesConfig::default();
    let mut mismatches = 0;
    for mu in Q01_ORDERS {
        for t in [0.05, 0.5, 2.0] {
            for x in linspace(0.1, 0.9, 5) {
                let a = q01_to_one_series(mu, t, x, &cfg)?;
                let b = x.powf(-2.0 * mu) * q1_series(-mu, t, x, &cfg)?;
                if a.to_bits() != b.to_bits() {
                    mismatches += 1;
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

/// Exit through 0 against `−2μ x^{−2μ} p₁^{(−μ)}(t, x, 0)`.
fn zero_boundary_identity() -> Result<Check> {
    let cfg = SeriesConfig::default();
    let mut worst: f64 = 0.0;
    for mu in Q01_ORDERS {
        for t in [0.05, 0.2, 1.0, 3.0] {
            for x in linspace(0.1, 0.9, 5) {
                let a = q01_to_zero_series(mu, t, x, &cfg)?;
                let b =
                    -2.0 * mu * x.powf(-2.0 * mu) * killed_density_series(-mu, t, x, 0.0, &cfg)?;
                worst = worst.max((a / b - 1.0).abs());
            }
        }
    }
    Ok(Check::at_most(
        S,
        "zero_boundary_identity",
        worst,
        1e-10,
        "relative mismatch over a (mu, t, x) grid",
    ))
}

/// One row of the mass-conservation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassRow {
    pub mu: f64,
    pub x: f64,
    pub boundary: Boundary,
    pub killing: bool,
    pub mass: f64,
    pub expected: f64,
}

/// Total masses of the exit laws for `μ ∈ {−0.75, 0, 0.5, 3}` (reflecting,
/// through 1) and `μ ∈ {−0.25, −0.5, −0.9}` (killing, both boundaries),
/// from `x ∈ {0.2, 0.5, 0.8}`.
pub fn mass_conservation() -> Result<Vec<MassRow>> {
    let mut cases = Vec::new();
    for x in [0.2, 0.5, 0.8] {
        for mu in Q1_ORDERS {
            cases.push((Index::reflecting(mu)?, x, Boundary::One));
        }
        for mu in Q01_ORDERS {
            cases.push((Index::killing(mu)?, x, Boundary::One));
            cases.push((Index::killing(mu)?, x, Boundary::Zero));
        }
    }
    cases
        .par_iter()
        .map(|&(index, x, boundary)| -> Result<MassRow> {
            let mut law = ExitLaw::new(index, x, boundary)?;
            let mass = law.mass()?.value;
            Ok(MassRow {
                mu: index.mu(),
                x,
                boundary,
                killing: index.kills_at_zero(),
                mass,
                expected: law.expected_mass(),
            })
        })
        .collect()
}

/// One time of the small-time convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub t: f64,
    pub deviation: f64,
    /// The branch's error order scaled so it equals the deviation at the
    /// first (largest) time.
    pub budget: f64,
}

/// `|series/asymptotic − 1|` at decreasing times for `q₁` (`zero_side = false`)
/// or for the exit through 0 (`zero_side = true`, `μ < 0`).
pub fn asymptotic_convergence(
    mu: f64,
    x: f64,
    ts: &[f64],
    zero_side: bool,
) -> Result<Vec<ConvergenceRow>> {
    let cfg = SeriesConfig {
        abs_tol: 1e-300,
        rel_tol: 1e-16,
        ..SeriesConfig::default()
    };
    let mut rows = Vec::new();
    let mut scale = None;
    for &t in ts {
        let (series, (asym, report)) = if zero_side {
            (
                q01_to_zero_series(mu, t, x, &cfg)?,
                q01_zero_smalltime(mu, t, x)?,
            )
        } else {
            (q1_series(mu, t, x, &cfg)?, q1_smalltime(mu, t, x)?)
        };
        let deviation = (series / asym - 1.0).abs();
        let order = report.estimated_rel_error;
        let c = *scale.get_or_insert(deviation / order);
        rows.push(ConvergenceRow {
            t,
            deviation,
            budget: c * order,
        });
    }
    Ok(rows)
}

/// Deviation shrinks from one time to the next and stays within three times
/// the calibrated budget.
pub fn convergence_passes(rows: &[ConvergenceRow]) -> bool {
    rows.windows(2).all(|w| w[1].deviation < w[0].deviation)
        && rows.iter().all(|r| r.deviation <= 3.0 * r.budget)
}

fn convergence_check() -> Result<Check> {
    let ts = [0.2, 0.1, 0.05];
    let cases = [(0.0, false), (1.0, false), (-0.5, true)];
    let mut failures = 0;
    let mut detail = Vec::new();
    for (mu, zero_side) in cases {
        let rows = asymptotic_convergence(mu, 0.5, &ts, zero_side)?;
        if !convergence_passes(&rows) {
            failures += 1;
        }
        let devs: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.3e}", r.deviation))
            .collect();
        detail.push(format!(
            "mu={mu}{}: {}",
            if zero_side { " (to 0)" } else { "" },
            devs.join(" ")
        ));
    }
    Ok(Check::at_most(
        S,
        "asymptotic_convergence",
        failures as f64,
        0.0,
        detail.join("; "),
    ))
}

fn positivity() -> Result<Check> {
    const ABS_TOL: f64 = 1e-12;
    let cfg = SeriesConfig::default();
    let mut worst: f64 = 0.0;
    let mut track = |v: f64| worst = worst.min(v);
    for t in logspace(1e-3, 20.0, 12) {
        for x in linspace(0.02, 0.98, 9) {
            for mu in Q1_ORDERS {
                track(q1_auto(mu, t, x)?.0);
                track(free_density(mu, t, x, 1.0 - x)?);
                track(killed_density_series(mu, t.max(0.02), x, 0.5, &cfg)?);
            }
            for mu in Q01_ORDERS {
                track(q01_to_one_auto(mu, t, x)?.0);
                track(q01_to_zero_auto(mu, t, x)?.0);
            }
        }
    }
    Ok(Check::at_most(
        S,
        "positivity",
        -worst,
        ABS_TOL,
        "most negative density value over a grid of evaluators",
    ))
}

/// `ln(q/K)` at one point. Where the density underflows it is replaced by
/// its leading eigenterm, which is then exact to far below rounding.
fn ln_ratio(kernel: &str, law: &mut ExitLaw, mu: f64, t: f64, x: f64) -> Result<f64> {
    let ln_k = match kernel {
        "q1" => ln_q1_estimate_kernel(mu, t, x)?,
        "q01_one" => ln_q01_estimate_kernels(mu, t, x)?.0,
        _ => ln_q01_estimate_kernels(mu, t, x)?.1,
    };
    let (a, j1) = law.leading_term()?;
    if 0.5 * j1 * j1 * t > 300.0 {
        return Ok(a.ln() - 0.5 * j1 * j1 * t - ln_k);
    }
    let q = match kernel {
        "q1" => q1_auto(mu, t, x)?.0,
        "q01_one" => q01_to_one_auto(mu, t, x)?.0,
        _ => q01_to_zero_auto(mu, t, x)?.0,
    };
    Ok(q.ln() - ln_k)
}

fn q_ratio_range(kernel: &str, mu: f64, ts: &[f64], xs: &[f64]) -> Result<(f64, f64)> {
    let (index, boundary) = match kernel {
        "q1" => (Index::reflecting(mu)?, Boundary::One),
        "q01_one" => (Index::killing(mu)?, Boundary::One),
        "q01_zero" => (Index::killing(mu)?, Boundary::Zero),
        other => return Err(Error::Domain(format!("unknown estimate kernel `{other}`"))),
    };
    let ranges: Vec<(f64, f64)> = xs
        .par_iter()
        .map(|&x| -> Result<(f64, f64)> {
            let mut law = ExitLaw::new(index, x, boundary)?;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &t in ts {
                let r = ln_ratio(kernel, &mut law, mu, t, x)?;
                if r.is_nan() {
                    return Ok((f64::NAN, f64::NAN));
                }
                lo = lo.min(r);
                hi = hi.max(r);
            }
            Ok((lo, hi))
        })
        .collect::<Result<_>>()?;
    Ok(fold_range(&ranges))
}

/// Empirical constants of the two-sided estimate for `q1`, `q01_one` or
/// `q01_zero` on `t ∈ [1e−3, 50]` × `x ∈ [0.02, 0.98]` and its 2× refinement.
pub fn q_sandwich_constants(kernel: &str, mu: f64, quick: bool) -> Result<EmpiricalConstants> {
    let (nt, nx) = grid_size(quick);
    let (nt, nx) = (2 * nt, 2 * nx + 1);
    let grid = |nt: usize, nx: usize| (logspace(1e-3, 50.0, nt), linspace(0.02, 0.98, nx));
    let (ts, xs) = grid(nt, nx);
    let (c1, c2) = q_ratio_range(kernel, mu, &ts, &xs)?;
    let (ts, xs) = grid(2 * nt - 1, 2 * nx - 1);
    let (c1_refined, c2_refined) = q_ratio_range(kernel, mu, &ts, &xs)?;
    Ok(EmpiricalConstants {
        kernel: kernel.into(),
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
    fn direct_series_brownian() {
        // μ = −1/2: the sum reduces to Σ (−1)^{n+1} nπ sin(nπx) e^{−n²π²t/2}.
        let (t, x) = (0.3, 0.4);
        let pi = std::f64::consts::PI;
        let exact: f64 = (1..60)
            .map(|n| {
                let k = n as f64 * pi;
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                sign * k * (k * x).sin() * (-0.5 * k * k * t).exp()
            })
            .sum();
        let v = corollary_direct_value(-0.5, t, x).unwrap();
        assert!((v / exact - 1.0).abs() < 1e-12, "{v} {exact}");
    }

    #[test]
    fn quick_suite_passes() {
        let (checks, constants) = run(&ValidateOptions {
            quick: true,
            seed: 9,
        });
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
        assert_eq!(constants.len(), 10);
    }
}
