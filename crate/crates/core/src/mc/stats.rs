use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exitlaw::law::ExitLaw;
use crate::exitlaw::Boundary;
use crate::special::Index;

use super::Batch;

/// Fewest samples accepted by [`empirical_vs_analytic`].
pub const MIN_KS_SAMPLES: usize = 1000;

/// Kolmogorov–Smirnov distance between the exit times of `samples` through
/// `boundary` (all samples if `None`) and the distribution function `cdf`.
pub fn empirical_vs_analytic(
    samples: &[crate::mc::ExitSample],
    boundary: Option<Boundary>,
    cdf: impl Fn(f64) -> f64,
) -> Result<f64> {
    let mut times: Vec<f64> = samples
        .iter()
        .filter(|s| boundary.is_none_or(|b| s.boundary == b))
        .map(|s| s.exit_time)
        .collect();
    if times.len() < MIN_KS_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_KS_SAMPLES,
            got: times.len(),
        });
    }
    times.sort_by(f64::total_cmp);
    let n = times.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &t) in times.iter().enumerate() {
        let f = cdf(t);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.len() == b.len() { 0.0 } else { 1.0 };
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Probability of still being inside at `max_time`, from the first
/// eigenterm of each exit law.
pub fn timeout_probability(index: Index, x0: f64, max_time: f64) -> Result<f64> {
    let mut p = ExitLaw::new(index, x0, Boundary::One)?.first_term_tail(max_time)?;
    if index.kills_at_zero() {
        p += ExitLaw::new(index, x0, Boundary::Zero)?.first_term_tail(max_time)?;
    }
    Ok(p.max(0.0))
}

/// Observed against predicted timeout fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeoutCheck {
    pub observed: f64,
    pub expected: f64,
    pub std_error: f64,
    /// `(observed − expected)/std_error`.
    pub z: f64,
}

impl TimeoutCheck {
    pub fn new(
        index: Index,
        x0: f64,
        max_time: f64,
        timeouts: usize,
        n_paths: usize,
    ) -> Result<Self> {
        let expected = timeout_probability(index, x0, max_time)?;
        let n = n_paths.max(1) as f64;
        let observed = timeouts as f64 / n;
        let std_error = (expected.max(f64::MIN_POSITIVE) * (1.0 - expected) / n).sqrt();
        Ok(TimeoutCheck {
            observed,
            expected,
            std_error,
            z: (observed - expected) / std_error,
        })
    }
}

/// Exit statistics for one boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryStats {
    pub boundary: Boundary,
    pub count: usize,
    /// Fraction of all paths (timeouts included).
    pub mass: f64,
    /// Splitting probability (1 for the reflecting case).
    pub expected_mass: f64,
    /// Binomial standard error of `mass` at `expected_mass`.
    pub std_error: f64,
    pub mean_exit_time: f64,
    pub var_exit_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub n_paths: usize,
    pub timeouts: usize,
    pub mean_exit_time: f64,
    pub var_exit_time: f64,
    pub boundaries: Vec<BoundaryStats>,
    pub timeout_check: TimeoutCheck,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_one: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_zero: Option<f64>,
}

fn moments(times: impl Iterator<Item = f64>) -> (usize, f64, f64) {
    // Welford
    let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for t in times {
        n += 1;
        let d = t - mean;
        mean += d / n as f64;
        m2 += d * (t - mean);
    }
    let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    (n, if n > 0 { mean } else { f64::NAN }, var)
}

/// Boundary masses, moments and the timeout check of a batch.
pub fn summarize(index: Index, x0: f64, max_time: f64, batch: &Batch) -> Result<BatchSummary> {
    let n = batch.n_paths();
    let nf = n.max(1) as f64;
    let (_, mean, var) = moments(batch.samples.iter().map(|s| s.exit_time));
    let mut sides = vec![Boundary::One];
    if index.kills_at_zero() {
        sides.push(Boundary::Zero);
    }
    let mut boundaries = Vec::new();
    for b in sides {
        let (count, m, v) = moments(
            batch
                .samples
                .iter()
                .filter(|s| s.boundary == b)
                .map(|s| s.exit_time),
        );
        let expected = ExitLaw::new(index, x0, b)?.expected_mass();
        boundaries.push(BoundaryStats {
            boundary: b,
            count,
            mass: count as f64 / nf,
            expected_mass: expected,
            std_error: (expected * (1.0 - expected) / nf).sqrt(),
            mean_exit_time: m,
            var_exit_time: v,
        });
    }
    let timeout_check = TimeoutCheck::new(index, x0, max_time, batch.timeouts.len(), n)?;
    Ok(BatchSummary {
        n_paths: n,
        timeouts: batch.timeouts.len(),
        mean_exit_time: mean,
        var_exit_time: var,
        boundaries,
        timeout_check,
        ks_one: None,
        ks_zero: None,
    })
}

/// Nodes of the analytic distribution tables used for KS comparisons.
pub const CDF_NODES: usize = 2000;

/// Fills `ks_one` and `ks_zero` of `summary` with the distance between the
/// simulated exit times through each boundary and the analytic conditional
/// law. A boundary with fewer than [`MIN_KS_SAMPLES`] exits is left empty.
pub fn add_ks_comparison(
    index: Index,
    x0: f64,
    batch: &Batch,
    summary: &mut BatchSummary,
) -> Result<()> {
    for b in [Boundary::One, Boundary::Zero] {
        if b == Boundary::Zero && !index.kills_at_zero() {
            continue;
        }
        let table = ExitLaw::new(index, x0, b)?.cdf_table(CDF_NODES)?;
        let ks = match empirical_vs_analytic(&batch.samples, Some(b), |t| table.conditional(t)) {
            Ok(d) => Some(d),
            Err(Error::InsufficientSamples { .. }) => None,
            Err(e) => return Err(e),
        };
        match b {
            Boundary::One => summary.ks_one = ks,
            Boundary::Zero => summary.ks_zero = ks,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{ExitSample, Scheme};

    fn samples(times: &[f64]) -> Vec<ExitSample> {
        times
            .iter()
            .enumerate()
            .map(|(i, &t)| ExitSample {
                exit_time: t,
                boundary: Boundary::One,
                steps_taken: 1,
                scheme: Scheme::EulerReflect,
                stream: i as u64,
            })
            .collect()
    }

    #[test]
    fn ks_of_uniform_grid() {
        let n = 2000;
        let times: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = empirical_vs_analytic(&samples(&times), None, |t| t.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn ks_needs_samples() {
        let err = empirical_vs_analytic(&samples(&[0.1; 10]), None, |t| t).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientSamples {
                needed: 1000,
                got: 10
            }
        ));
        let err =
            empirical_vs_analytic(&samples(&[0.1; 2000]), Some(Boundary::Zero), |t| t).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { got: 0, .. }));
    }

    #[test]
    fn two_sample_self_is_zero() {
        let a = [0.3, 0.1, 0.7, 0.2];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
        assert!((ks_two_sample(&[1.0, 2.0], &[1.0, 3.0]) - 0.5).abs() < 1e-15);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[2.0, 1.0]), 0.0);
        assert!((ks_two_sample(&[1.0, 2.0], &[2.0, 3.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn welford_moments() {
        let (n, m, v) = moments([1.0, 2.0, 3.0, 4.0].into_iter());
        assert_eq!(n, 4);
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn timeout_probability_decays() {
        let idx = Index::reflecting(0.5).unwrap();
        let a = timeout_probability(idx, 0.5, 1.0).unwrap();
        let b = timeout_probability(idx, 0.5, 2.0).unwrap();
        // first eigenvalue π²/2 for μ = 1/2
        let ratio = a / b;
        let expected = (std::f64::consts::PI.powi(2) / 2.0).exp();
        assert!((ratio / expected - 1.0).abs() < 1e-12);
        let sv = crate::exitlaw::q1_survival_series(0.5, 2.0, 0.5, &Default::default()).unwrap();
        assert!((b / sv - 1.0).abs() < 1e-6);
    }
}
