//! Monte Carlo sampling of exit times by an Euler scheme for
//! `dR = dB + (2μ+1)/(2R) dt`.
//!
//! Every path owns a ChaCha8 stream selected by its stream number, and every
//! step consumes exactly four 64-bit words, so step `k` of stream `s` always
//! sees the same random input whatever the schedule.

mod io;
mod stats;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exitlaw::Boundary;
use crate::special::Index;

pub use io::{read_samples_csv, write_samples_csv, CSV_HEADER};
pub use stats::{
    add_ks_comparison, empirical_vs_analytic, ks_two_sample, summarize, timeout_probability,
    BatchSummary, BoundaryStats, TimeoutCheck, CDF_NODES, MIN_KS_SAMPLES,
};

/// Discretisation used for the path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Folded at 0 (`|·|`).
    EulerReflect,
    /// Absorbed at 0.
    EulerAbsorb,
}

impl Scheme {
    pub fn for_index(index: &Index) -> Self {
        if index.kills_at_zero() {
            Scheme::EulerAbsorb
        } else {
            Scheme::EulerReflect
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::EulerReflect => "euler_reflect",
            Scheme::EulerAbsorb => "euler_absorb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Time step `h`.
    pub step: f64,
    /// Paths still inside at this time are reported as timeouts.
    pub max_time: f64,
    pub seed: u64,
    pub n_paths: usize,
    /// Brownian-bridge crossing test at the absorbing boundaries.
    pub bridge_correction: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            step: 1e-4,
            max_time: 20.0,
            seed: 0,
            n_paths: 10_000,
            bridge_correction: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return domain(format!("step must be positive, got {}", self.step));
        }
        if !(self.max_time > self.step && self.max_time.is_finite()) {
            return domain(format!(
                "max_time must exceed the step, got {}",
                self.max_time
            ));
        }
        if self.n_paths == 0 {
            return domain("n_paths must be at least 1");
        }
        Ok(())
    }

    fn max_steps(&self) -> u64 {
        (self.max_time / self.step).ceil() as u64
    }
}

/// One simulated exit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitSample {
    pub exit_time: f64,
    pub boundary: Boundary,
    pub steps_taken: u64,
    pub scheme: Scheme,
    /// RNG stream that produced the path.
    pub stream: u64,
}

fn uniform(word: u64) -> f64 {
    // 53 random bits in (0, 1)
    ((word >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn normal(w1: u64, w2: u64) -> f64 {
    let (u1, u2) = (uniform(w1), uniform(w2));
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

struct Path {
    rng: ChaCha8Rng,
    r: f64,
    drift_coef: f64,
    h: f64,
    sqrt_h: f64,
    absorb: bool,
    bridge: bool,
}

enum Step {
    Inside,
    Exit(Boundary, f64),
}

impl Path {
    fn new(index: &Index, x0: f64, cfg: &SimConfig, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        Path {
            rng,
            r: x0,
            drift_coef: index.mu() + 0.5,
            h: cfg.step,
            sqrt_h: cfg.step.sqrt(),
            absorb: index.kills_at_zero(),
            bridge: cfg.bridge_correction,
        }
    }

    /// Advances one step; the returned fraction locates the exit inside it.
    fn step(&mut self) -> Step {
        let words = [
            self.rng.next_u64(),
            self.rng.next_u64(),
            self.rng.next_u64(),
            self.rng.next_u64(),
        ];
        let r0 = self.r;
        let drift = self.drift_coef / r0.max(self.sqrt_h);
        let mut r1 = r0 + drift * self.h + self.sqrt_h * normal(words[0], words[1]);
        if r1 >= 1.0 {
            return Step::Exit(Boundary::One, (1.0 - r0) / (r1 - r0));
        }
        if r1 <= 0.0 {
            if self.absorb {
                return Step::Exit(Boundary::Zero, r0 / (r0 - r1));
            }
            r1 = -r1;
        }
        if self.bridge {
            if uniform(words[2]) < (-2.0 * (1.0 - r0) * (1.0 - r1) / self.h).exp() {
                return Step::Exit(Boundary::One, 0.5);
            }
            // only near the origin, so that reflecting and killing runs from
            // one seed stay identical until a path comes within 2√h of 0
            if self.absorb
                && r0.min(r1) < 2.0 * self.sqrt_h
                && uniform(words[3]) < (-2.0 * r0 * r1 / self.h).exp()
            {
                return Step::Exit(Boundary::Zero, 0.5);
            }
        }
        self.r = r1;
        Step::Inside
    }
}

fn check_start(x0: f64) -> Result<()> {
    if !(x0 > 0.0 && x0 < 1.0) {
        return domain(format!("starting point must lie in (0, 1), got {x0}"));
    }
    Ok(())
}

/// Simulates one path from `x0` until it leaves `(0, 1)` (or `[0, 1)`).
///
/// Returns [`Error::Timeout`] if the path is still inside at `cfg.max_time`.
pub fn simulate_exit(index: Index, x0: f64, cfg: &SimConfig, stream: u64) -> Result<ExitSample> {
    cfg.validate()?;
    check_start(x0)?;
    let mut path = Path::new(&index, x0, cfg, stream);
    let scheme = Scheme::for_index(&index);
    for k in 0..cfg.max_steps() {
        if let Step::Exit(boundary, frac) = path.step() {
            return Ok(ExitSample {
                exit_time: (k as f64 + frac.clamp(0.0, 1.0)) * cfg.step,
                boundary,
                steps_taken: k + 1,
                scheme,
                stream,
            });
        }
    }
    Err(Error::Timeout {
        max_time: cfg.max_time,
    })
}

/// Trajectory of one path at every step, for coupling diagnostics.
pub fn simulate_path(
    index: Index,
    x0: f64,
    cfg: &SimConfig,
    stream: u64,
) -> Result<(Vec<f64>, Option<Boundary>)> {
    cfg.validate()?;
    check_start(x0)?;
    let mut path = Path::new(&index, x0, cfg, stream);
    let mut out = vec![x0];
    for _ in 0..cfg.max_steps() {
        match path.step() {
            Step::Inside => out.push(path.r),
            Step::Exit(b, _) => return Ok((out, Some(b))),
        }
    }
    Ok((out, None))
}

/// Samples from `n_paths` paths on streams `0..n_paths`, in stream order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub samples: Vec<ExitSample>,
    /// Streams that hit `max_time`.
    pub timeouts: Vec<u64>,
}

impl Batch {
    pub fn n_paths(&self) -> usize {
        self.samples.len() + self.timeouts.len()
    }
}

/// Runs the paths on the current rayon pool; results do not depend on the
/// number of workers.
pub fn simulate_batch(index: Index, x0: f64, cfg: &SimConfig) -> Result<Batch> {
    cfg.validate()?;
    check_start(x0)?;
    let results: Vec<Result<ExitSample>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|s| simulate_exit(index, x0, cfg, s))
        .collect();
    let mut samples = Vec::with_capacity(results.len());
    let mut timeouts = Vec::new();
    for (s, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => samples.push(v),
            Err(Error::Timeout { .. }) => timeouts.push(s as u64),
            Err(e) => return Err(e),
        }
    }
    Ok(Batch { samples, timeouts })
}

/// [`simulate_batch`] on a dedicated pool of `workers` threads.
pub fn simulate_batch_with_workers(
    index: Index,
    x0: f64,
    cfg: &SimConfig,
    workers: usize,
) -> Result<Batch> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
    pool.install(|| simulate_batch(index, x0, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(step: f64, n: usize) -> SimConfig {
        SimConfig {
            step,
            max_time: 50.0,
            seed: 7,
            n_paths: n,
            bridge_correction: true,
        }
    }

    #[test]
    fn deterministic_per_stream() {
        let idx = Index::reflecting(0.5).unwrap();
        let c = cfg(1e-3, 1);
        let a = simulate_exit(idx, 0.5, &c, 3).unwrap();
        let b = simulate_exit(idx, 0.5, &c, 3).unwrap();
        assert_eq!(a, b);
        let other = simulate_exit(idx, 0.5, &c, 4).unwrap();
        assert_ne!(a.exit_time, other.exit_time);
    }

    #[test]
    fn worker_count_is_irrelevant() {
        let idx = Index::killing(-0.3).unwrap();
        let c = cfg(1e-3, 200);
        let one = simulate_batch_with_workers(idx, 0.4, &c, 1).unwrap();
        let four = simulate_batch_with_workers(idx, 0.4, &c, 4).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn brownian_splitting_and_mean() {
        let idx = Index::killing(-0.5).unwrap();
        let c = cfg(1e-3, 40_000);
        let batch = simulate_batch(idx, 0.5, &c).unwrap();
        let n = batch.samples.len() as f64;
        let up = batch
            .samples
            .iter()
            .filter(|s| s.boundary == Boundary::One)
            .count() as f64
            / n;
        let mean = batch.samples.iter().map(|s| s.exit_time).sum::<f64>() / n;
        // binomial sd 0.0025, exit-time sd ≈ 0.2/√n = 0.001
        assert!((up - 0.5).abs() < 0.0075, "{up}");
        assert!((mean - 0.25).abs() < 0.004, "{mean}");
    }

    #[test]
    fn reflecting_never_exits_at_zero() {
        let idx = Index::reflecting(-0.7).unwrap();
        let batch = simulate_batch(idx, 0.1, &cfg(1e-3, 500)).unwrap();
        assert!(batch
            .samples
            .iter()
            .all(|s| s.boundary == Boundary::One && s.scheme == Scheme::EulerReflect));
    }

    #[test]
    fn coupling_until_near_origin() {
        let c = cfg(1e-4, 1);
        let refl = Index::reflecting(-0.4).unwrap();
        let kill = Index::killing(-0.4).unwrap();
        let radius = 2.0 * c.step.sqrt();
        for s in 0..40 {
            let (a, _) = simulate_path(refl, 0.3, &c, s).unwrap();
            let (b, _) = simulate_path(kill, 0.3, &c, s).unwrap();
            let touch = a.iter().position(|&r| r < radius).unwrap_or(a.len());
            let common = touch.min(a.len()).min(b.len());
            assert_eq!(a[..common], b[..common], "stream {s}");
        }
    }

    #[test]
    fn timeout_reported() {
        let idx = Index::reflecting(0.0).unwrap();
        let c = SimConfig {
            step: 1e-3,
            max_time: 2e-3,
            seed: 1,
            n_paths: 1,
            bridge_correction: false,
        };
        assert!(matches!(
            simulate_exit(idx, 0.5, &c, 0),
            Err(Error::Timeout { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let idx = Index::reflecting(0.0).unwrap();
        let mut c = cfg(1e-3, 1);
        c.step = 0.0;
        assert!(simulate_exit(idx, 0.5, &c, 0).is_err());
        assert!(simulate_exit(idx, 1.0, &cfg(1e-3, 1), 0).is_err());
        c = cfg(1e-3, 0);
        assert!(c.validate().is_err());
    }
}
