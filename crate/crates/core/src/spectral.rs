//! Truncated Fourier–Bessel series `Σ_n a_n e^{-j_n² t/2}` with a certified
//! tail bound.
//!
//! Every series in the crate has coefficients bounded by
//! `scale · j^p · Π_i (1 + s_i j)^{a_i}`, which follows from
//!
//! * `|x^{-μ} J_μ(j x)| ≤ C j^μ (1 + j x)^{-(μ+1/2)}`, with `C` the sup of
//!   `|J_μ(z)|(1+z)^{μ+1/2}/z^μ` measured on a grid (plus a safety factor);
//! * `1/J_{μ+1}(j_n)² ≤ D j_n`, with `D` measured on the zero table and
//!   floored by its limit `π/2`;
//! * `j_{n+1} − j_n ≥ G = min(π, j_2 − j_1)`.
//!
//! Once the bound is decreasing past `j_N`, consecutive tail terms shrink at
//! least geometrically with ratio `r`, giving `|tail| ≤ f(j_N) r/(1−r)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{bessel_j, bessel_j_normalized, cached_zeros, SeriesConfig};
use crate::sum::CompensatedSum;

const SAFETY: f64 = 1.25;
const MIN_TERMS: usize = 48;

/// Zeros of `J_μ` with the normalising values `J_{μ+1}(j_n)` and the
/// constants of the tail envelope.
#[derive(Debug)]
pub(crate) struct Spectrum {
    pub zeros: Vec<f64>,
    pub jp1: Vec<f64>,
    /// `C` in `|z^{-μ}J_μ(z)| ≤ C (1+z)^{-(μ+1/2)}`.
    pub envelope: f64,
    /// `D` in `1/J_{μ+1}(j)² ≤ D j`.
    pub denom: f64,
    /// Lower bound on the spacing of consecutive zeros.
    pub gap: f64,
}

fn envelope_constant(mu: f64) -> Result<f64> {
    let z_max = 60.0_f64.max(3.0 * mu.abs() + 40.0);
    let steps = (z_max / 0.02).ceil() as usize;
    let mut best: f64 = 0.0;
    let two_pow = (-mu * 2f64.ln()).exp();
    for i in 0..=steps {
        let z = z_max * i as f64 / steps as f64;
        let w = (two_pow * bessel_j_normalized(mu, z)?).abs() * (1.0 + z).powf(mu + 0.5);
        best = best.max(w);
    }
    // beyond z_max, |J_μ(z)| ≤ (1+ε)·sqrt(2/(πz)) to well within the safety factor
    let far = (2.0 / PI).sqrt() * (1.0 + 1.0 / z_max).powf(mu + 0.5).max(1.0);
    Ok(SAFETY * best.max(far))
}

impl Spectrum {
    fn build(mu: f64, n: usize, previous: Option<&Spectrum>) -> Result<Spectrum> {
        let table = cached_zeros(mu, n)?;
        let zeros = table.zeros()[..n].to_vec();
        let mut jp1 = previous.map(|p| p.jp1.clone()).unwrap_or_default();
        jp1.truncate(n);
        for &j in &zeros[jp1.len()..] {
            jp1.push(bessel_j(mu + 1.0, j)?);
        }
        let envelope = match previous {
            Some(p) => p.envelope,
            None => envelope_constant(mu)?,
        };
        let measured = zeros
            .iter()
            .zip(&jp1)
            .map(|(&j, &v)| 1.0 / (v * v * j))
            .fold(PI / 2.0, f64::max);
        let gap = if zeros.len() >= 2 {
            (zeros[1] - zeros[0]).min(PI)
        } else {
            PI.min(zeros[0])
        };
        Ok(Spectrum {
            zeros,
            jp1,
            envelope,
            denom: SAFETY * measured,
            gap,
        })
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }
}

type Cache = RwLock<HashMap<u64, Arc<Spectrum>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Shared spectrum of `J_μ` with at least `n` terms.
pub(crate) fn spectrum(mu: f64, n: usize) -> Result<Arc<Spectrum>> {
    let n = n.max(MIN_TERMS);
    let key = mu.to_bits();
    if let Some(s) = cache().read().expect("spectrum cache poisoned").get(&key) {
        if s.len() >= n {
            return Ok(Arc::clone(s));
        }
    }
    let previous = cache()
        .read()
        .expect("spectrum cache poisoned")
        .get(&key)
        .cloned();
    let target = match &previous {
        Some(p) => n.max(2 * p.len()),
        None => n,
    };
    let built = Arc::new(Spectrum::build(mu, target, previous.as_deref())?);
    let mut guard = cache().write().expect("spectrum cache poisoned");
    match guard.get(&key) {
        Some(existing) if existing.len() >= built.len() => Ok(Arc::clone(existing)),
        _ => {
            guard.insert(key, Arc::clone(&built));
            Ok(built)
        }
    }
}

/// First eigenvalue data `(j_{μ,1}, J_{μ+1}(j_{μ,1}))`.
pub(crate) fn first_zero(mu: f64) -> Result<f64> {
    Ok(spectrum(mu, 1)?.zeros[0])
}

/// Coefficient bound `scale · j^pow · Π (1 + s j)^a`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Envelope {
    pub scale: f64,
    pub pow: f64,
    pub factors: [(f64, f64); 2],
}

impl Envelope {
    fn ln_at(&self, j: f64) -> f64 {
        let mut v = self.scale.ln() + self.pow * j.ln();
        for &(s, a) in &self.factors {
            if a != 0.0 {
                v += a * (s * j).ln_1p();
            }
        }
        v
    }

    /// Bound on `Σ_{n>N} |a_n| e^{-j_n² t/2}` given `j_N` and the minimal gap.
    fn tail(&self, j: f64, gap: f64, t: f64) -> Option<f64> {
        let mut slope = self.pow.max(0.0) / j;
        for &(s, a) in &self.factors {
            slope += a.max(0.0) * s / (1.0 + s * j);
        }
        if slope >= j * t {
            return None;
        }
        let mut ln_r = self.pow.max(0.0) * (gap / j).ln_1p() - (j * gap + 0.5 * gap * gap) * t;
        for &(s, a) in &self.factors {
            if a > 0.0 {
                ln_r += a * (s * gap / (1.0 + s * j)).ln_1p();
            }
        }
        let r = ln_r.exp();
        if r >= 1.0 {
            return None;
        }
        Some((self.ln_at(j) - 0.5 * j * j * t).exp() * r / (1.0 - r))
    }
}

/// Value of a truncated series with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesOutcome {
    pub value: f64,
    /// Number of terms summed.
    pub terms: usize,
    /// Certified bound on the discarded tail.
    pub tail_bound: f64,
    /// `Σ|terms| / |Σ terms|`; rounding error is roughly `condition · 1e-16`.
    pub condition: f64,
}

impl SeriesOutcome {
    /// Conservative relative error: tail plus amplified rounding.
    pub fn rel_error(&self) -> f64 {
        let v = self.value.abs();
        let rounding = 8.0 * f64::EPSILON * self.condition.min(1e300);
        if v > 0.0 {
            rounding + self.tail_bound / v
        } else {
            f64::INFINITY
        }
    }
}

type CoeffFn = Box<dyn Fn(f64, f64) -> Result<f64> + Send + Sync>;
type EnvelopeFn = Box<dyn Fn(&Spectrum) -> Envelope + Send + Sync>;

/// A series in `t` at a fixed spatial point. Coefficients depend only on the
/// spatial arguments, so they are computed once and reused for every `t`.
pub(crate) struct Expansion {
    mu: f64,
    spectrum: Arc<Spectrum>,
    coeff: CoeffFn,
    envelope: EnvelopeFn,
    coeffs: Vec<f64>,
}

impl Expansion {
    pub fn new(
        mu: f64,
        coeff: impl Fn(f64, f64) -> Result<f64> + Send + Sync + 'static,
        envelope: impl Fn(&Spectrum) -> Envelope + Send + Sync + 'static,
    ) -> Result<Self> {
        Ok(Expansion {
            mu,
            spectrum: spectrum(mu, MIN_TERMS)?,
            coeff: Box::new(coeff),
            envelope: Box::new(envelope),
            coeffs: Vec::new(),
        })
    }

    fn ensure(&mut self, n: usize) -> Result<()> {
        if self.spectrum.len() < n {
            self.spectrum = spectrum(self.mu, n)?;
        }
        while self.coeffs.len() < n {
            let k = self.coeffs.len();
            let a = (self.coeff)(self.spectrum.zeros[k], self.spectrum.jp1[k])?;
            self.coeffs.push(a);
        }
        Ok(())
    }

    /// Number of terms after which `j_N² t/2 ≥ min_exponent`, as an initial guess.
    fn guess_terms(&self, t: f64, cfg: &SeriesConfig) -> usize {
        let j_needed = (2.0 * cfg.min_exponent.max(1.0) / t).sqrt();
        ((j_needed / PI) + 0.5 * self.mu.max(0.0) + 4.0).min(cfg.max_terms as f64) as usize
    }

    /// First coefficient and the first zero `j₁`; the series behaves like
    /// `a₁ e^{-j₁² t/2}` for large `t`.
    pub fn leading(&mut self) -> Result<(f64, f64)> {
        self.ensure(1)?;
        Ok((self.coeffs[0], self.spectrum.zeros[0]))
    }

    pub fn eval(&mut self, t: f64, cfg: &SeriesConfig) -> Result<SeriesOutcome> {
        cfg.validate()?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!(
                "series time must be positive, got {t}"
            )));
        }
        let guess = self.guess_terms(t, cfg).max(1);
        self.ensure(guess)?;
        let env = (self.envelope)(&self.spectrum);
        let mut sum = CompensatedSum::new();
        let mut n = 0;
        let mut tail = f64::INFINITY;
        while n < cfg.max_terms {
            if n == self.coeffs.len() {
                let want = (2 * n).min(cfg.max_terms).max(n + 1);
                self.ensure(want)?;
            }
            let j = self.spectrum.zeros[n];
            let exponent = 0.5 * j * j * t;
            sum.add(self.coeffs[n] * (-exponent).exp());
            n += 1;
            if exponent >= cfg.min_exponent {
                if let Some(bound) = env.tail(j, self.spectrum.gap, t) {
                    tail = bound;
                    if bound <= cfg.abs_tol || bound <= cfg.rel_tol * sum.value().abs() {
                        return Ok(SeriesOutcome {
                            value: sum.value(),
                            terms: n,
                            tail_bound: bound,
                            condition: sum.condition(),
                        });
                    }
                }
            }
        }
        Err(Error::Truncation { terms: n, tail })
    }
}

/// `x^{-μ} J_μ(j x)`, finite at `x = 0`.
pub(crate) fn eigenfunction(mu: f64, j: f64, x: f64) -> Result<f64> {
    let scale = (mu * (0.5 * j).ln()).exp();
    Ok(scale * bessel_j_normalized(mu, j * x)?)
}

/// Bound for `|x^{-μ} J_μ(j x)|`: factor pair `(x, −(μ+1/2))` and power `μ`.
pub(crate) fn eigen_factor(mu: f64, x: f64) -> (f64, f64) {
    (x, -(mu + 0.5))
}
