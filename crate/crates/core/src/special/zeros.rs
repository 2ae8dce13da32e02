//! Positive zeros `j_{μ,k}` of `J_μ`, `μ > -1`.
//!
//! The first two zeros are bracketed by a sign scan of `(z/2)^{-μ} J_μ(z)`
//! (which has no zero in `(0, max(μ, 0)]`). Later zeros use the monotone gap
//! structure: for `μ² > 1/4` the gaps `j_{k+1} - j_k` decrease to `π`, for
//! `μ² < 1/4` they increase to `π`, so the previous gap and `π` bracket the
//! next one. Every bracket is refined by safeguarded Newton and then
//! certified by a sign change across `[z - δ, z + δ]`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{domain, Error, Result};

use super::bessel::{bessel_j, bessel_j_normalized};

/// Requested relative half-width of the certified bracket around each zero.
pub const ZERO_REL_WIDTH: f64 = 1e-13;

const SCAN_STEP: f64 = 0.25;
/// Version of the zero-table text format.
pub const ZERO_TABLE_FORMAT: u32 = 1;

/// An immutable, extendable table of the first `n` positive zeros of `J_μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroTable {
    mu: f64,
    zeros: Vec<f64>,
    half_widths: Vec<f64>,
}

fn sign_change(a: f64, b: f64) -> bool {
    a == 0.0 || b == 0.0 || (a < 0.0) != (b < 0.0)
}

fn refine(mu: f64, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let mut f_lo = bessel_j_normalized(mu, lo)?;
    let f_hi = bessel_j_normalized(mu, hi)?;
    if f_lo == 0.0 {
        return Ok((lo, 0.0));
    }
    if f_hi == 0.0 {
        return Ok((hi, 0.0));
    }
    debug_assert!(sign_change(f_lo, f_hi));
    let mut x = 0.5 * (lo + hi);
    let mut done = false;
    for _ in 0..200 {
        let fx = bessel_j(mu, x)?;
        if fx == 0.0 {
            done = true;
            break;
        }
        if (fx < 0.0) == (f_lo < 0.0) {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
        }
        let deriv = mu / x * fx - bessel_j(mu + 1.0, x)?;
        let mut next = x - fx / deriv;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 2.0 * f64::EPSILON * x || hi - lo <= 4.0 * f64::EPSILON * x {
            x = next;
            done = true;
            break;
        }
        x = next;
    }
    if !done {
        return Err(Error::NoConvergence("Bessel zero refinement"));
    }
    // certify: widen until J changes sign across [x-δ, x+δ]
    let mut delta = 1e-15 * x;
    loop {
        let a = bessel_j(mu, x - delta)?;
        let b = bessel_j(mu, x + delta)?;
        if sign_change(a, b) {
            return Ok((x, delta));
        }
        delta *= 2.0;
        if delta > 1e-6 * x {
            return Err(Error::NoConvergence("Bessel zero certification"));
        }
    }
}

fn scan_from(mu: f64, start: f64) -> Result<(f64, f64)> {
    let mut a = start;
    let mut fa = bessel_j_normalized(mu, a)?;
    loop {
        let b = a + SCAN_STEP;
        let fb = bessel_j_normalized(mu, b)?;
        if sign_change(fa, fb) && fa != 0.0 {
            return Ok((a, b));
        }
        a = b;
        fa = fb;
        if a > start + 1e4 {
            return Err(Error::NoConvergence("Bessel zero scan"));
        }
    }
}

impl ZeroTable {
    /// First `n` zeros of `J_μ`.
    pub fn compute(mu: f64, n: usize) -> Result<Self> {
        if !(mu > -1.0) || !mu.is_finite() {
            return domain(format!("zero tables need mu > -1, got {mu}"));
        }
        if n == 0 {
            return domain("zero tables need n >= 1");
        }
        let empty = ZeroTable {
            mu,
            zeros: Vec::new(),
            half_widths: Vec::new(),
        };
        empty.extend(n)
    }

    /// A new table holding the first `n` zeros; existing entries are reused.
    pub fn extend(&self, n: usize) -> Result<ZeroTable> {
        let mu = self.mu;
        let mut zeros = self.zeros.clone();
        let mut widths = self.half_widths.clone();
        zeros.reserve(n.saturating_sub(zeros.len()));
        while zeros.len() < n {
            let (lo, hi) = match zeros.len() {
                0 => scan_from(mu, mu.max(0.0))?,
                1 => scan_from(mu, zeros[0] + 0.5)?,
                k => {
                    let last = zeros[k - 1];
                    let gap = last - zeros[k - 2];
                    let margin = 1e-9 * last.max(1.0);
                    let (g_lo, g_hi) = if gap <= PI { (gap, PI) } else { (PI, gap) };
                    let lo = last + g_lo - margin;
                    let hi = last + g_hi + margin;
                    let fl = bessel_j_normalized(mu, lo)?;
                    let fh = bessel_j_normalized(mu, hi)?;
                    if sign_change(fl, fh) {
                        (lo, hi)
                    } else {
                        scan_from(mu, last + 0.5)?
                    }
                }
            };
            let (z, w) = refine(mu, lo, hi)?;
            if let Some(&prev) = zeros.last() {
                if z <= prev {
                    return Err(Error::NoConvergence("Bessel zeros out of order"));
                }
            }
            zeros.push(z);
            widths.push(w);
        }
        zeros.truncate(n.max(self.zeros.len()));
        widths.truncate(zeros.len());
        Ok(ZeroTable {
            mu,
            zeros,
            half_widths: widths,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    /// `j_{μ,k}` with 1-based `k`.
    pub fn get(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.zeros.get(i).copied())
    }

    /// Largest certified half-width over the table.
    pub fn enclosure_width(&self) -> f64 {
        self.half_widths.iter().copied().fold(0.0, f64::max)
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    /// Versioned text form: a header `mu=<decimal> n=<int> tol=<decimal>`
    /// followed by one zero per line in round-trip precision.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# bessel-exit zero table v{ZERO_TABLE_FORMAT}");
        let _ = writeln!(
            out,
            "mu={:?} n={} tol={:?}",
            self.mu,
            self.zeros.len(),
            self.enclosure_width()
        );
        for (z, w) in self.zeros.iter().zip(&self.half_widths) {
            let _ = writeln!(out, "{z:?} {w:?}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<ZeroTable> {
        let bad = |m: &str| Error::Parse(m.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut header = lines.next().ok_or_else(|| bad("empty zero table"))?;
        if let Some(rest) = header.strip_prefix('#') {
            let version = rest
                .trim()
                .rsplit('v')
                .next()
                .and_then(|v| v.parse::<u32>().ok())
                .ok_or_else(|| bad("unrecognised zero table banner"))?;
            if version != ZERO_TABLE_FORMAT {
                return Err(bad(&format!("unsupported zero table version {version}")));
            }
            header = lines
                .next()
                .ok_or_else(|| bad("missing zero table header"))?;
        }
        let mut mu = None;
        let mut n = None;
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| bad("malformed header field"))?;
            match key {
                "mu" => mu = value.parse::<f64>().ok(),
                "n" => n = value.parse::<usize>().ok(),
                "tol" => {
                    value.parse::<f64>().map_err(|_| bad("malformed tol"))?;
                }
                _ => return Err(bad(&format!("unknown header key {key}"))),
            }
        }
        let mu = mu.ok_or_else(|| bad("header lacks mu"))?;
        let n = n.ok_or_else(|| bad("header lacks n"))?;
        let mut zeros = Vec::with_capacity(n);
        let mut widths = Vec::with_capacity(n);
        for line in lines {
            let mut parts = line.split_whitespace();
            let z: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("malformed zero"))?;
            let w: f64 = match parts.next() {
                Some(s) => s.parse().map_err(|_| bad("malformed width"))?,
                None => ZERO_REL_WIDTH * z,
            };
            zeros.push(z);
            widths.push(w);
        }
        if zeros.len() != n {
            return Err(bad(&format!(
                "header announces {n} zeros, found {}",
                zeros.len()
            )));
        }
        if zeros.windows(2).any(|w| w[0] >= w[1]) || zeros.first().is_some_and(|&z| z <= 0.0) {
            return Err(bad("zeros must be positive and strictly increasing"));
        }
        Ok(ZeroTable {
            mu,
            zeros,
            half_widths: widths,
        })
    }
}

/// First `n` positive zeros of `J_μ`.
pub fn bessel_zeros(mu: f64, n: usize) -> Result<ZeroTable> {
    ZeroTable::compute(mu, n)
}

type Cache = RwLock<HashMap<u64, Arc<ZeroTable>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Shared process-wide table with at least `n` zeros of `J_μ`.
pub fn cached_zeros(mu: f64, n: usize) -> Result<Arc<ZeroTable>> {
    let key = mu.to_bits();
    if let Some(t) = cache().read().expect("zero cache poisoned").get(&key) {
        if t.len() >= n {
            return Ok(Arc::clone(t));
        }
    }
    let mut guard = cache().write().expect("zero cache poisoned");
    let table = match guard.get(&key) {
        Some(t) if t.len() >= n => return Ok(Arc::clone(t)),
        Some(t) => Arc::new(t.extend(n.max(2 * t.len()))?),
        None => Arc::new(ZeroTable::compute(mu, n.max(16))?),
    };
    guard.insert(key, Arc::clone(&table));
    Ok(table)
}

/// `J_{μ+1}(j_{μ,k})`, the normalising value of the `k`-th eigenfunction.
pub fn bessel_j_deriv_at_zero(mu: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return domain("zero index is 1-based");
    }
    let table = cached_zeros(mu, k)?;
    bessel_j(mu + 1.0, table.zeros()[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_integer_zeros() {
        let t = bessel_zeros(0.5, 3).unwrap();
        for (k, &z) in t.zeros().iter().enumerate() {
            assert!((z - (k + 1) as f64 * PI).abs() < 1e-13 * z);
        }
        let t = bessel_zeros(-0.5, 3).unwrap();
        for (k, &z) in t.zeros().iter().enumerate() {
            assert!((z - (k as f64 + 0.5) * PI).abs() < 1e-13 * z);
        }
    }

    #[test]
    fn first_zero_of_j0_matches_bisection_oracle() {
        // plain bisection on the ascending series, independent of Newton
        let j0 = |z: f64| {
            let mut s = 0.0;
            let mut term = 1.0;
            for k in 1..80 {
                s += term;
                term *= -0.25 * z * z / (k as f64 * k as f64);
            }
            s
        };
        let (mut a, mut b) = (2.0, 3.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if j0(a) * j0(m) <= 0.0 {
                b = m
            } else {
                a = m
            }
        }
        let oracle = 0.5 * (a + b);
        assert!((oracle - 2.404_825_557_695_773).abs() < 1e-14);
        let t = bessel_zeros(0.0, 1).unwrap();
        assert!((t.zeros()[0] - oracle).abs() < 1e-14);
    }

    #[test]
    fn enclosures_meet_relative_width() {
        for &mu in &[-0.9, -0.3, 0.0, 1.0, 7.5, 40.0] {
            let t = bessel_zeros(mu, 40).unwrap();
            for (&z, &w) in t.zeros().iter().zip(t.half_widths()) {
                assert!(w <= ZERO_REL_WIDTH * z, "mu={mu} z={z} w={w}");
                assert!(bessel_j(mu, z).unwrap().abs() < 1e-11);
            }
        }
    }

    #[test]
    fn extension_reuses_existing_entries() {
        let t = bessel_zeros(1.3, 5).unwrap();
        let u = t.extend(12).unwrap();
        assert_eq!(&u.zeros()[..5], t.zeros());
        let fresh = bessel_zeros(1.3, 12).unwrap();
        assert_eq!(u.zeros(), fresh.zeros());
    }

    #[test]
    fn text_round_trip() {
        let t = bessel_zeros(0.25, 7).unwrap();
        let back = ZeroTable::from_text(&t.to_text()).unwrap();
        assert_eq!(back, t);
        assert!(ZeroTable::from_text("mu=0 n=2 tol=1e-13\n3.0\n2.0\n").is_err());
        assert!(ZeroTable::from_text("mu=0 n=3 tol=1e-13\n2.0\n").is_err());
    }

    #[test]
    fn deriv_at_zero_half_integer() {
        for k in 1..6 {
            let expected =
                if k % 2 == 1 { 1.0 } else { -1.0 } * (2.0 / (PI * PI * k as f64)).sqrt();
            let got = bessel_j_deriv_at_zero(0.5, k).unwrap();
            assert!((got - expected).abs() < 1e-14, "k={k}");
        }
        let j1 = bessel_j_deriv_at_zero(0.0, 1).unwrap();
        assert!((j1 - 0.519_147_497_289_466_6).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(bessel_zeros(-1.0, 3), Err(Error::Domain(_))));
        assert!(matches!(bessel_zeros(0.0, 0), Err(Error::Domain(_))));
        assert!(matches!(
            bessel_j_deriv_at_zero(0.0, 0),
            Err(Error::Domain(_))
        ));
    }
}
