use crate::error::{domain, Result};

/// Two-sided bounds on `I_μ(y)/I_μ(x)` for `μ > -1` and `0 < x < y`:
///
/// `(x/y)^{μ+4} e^{y-x}  <  I_μ(y)/I_μ(x)  <  (y/x)^{μ+2} e^{y-x}`.
///
/// The bounds are returned as `(lower, upper)`. Both overflow to infinity
/// together once `y - x` exceeds roughly 700; use [`ln_i_ratio_bounds`]
/// in that range.
pub fn i_ratio_bounds(mu: f64, x: f64, y: f64) -> Result<(f64, f64)> {
    let (lo, hi) = ln_i_ratio_bounds(mu, x, y)?;
    Ok((lo.exp(), hi.exp()))
}

/// Logarithms of the bounds returned by [`i_ratio_bounds`].
pub fn ln_i_ratio_bounds(mu: f64, x: f64, y: f64) -> Result<(f64, f64)> {
    if !(mu > -1.0) || !mu.is_finite() {
        return domain(format!("ratio bounds need mu > -1, got {mu}"));
    }
    if !(x > 0.0) || !y.is_finite() || !(x < y) {
        return domain(format!("ratio bounds need 0 < x < y, got x = {x}, y = {y}"));
    }
    let log_ratio = (y / x).ln();
    let gap = y - x;
    Ok((-(mu + 4.0) * log_ratio + gap, (mu + 2.0) * log_ratio + gap))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_integer_bracket() {
        let exact = 2.0_f64.sinh() / (1.0_f64.sinh() * 2.0_f64.sqrt());
        let (lo, hi) = i_ratio_bounds(0.5, 1.0, 2.0).unwrap();
        assert!(lo < exact && exact < hi);
    }

    #[test]
    fn bounds_collapse_at_the_diagonal() {
        let (lo, hi) = i_ratio_bounds(3.0, 0.7, 0.7 + 1e-12).unwrap();
        assert!((lo - 1.0).abs() < 1e-10 && (hi - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_unordered_arguments() {
        assert!(i_ratio_bounds(0.0, 1.0, 1.0).is_err());
        assert!(i_ratio_bounds(0.0, 2.0, 1.0).is_err());
        assert!(i_ratio_bounds(-1.0, 1.0, 2.0).is_err());
        assert!(i_ratio_bounds(0.0, 0.0, 2.0).is_err());
    }
}
