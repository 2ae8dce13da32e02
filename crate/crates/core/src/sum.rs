//! Compensated summation for the alternating spectral series.

/// Neumaier's variant of Kahan summation: exact error tracking even when an
/// addend is larger in magnitude than the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
    abs: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
        self.abs += value.abs();
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Sum of the absolute values of every addend, the scale against which
    /// cancellation is measured.
    #[inline]
    pub fn abs_sum(&self) -> f64 {
        self.abs
    }

    /// `abs_sum / |value|`, infinite when the sum cancelled to zero.
    pub fn condition(&self) -> f64 {
        let v = self.value().abs();
        if v > 0.0 {
            self.abs / v
        } else if self.abs == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_addends_lost_by_naive_sum() {
        let values = [1.0, 1e100, 1.0, -1e100];
        let naive: f64 = values.iter().sum();
        let s: CompensatedSum = values.iter().copied().collect();
        assert_eq!(naive, 0.0);
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn condition_of_cancelling_sum() {
        let s: CompensatedSum = [3.0, -1.0].into_iter().collect();
        assert_eq!(s.condition(), 2.0);
        let z: CompensatedSum = [1.0, -1.0].into_iter().collect();
        assert!(z.condition().is_infinite());
    }
}
