//! Compensated (Neumaier) summation with a running rounding-error bound.

/// Unit roundoff of `f64`.
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// Neumaier accumulator that also tracks `sum |x_i|` and the term count,
/// which together give the standard a-priori error bound.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
    abs_sum: f64,
    terms: u64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs_sum += x.abs();
        self.terms += 1;
    }

    /// Fold another partial sum into this one.
    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
        // the two adds above counted as terms; replace with the real tallies
        self.terms -= 2;
        self.abs_sum -= other.sum.abs() + other.comp.abs();
        self.abs_sum += other.abs_sum;
        self.terms += other.terms;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn terms(&self) -> u64 {
        self.terms
    }

    pub fn abs_sum(&self) -> f64 {
        self.abs_sum
    }

    /// Bound on the summation error: `(2u + n u^2) * sum |x_i|`.
    pub fn error_bound(&self) -> f64 {
        let u = UNIT_ROUNDOFF;
        let n = self.terms as f64;
        (2.0 * u + n * u * u) * self.abs_sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-17);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-14).abs() < 1e-25);
    }

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (1..=10_000).map(|i| 1.0 / i as f64).collect();
        let mut whole = CompensatedSum::new();
        xs.iter().for_each(|&x| whole.add(x));
        let mut a = CompensatedSum::new();
        let mut b = CompensatedSum::new();
        xs[..5000].iter().for_each(|&x| a.add(x));
        xs[5000..].iter().for_each(|&x| b.add(x));
        a.merge(&b);
        assert_eq!(a.terms(), 10_000);
        assert!((a.value() - whole.value()).abs() <= whole.error_bound() + a.error_bound());
        assert!((a.abs_sum() - whole.abs_sum()).abs() < 1e-9);
    }
}
