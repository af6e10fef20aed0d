//! Compensated (Neumaier) summation with error-free products.

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Adds `a * b`, carrying the product's rounding error.
    #[inline]
    pub(crate) fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        self.add(p);
        self.comp += a.mul_add(b, -p);
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Accumulator::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        assert_eq!(sum([1e16, 1.0, -1e16]), 1.0);
        let mut acc = Accumulator::default();
        let a = 1.0 + f64::EPSILON;
        acc.add_product(a, a);
        acc.add(-1.0);
        acc.add(-2.0 * f64::EPSILON);
        assert_eq!(acc.value(), f64::EPSILON * f64::EPSILON);
    }
}
