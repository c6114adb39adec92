//! Seeded linear-congruential coefficients, identical on every platform.

use num_complex::Complex64;

use crate::model::HilbertModel;

#[derive(Debug, Clone)]
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        let mut g = Lcg(seed ^ 0x9E37_79B9_7F4A_7C15);
        g.next_u64();
        g
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6_364_136_223_846_793_005)
            .wrapping_add(1_442_695_040_888_963_407);
        self.0
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Real and imaginary parts uniform in `[-1, 1)`.
    pub fn coeff(&mut self) -> Complex64 {
        Complex64::new(self.uniform(-1.0, 1.0), self.uniform(-1.0, 1.0))
    }

    pub fn index(&mut self, n: usize) -> usize {
        (self.next_f64() * n as f64) as usize % n.max(1)
    }
}

/// A random combination of two or three dictionary entries.
pub fn random_combination<M: HilbertModel>(model: &M, dict: &[M::Vector], rng: &mut Lcg) -> M::Vector {
    if dict.is_empty() {
        return model.zero();
    }
    let k = 2 + rng.index(2);
    let picks: Vec<(Complex64, &M::Vector)> = (0..k).map(|_| (rng.coeff(), &dict[rng.index(dict.len())])).collect();
    model.lin_comb(&picks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let mut a = Lcg::new(7);
        let mut b = Lcg::new(7);
        for _ in 0..1000 {
            let x = a.next_f64();
            assert_eq!(x, b.next_f64());
            assert!((0.0..1.0).contains(&x));
        }
        assert_ne!(Lcg::new(1).next_u64(), Lcg::new(2).next_u64());
    }
}
