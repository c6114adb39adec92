use num_complex::Complex64;

use super::{HilbertModel, Sign};
use crate::dense::CMatrix;
use crate::error::{Error, Result};
use crate::pwexp::{merge_breakpoints, psi_infinity, PiecewiseExpPoly};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `A = i d/dx` on `H^1(R)`, acting on piecewise exponential-polynomials.
#[derive(Debug, Clone, Copy, Default)]
pub struct MomentumLine;

impl MomentumLine {
    pub fn new() -> Self {
        MomentumLine
    }

    fn derivative_times_i(&self, op: &'static str, f: &PiecewiseExpPoly) -> Result<PiecewiseExpPoly> {
        if !f.in_h1() {
            return Err(Error::domain(op, "function is not in H^1"));
        }
        Ok(f.derivative().scale(I))
    }
}

impl HilbertModel for MomentumLine {
    type Vector = PiecewiseExpPoly;

    fn name(&self) -> &str {
        "momentum"
    }

    fn is_self_adjoint(&self) -> bool {
        true
    }

    fn same_operator(&self, _other: &Self) -> bool {
        true
    }

    fn zero(&self) -> PiecewiseExpPoly {
        PiecewiseExpPoly::zero()
    }

    fn lin_comb(&self, terms: &[(Complex64, &PiecewiseExpPoly)]) -> PiecewiseExpPoly {
        PiecewiseExpPoly::linear_combination(terms)
    }

    fn is_zero(&self, f: &PiecewiseExpPoly) -> bool {
        f.is_zero()
    }

    fn inner(&self, f: &PiecewiseExpPoly, g: &PiecewiseExpPoly) -> Result<Complex64> {
        f.inner(g)
    }

    fn in_h(&self, f: &PiecewiseExpPoly) -> bool {
        f.is_l2()
    }

    fn in_dom_a(&self, f: &PiecewiseExpPoly) -> bool {
        f.in_h1()
    }

    fn in_dom_astar(&self, f: &PiecewiseExpPoly) -> bool {
        f.in_h1()
    }

    fn in_dom_aastar(&self, f: &PiecewiseExpPoly) -> bool {
        f.in_h2()
    }

    fn apply_a(&self, f: &PiecewiseExpPoly) -> Result<PiecewiseExpPoly> {
        self.derivative_times_i("apply_a", f)
    }

    fn apply_astar(&self, f: &PiecewiseExpPoly) -> Result<PiecewiseExpPoly> {
        self.derivative_times_i("apply_astar", f)
    }

    fn kernel_astar_basis(&self) -> Vec<PiecewiseExpPoly> {
        // i f' = 0 forces f constant, and no nonzero constant is square integrable.
        Vec::new()
    }

    fn solve_one_plus_aastar(&self, f: &PiecewiseExpPoly) -> Result<PiecewiseExpPoly> {
        if !f.is_l2() {
            return Err(Error::NotSquareIntegrable("right-hand side".into()));
        }
        f.solve_one_minus_d2()
    }

    fn resolvent_at(&self, sign: Sign, f: &PiecewiseExpPoly) -> Result<PiecewiseExpPoly> {
        if !f.is_l2() {
            return Err(Error::NotSquareIntegrable("right-hand side".into()));
        }
        match sign {
            Sign::Plus => f.momentum_resolvent_plus(),
            Sign::Minus => f.momentum_resolvent_minus(),
        }
    }

    /// Rows are the breakpoints of all inputs; entries are the jumps there.
    fn domain_obstruction(&self, vs: &[PiecewiseExpPoly]) -> Result<CMatrix> {
        if let Some(k) = vs.iter().position(|v| !v.is_l2()) {
            return Err(Error::NotSquareIntegrable(format!("vector {k}")));
        }
        let mut bps: Vec<f64> = Vec::new();
        for v in vs {
            bps = merge_breakpoints(&bps, v.breakpoints());
        }
        Ok(CMatrix::from_fn(bps.len(), vs.len(), |r, c| vs[c].jump_at(bps[r])))
    }

    fn domain_probes(&self) -> Vec<PiecewiseExpPoly> {
        vec![
            PiecewiseExpPoly::kernel(-1.0),
            PiecewiseExpPoly::kernel(0.3),
            PiecewiseExpPoly::kernel(2.0),
            PiecewiseExpPoly::odd_bump(0.5),
            PiecewiseExpPoly::odd_bump(-0.7),
            PiecewiseExpPoly::two_sided_exp(0.2, Complex64::new(1.0, 0.5)),
            PiecewiseExpPoly::two_sided_exp(-1.5, Complex64::new(2.0, -1.0)),
            psi_infinity(),
        ]
    }

    fn adjoint_domain_probes(&self) -> Vec<PiecewiseExpPoly> {
        self.domain_probes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn adjoint_of_kernel() {
        let m = MomentumLine;
        let a = m.apply_astar(&PiecewiseExpPoly::kernel(0.0)).unwrap();
        for x in [-1.0f64, 0.5] {
            let expect = I * (-0.5 * x.signum() * (-x.abs()).exp());
            assert_abs_diff_eq!((a.eval(x) - expect).norm(), 0.0, epsilon = 1e-15);
        }
        assert!(!m.in_dom_a(&a));
        let psi = psi_infinity();
        assert!(m.in_dom_a(&m.apply_astar(&psi).unwrap()));
    }

    #[test]
    fn graph_gram_of_kernels() {
        let m = MomentumLine;
        for (l, mu) in [(0.0, 0.0), (0.0, 1.0), (-0.4, 2.3)] {
            let g = m
                .graph_inner(&PiecewiseExpPoly::kernel(l), &PiecewiseExpPoly::kernel(mu))
                .unwrap();
            assert_abs_diff_eq!(g.re, 0.5 * (-(l - mu).abs()).exp(), epsilon = 1e-14);
            assert_abs_diff_eq!(g.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn reproducing_identity_on_probes() {
        let m = MomentumLine;
        for f in m.domain_probes() {
            for lambda in [-2.0, 0.0, 0.2, 0.5, 1.7] {
                let g = m.graph_inner(&f, &PiecewiseExpPoly::kernel(lambda)).unwrap();
                assert_abs_diff_eq!((g - f.eval(lambda).conj()).norm(), 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn solve_inverts_one_plus_aastar() {
        let m = MomentumLine;
        let chi = PiecewiseExpPoly::indicator(0.0, 1.0).unwrap().scale(c(0.5f64.exp()));
        let g = m.solve_one_plus_aastar(&chi).unwrap();
        let diff = g.sub(&psi_infinity());
        assert!(diff.max_coeff() < 1e-13);
    }

    #[test]
    fn resolvent_round_trip_and_bound() {
        let m = MomentumLine;
        let f = PiecewiseExpPoly::kernel(0.0);
        for sign in [Sign::Plus, Sign::Minus] {
            let g = m.resolvent_at(sign, &f).unwrap();
            let back = m.apply_a(&g).unwrap().add(&g.scale(sign.shift()));
            assert!(back.sub(&f).max_coeff() < 1e-13);
            assert!(m.norm(&g).unwrap() <= m.norm(&f).unwrap() + 1e-15);
        }
    }

    #[test]
    fn obstruction_detects_cancelling_kinks() {
        let m = MomentumLine;
        let a0 = m.apply_astar(&PiecewiseExpPoly::kernel(0.0)).unwrap();
        let a1 = m.apply_astar(&PiecewiseExpPoly::kernel(1.0)).unwrap();
        let o = m.domain_obstruction(&[a0.clone(), a1]).unwrap();
        assert_eq!(o.shape(), (2, 2));
        assert!(o[(0, 1)].norm() < 1e-15 && o[(0, 0)].norm() > 0.5);
        let o = m.domain_obstruction(&[a0.clone(), a0.scale(c(-1.0))]).unwrap();
        let v = o * nalgebra::DVector::from_vec(vec![c(1.0), c(1.0)]);
        assert!(v.norm() < 1e-15);
    }
}
