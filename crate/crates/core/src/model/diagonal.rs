use num_complex::Complex64;

use super::{HilbertModel, Sign};
use crate::dense::CMatrix;
use crate::error::{Error, Result};
use crate::seq::{divide_by_poly, seq_inner_product, Polynomial, SeqVector, Tail};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Multiplication by a polynomial symbol `a_n` on `l^2(N)`.
#[derive(Debug, Clone)]
pub struct DiagonalSequence {
    symbol: Polynomial,
    adjoint: Polynomial,
    eps: f64,
}

/// Accuracy of the certified sums and resolvent approximants used by the model,
/// relative to the magnitude of the operands.
pub const DIAGONAL_EPS: f64 = 1e-13;

impl DiagonalSequence {
    pub fn new(symbol: Polynomial) -> Self {
        let adjoint = symbol.conj();
        DiagonalSequence {
            symbol,
            adjoint,
            eps: DIAGONAL_EPS,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    /// `n^{−(deg+1)}`: in `D(S)` with `Sφ ∉ D(S)` whenever the symbol is nonconstant.
    pub fn critical_tail(&self) -> SeqVector {
        let deg = self.symbol.degree().unwrap_or(0) as f64;
        SeqVector::power_tail(ONE, deg + 1.0)
    }

    pub fn symbol(&self) -> &Polynomial {
        &self.symbol
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Inner product with its certified error bound.
    pub fn inner_with_bound(&self, f: &SeqVector, g: &SeqVector) -> Result<(Complex64, f64)> {
        let eps = self.eps * (1.0 + f.magnitude() * g.magnitude());
        seq_inner_product(f, g, eps)
    }

    fn divide(&self, f: &SeqVector, q: &Polynomial) -> Result<SeqVector> {
        let eps = self.eps * (1.0 + f.magnitude());
        Ok(divide_by_poly(f, q, eps)?.approx)
    }

    fn image_in_l2(&self, sym: &Polynomial, f: &SeqVector) -> bool {
        f.in_l2() && f.apply_symbol(sym).in_l2()
    }
}

impl HilbertModel for DiagonalSequence {
    type Vector = SeqVector;

    fn name(&self) -> &str {
        "diag"
    }

    fn is_self_adjoint(&self) -> bool {
        self.symbol.is_real()
    }

    fn same_operator(&self, other: &Self) -> bool {
        self.symbol == other.symbol
    }

    fn zero(&self) -> SeqVector {
        SeqVector::zero()
    }

    fn lin_comb(&self, terms: &[(Complex64, &SeqVector)]) -> SeqVector {
        SeqVector::linear_combination(terms)
    }

    fn is_zero(&self, f: &SeqVector) -> bool {
        f.is_zero()
    }

    fn inner(&self, f: &SeqVector, g: &SeqVector) -> Result<Complex64> {
        Ok(self.inner_with_bound(f, g)?.0)
    }

    fn in_h(&self, f: &SeqVector) -> bool {
        f.in_l2()
    }

    fn in_dom_a(&self, f: &SeqVector) -> bool {
        self.image_in_l2(&self.symbol, f)
    }

    fn in_dom_astar(&self, f: &SeqVector) -> bool {
        self.image_in_l2(&self.adjoint, f)
    }

    fn in_dom_aastar(&self, f: &SeqVector) -> bool {
        self.in_dom_astar(f) && self.in_dom_a(&f.apply_symbol(&self.adjoint))
    }

    fn apply_a(&self, f: &SeqVector) -> Result<SeqVector> {
        if !self.in_dom_a(f) {
            return Err(Error::domain("apply_a", "symbol image is not square summable"));
        }
        Ok(f.apply_symbol(&self.symbol))
    }

    fn apply_astar(&self, f: &SeqVector) -> Result<SeqVector> {
        if !self.in_dom_astar(f) {
            return Err(Error::domain("apply_astar", "symbol image is not square summable"));
        }
        Ok(f.apply_symbol(&self.adjoint))
    }

    fn kernel_astar_basis(&self) -> Vec<SeqVector> {
        self.adjoint
            .integer_roots()
            .into_iter()
            .map(|k| SeqVector::basis(k).expect("roots are positive"))
            .collect()
    }

    fn solve_one_plus_aastar(&self, f: &SeqVector) -> Result<SeqVector> {
        let q = self.symbol.mul(&self.adjoint).shift(ONE);
        self.divide(f, &q)
    }

    fn resolvent_at(&self, sign: Sign, f: &SeqVector) -> Result<SeqVector> {
        if !self.is_self_adjoint() {
            return Err(Error::Unsupported("resolvent of a non-self-adjoint symbol".into()));
        }
        self.divide(f, &self.symbol.shift(sign.shift()))
    }

    /// Rows are the non-summable tail classes of `A v_i`; entries are their coefficients.
    fn domain_obstruction(&self, vs: &[SeqVector]) -> Result<CMatrix> {
        if let Some(k) = vs.iter().position(|v| !v.in_l2()) {
            return Err(Error::NotSquareIntegrable(format!("vector {k}")));
        }
        let images: Vec<SeqVector> = vs.iter().map(|v| v.apply_symbol(&self.symbol)).collect();
        let mut classes: Vec<Tail> = Vec::new();
        for img in &images {
            for t in img.non_l2_tails() {
                if !classes.iter().any(|c| same_class(c, &t)) {
                    classes.push(t);
                }
            }
        }
        Ok(CMatrix::from_fn(classes.len(), vs.len(), |r, c| {
            images[c]
                .tails()
                .iter()
                .filter(|t| same_class(t, &classes[r]))
                .map(|t| t.coeff)
                .sum()
        }))
    }

    fn domain_probes(&self) -> Vec<SeqVector> {
        let deg = self.symbol.degree().unwrap_or(0) as f64;
        let mut out: Vec<SeqVector> = (1..=6).map(|k| SeqVector::basis(k).expect("k >= 1")).collect();
        out.push(SeqVector::power_tail(ONE, deg + 1.0));
        out.push(SeqVector::power_tail(Complex64::new(0.5, -1.0), deg + 1.5));
        out.push(SeqVector::geometric(ONE, Complex64::new(0.5, 0.0)).expect("|rho| < 1"));
        out.push(SeqVector::geometric(ONE, Complex64::new(0.0, 0.6)).expect("|rho| < 1"));
        out.retain(|v| self.in_dom_a(v));
        out
    }

    fn adjoint_domain_probes(&self) -> Vec<SeqVector> {
        let mut out = self.domain_probes();
        out.retain(|v| self.in_dom_astar(v));
        out
    }
}

fn same_class(a: &Tail, b: &Tail) -> bool {
    (a.power - b.power).abs() <= 1e-12 && (a.ratio - b.ratio).norm() <= 1e-13
}
