//! The scale `H_{+1} ⊂ H ⊂ H_{-1}`, with every `H_{-1}` element carried by its
//! Riesz representative in `H_{+1} = D(A*)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::dense::{hermitian_eig, nullspace, HermitianMatrix, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::extension::RestrictionOperator;
use crate::geometry::SpanFamily;
use crate::model::{HilbertModel, MomentumLine};
use crate::pwexp::PiecewiseExpPoly;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `ℓ(f) = ⟨φ, f⟩_{+1}` for the representative `φ`.
#[derive(Debug, Clone, Serialize)]
pub struct MinusOneFunctional<V> {
    pub representative: V,
}

impl<V: Clone> MinusOneFunctional<V> {
    pub fn from_representative(representative: V) -> Self {
        MinusOneFunctional { representative }
    }

    pub fn rep(&self) -> &V {
        &self.representative
    }
}

impl MinusOneFunctional<PiecewiseExpPoly> {
    /// Point evaluation at `λ` (up to conjugation): represented by `φ_λ`.
    pub fn point(lambda: f64) -> Self {
        Self::from_representative(PiecewiseExpPoly::kernel(lambda))
    }

    /// `f ↦ c ∫_a^b f`, represented by `(1 + AA*)^{-1}(conj(c) χ_[a,b])`.
    pub fn interval_integral(a: f64, b: f64, c: Complex64) -> Result<Self> {
        let chi = PiecewiseExpPoly::indicator(a, b)?.scale(c.conj());
        Ok(Self::from_representative(MomentumLine.solve_one_plus_aastar(&chi)?))
    }
}

/// The functional `f ↦ ⟨v, f⟩` of an H vector, represented by `(1 + AA*)^{-1} v`.
pub fn functional_from_h<M: HilbertModel>(model: &M, v: &M::Vector) -> Result<MinusOneFunctional<M::Vector>> {
    Ok(MinusOneFunctional::from_representative(model.solve_one_plus_aastar(v)?))
}

/// `‖v‖_{-1} = sqrt(⟨v, (1 + AA*)^{-1} v⟩)`.
pub fn norm_minus_one<M: HilbertModel>(model: &M, v: &M::Vector) -> Result<f64> {
    if !model.in_h(v) {
        return Err(Error::NotSquareIntegrable("H_{-1} norm of a non-H vector".into()));
    }
    let g = model.solve_one_plus_aastar(v)?;
    Ok(model.inner(v, &g)?.re.max(0.0).sqrt())
}

/// `‖ℓ‖_{-1} = ‖φ‖_{+1}`.
pub fn functional_norm<M: HilbertModel>(model: &M, l: &MinusOneFunctional<M::Vector>) -> Result<f64> {
    model.graph_norm(&l.representative)
}

pub fn functional_eval<M: HilbertModel>(
    model: &M,
    l: &MinusOneFunctional<M::Vector>,
    f: &M::Vector,
) -> Result<Complex64> {
    if !model.in_dom_astar(f) {
        return Err(Error::domain("functional_eval", "argument is not in D(A*)"));
    }
    model.graph_inner(&l.representative, f)
}

/// `(1 + AA*)φ` when it lies in H, i.e. when the functional is an inner product against an H vector.
pub fn functional_in_h<M: HilbertModel>(model: &M, l: &MinusOneFunctional<M::Vector>) -> Result<Option<M::Vector>> {
    let phi = &l.representative;
    if !model.in_dom_aastar(phi) {
        return Ok(None);
    }
    let aa = model.apply_a(&model.apply_astar(phi)?)?;
    Ok(Some(model.lin_comb(&[(ONE, phi), (ONE, &aa)])))
}

/// The restriction of `A*` to the common zero set of the functionals.
pub fn restriction_from_functionals<'a, M: HilbertModel>(
    model: &'a M,
    ls: &[MinusOneFunctional<M::Vector>],
) -> Result<RestrictionOperator<'a, M>> {
    let reps = ls.iter().map(|l| l.representative.clone()).collect();
    Ok(RestrictionOperator::new(SpanFamily::new(model, reps)?))
}

#[derive(Debug, Clone)]
pub struct CriterionReport<V> {
    pub dense: bool,
    /// A nonzero combination of representatives lying in `D(AA*)`.
    pub representative: Option<V>,
    /// Its image `(1 + AA*)φ ∈ H`.
    pub embedding: Option<V>,
}

/// Densely defined iff no nonzero combination of the functionals is an H vector,
/// i.e. no nonzero combination of representatives lies in `D(AA*)`.
pub fn density_criterion<M: HilbertModel>(
    model: &M,
    ls: &[MinusOneFunctional<M::Vector>],
) -> Result<CriterionReport<M::Vector>> {
    let none = CriterionReport {
        dense: true,
        representative: None,
        embedding: None,
    };
    if ls.is_empty() {
        return Ok(none);
    }
    let reps: Vec<M::Vector> = ls.iter().map(|l| l.representative.clone()).collect();
    let astar = reps.iter().map(|r| model.apply_astar(r)).collect::<Result<Vec<_>>>()?;
    // Coefficients whose A*-image clears the obstructions to D(A).
    let null = nullspace(&model.domain_obstruction(&astar)?, DEFAULT_RANK_TOL);
    if null.ncols() == 0 {
        return Ok(none);
    }
    // Discard combinations that vanish as vectors.
    let k = reps.len();
    let gram = HermitianMatrix::from_upper(k, |i, j| model.graph_inner(&reps[i], &reps[j]).unwrap_or_default());
    let reduced = HermitianMatrix::symmetrized(null.adjoint() * gram.matrix() * &null);
    let eig = hermitian_eig(&reduced);
    let largest_gram = hermitian_eig(&gram).values.first().copied().unwrap_or(0.0);
    match eig.values.first() {
        Some(&top) if top > DEFAULT_RANK_TOL * largest_gram.max(f64::MIN_POSITIVE) => {
            let coeffs = &null * eig.vectors.column(0) / Complex64::new(top.sqrt(), 0.0);
            let terms: Vec<(Complex64, &M::Vector)> = coeffs.iter().copied().zip(&reps).collect();
            let phi = model.lin_comb(&terms);
            let embedding = functional_in_h(model, &MinusOneFunctional::from_representative(phi.clone()))?;
            Ok(CriterionReport {
                dense: false,
                representative: Some(phi),
                embedding,
            })
        }
        _ => Ok(none),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::density_decision;
    use crate::model::DiagonalSequence;
    use crate::pwexp::psi_infinity;
    use crate::seq::{Polynomial, SeqVector};
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sqrt_e() -> f64 {
        0.5f64.exp()
    }

    #[test]
    fn minus_one_norms() {
        let d = DiagonalSequence::new(Polynomial::identity());
        for k in 1..5u64 {
            let n = norm_minus_one(&d, &SeqVector::basis(k).unwrap()).unwrap();
            assert_abs_diff_eq!(n * n, 1.0 / (1.0 + (k * k) as f64), epsilon = 1e-15);
        }
        let m = MomentumLine;
        let chi = PiecewiseExpPoly::indicator(0.0, 1.0).unwrap().scale(c(sqrt_e()));
        assert_abs_diff_eq!(norm_minus_one(&m, &chi).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(norm_minus_one(&m, &PiecewiseExpPoly::zero()).unwrap(), 0.0);
    }

    #[test]
    fn evaluation_by_representatives() {
        let m = MomentumLine;
        let f = PiecewiseExpPoly::odd_bump(0.3).add(&PiecewiseExpPoly::kernel(-0.2).scale(Complex64::new(0.0, 2.0)));
        let l = MinusOneFunctional::point(0.7);
        assert_abs_diff_eq!((functional_eval(&m, &l, &f).unwrap() - f.eval(0.7)).norm(), 0.0, epsilon = 1e-14);
        let l = MinusOneFunctional::interval_integral(0.0, 1.0, c(sqrt_e())).unwrap();
        assert!(l.rep().sub(&psi_infinity()).max_coeff() < 1e-13);
        let integral = f.integral_over(0.0, 1.0).unwrap() * sqrt_e();
        assert_abs_diff_eq!((functional_eval(&m, &l, &f).unwrap() - integral).norm(), 0.0, epsilon = 1e-13);
        assert_eq!(functional_eval(&m, &l, &PiecewiseExpPoly::zero()).unwrap(), c(0.0));
    }

    #[test]
    fn functionals_in_h() {
        let m = MomentumLine;
        assert!(functional_in_h(&m, &MinusOneFunctional::point(0.0)).unwrap().is_none());
        let e = functional_in_h(&m, &MinusOneFunctional::from_representative(psi_infinity())).unwrap().unwrap();
        let chi = PiecewiseExpPoly::indicator(0.0, 1.0).unwrap().scale(c(sqrt_e()));
        assert!(e.sub(&chi).max_coeff() < 1e-12);
        let d = DiagonalSequence::new(Polynomial::identity());
        let l = MinusOneFunctional::from_representative(SeqVector::power_tail(c(1.0), 2.0));
        assert!(functional_in_h(&d, &l).unwrap().is_none());
    }

    #[test]
    fn criterion_examples_match_density_decision() {
        let m = MomentumLine;
        let pts = vec![MinusOneFunctional::point(0.0), MinusOneFunctional::point(1.0)];
        assert!(density_criterion(&m, &pts).unwrap().dense);
        assert!(density_criterion::<MomentumLine>(&m, &[]).unwrap().dense);
        let l = vec![MinusOneFunctional::interval_integral(0.0, 1.0, c(sqrt_e())).unwrap()];
        let r = density_criterion(&m, &l).unwrap();
        assert!(!r.dense);
        let chi = PiecewiseExpPoly::indicator(0.0, 1.0).unwrap().scale(c(sqrt_e()));
        let w = r.embedding.unwrap();
        // Same line as sqrt(e) chi.
        let ratio = w.eval(0.5) / chi.eval(0.5);
        assert!(w.sub(&chi.scale(ratio)).max_coeff() < 1e-12);
        for ls in [pts, l] {
            let res = restriction_from_functionals(&m, &ls).unwrap();
            let dd = density_decision(res.family(), 4, 1).unwrap();
            assert_eq!(dd.dense, density_criterion(&m, &ls).unwrap().dense);
        }
    }

    #[test]
    fn restriction_from_point_evaluation() {
        let m = MomentumLine;
        let res = restriction_from_functionals(&m, &[MinusOneFunctional::point(0.0)]).unwrap();
        assert!(res.membership(&PiecewiseExpPoly::odd_bump(0.0)).unwrap().0);
        assert!(!res.membership(&PiecewiseExpPoly::kernel(0.0)).unwrap().0);
    }
}
