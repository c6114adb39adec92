//! Finite span families `M ⊂ D(A*)`, graph projections and the gap metric
//! between the lifted graphs `Γ_M = {(φ, A*φ)}`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dense::{
    hermitian_eig, nullspace, orthonormalize_from_gram, projection_difference_norm, CMatrix, HermitianMatrix,
    DEFAULT_RANK_TOL,
};
use crate::error::{Error, Result};
use crate::model::HilbertModel;

pub const MAX_GENERATORS: usize = 4096;
/// Principal-angle cosines above `1 - INTERSECTION_TOL` count as a shared direction.
const INTERSECTION_TOL: f64 = 1e-8;

pub struct SpanFamily<'a, M: HilbertModel> {
    model: &'a M,
    generators: Vec<M::Vector>,
    astar: Vec<M::Vector>,
    gram_ambient: HermitianMatrix,
    gram_graph: HermitianMatrix,
    rank_tol: f64,
}

impl<'a, M: HilbertModel> Clone for SpanFamily<'a, M> {
    fn clone(&self) -> Self {
        SpanFamily {
            model: self.model,
            generators: self.generators.clone(),
            astar: self.astar.clone(),
            gram_ambient: self.gram_ambient.clone(),
            gram_graph: self.gram_graph.clone(),
            rank_tol: self.rank_tol,
        }
    }
}

impl<'a, M: HilbertModel> std::fmt::Debug for SpanFamily<'a, M> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpanFamily")
            .field("model", &self.model.name())
            .field("generators", &self.generators)
            .field("rank_tol", &self.rank_tol)
            .finish()
    }
}

/// Upper-triangle entries evaluated in parallel; each entry is computed on its own,
/// so the result does not depend on scheduling.
fn parallel_gram(n: usize, f: impl Fn(usize, usize) -> Result<Complex64> + Sync) -> Result<HermitianMatrix> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let values: Vec<Complex64> = pairs.par_iter().map(|&(i, j)| f(i, j)).collect::<Result<_>>()?;
    let mut m = CMatrix::zeros(n, n);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        m[(i, j)] = v;
        m[(j, i)] = v.conj();
    }
    HermitianMatrix::new(m)
}

impl<'a, M: HilbertModel> SpanFamily<'a, M> {
    pub fn new(model: &'a M, generators: Vec<M::Vector>) -> Result<Self> {
        Self::with_rank_tol(model, generators, DEFAULT_RANK_TOL)
    }

    pub fn empty(model: &'a M) -> Self {
        Self::new(model, Vec::new()).expect("empty family")
    }

    pub fn with_rank_tol(model: &'a M, generators: Vec<M::Vector>, rank_tol: f64) -> Result<Self> {
        if generators.len() > MAX_GENERATORS {
            return Err(Error::InvalidParameter(format!(
                "{} generators exceed the cap of {MAX_GENERATORS}",
                generators.len()
            )));
        }
        if let Some(k) = generators.iter().position(|g| !model.in_dom_astar(g)) {
            return Err(Error::domain("span family", format!("generator {k} is not in D(A*)")));
        }
        let astar: Vec<M::Vector> = generators
            .par_iter()
            .map(|g| model.apply_astar(g))
            .collect::<Result<_>>()?;
        let n = generators.len();
        let gram_ambient = parallel_gram(n, |i, j| model.inner(&generators[i], &generators[j]))?;
        let gram_astar = parallel_gram(n, |i, j| model.inner(&astar[i], &astar[j]))?;
        let gram_graph = gram_ambient.add(&gram_astar);
        Ok(SpanFamily {
            model,
            generators,
            astar,
            gram_ambient,
            gram_graph,
            rank_tol,
        })
    }

    pub fn model(&self) -> &'a M {
        self.model
    }

    pub fn generators(&self) -> &[M::Vector] {
        &self.generators
    }

    /// `A*φ_i` for every generator.
    pub fn astar_generators(&self) -> &[M::Vector] {
        &self.astar
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn gram_ambient(&self) -> &HermitianMatrix {
        &self.gram_ambient
    }

    pub fn gram_graph(&self) -> &HermitianMatrix {
        &self.gram_graph
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Numerical dimension of the span.
    pub fn dimension(&self) -> Result<usize> {
        Ok(orthonormalize_from_gram(&self.gram_graph, self.rank_tol)?.rank())
    }

    /// `sum_i c_i φ_i`.
    pub fn combine(&self, coeffs: &[Complex64]) -> M::Vector {
        let terms: Vec<(Complex64, &M::Vector)> = coeffs.iter().copied().zip(&self.generators).collect();
        self.model.lin_comb(&terms)
    }

    /// `sum_i c_i A*φ_i`.
    pub fn combine_astar(&self, coeffs: &[Complex64]) -> M::Vector {
        let terms: Vec<(Complex64, &M::Vector)> = coeffs.iter().copied().zip(&self.astar).collect();
        self.model.lin_comb(&terms)
    }

    /// `graph_inner(φ_i, f)` for every generator.
    pub fn graph_moments(&self, f: &M::Vector) -> Result<Vec<Complex64>> {
        let af = self.model.apply_astar(f)?;
        (0..self.len())
            .into_par_iter()
            .map(|i| Ok(self.model.inner(&self.generators[i], f)? + self.model.inner(&self.astar[i], &af)?))
            .collect()
    }

    /// Best graph-norm approximation of `f` from the span and the remaining distance.
    pub fn graph_project(&self, f: &M::Vector) -> Result<(Vec<Complex64>, f64)> {
        if !self.model.in_dom_astar(f) {
            return Err(Error::domain("graph_project", "vector is not in D(A*)"));
        }
        let v = self.graph_moments(f)?;
        let norm_sq = self.model.graph_inner(f, f)?.re;
        project_with_gram(&self.gram_graph, &v, norm_sq, self.rank_tol)
    }

    /// Recomputes both Gram matrices and returns the largest entrywise deviation from the cache.
    pub fn gram_drift(&self) -> Result<f64> {
        let fresh = Self::with_rank_tol(self.model, self.generators.clone(), self.rank_tol)?;
        let a = crate::dense::max_abs(&(fresh.gram_ambient.matrix() - self.gram_ambient.matrix()));
        let g = crate::dense::max_abs(&(fresh.gram_graph.matrix() - self.gram_graph.matrix()));
        Ok(a.max(g))
    }

    /// Joint graph Gram of this family followed by `other`.
    fn joint_graph_gram(&self, other: &Self) -> Result<HermitianMatrix> {
        let (k1, k2) = (self.len(), other.len());
        let cross: Vec<Complex64> = (0..k1 * k2)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / k2, idx % k2);
                Ok(self.model.inner(&self.generators[i], &other.generators[j])?
                    + self.model.inner(&self.astar[i], &other.astar[j])?)
            })
            .collect::<Result<_>>()?;
        let n = k1 + k2;
        let mut m = CMatrix::zeros(n, n);
        m.view_mut((0, 0), (k1, k1)).copy_from(self.gram_graph.matrix());
        m.view_mut((k1, k1), (k2, k2)).copy_from(other.gram_graph.matrix());
        for i in 0..k1 {
            for j in 0..k2 {
                m[(i, k1 + j)] = cross[i * k2 + j];
                m[(k1 + j, i)] = cross[i * k2 + j].conj();
            }
        }
        HermitianMatrix::new(m)
    }

    /// Checks `ker A* ∩ M = {0}` and `A*M ∩ D(A) = {0}` exactly, returning a violating vector if any.
    pub fn condition_precloscon(&self) -> Result<PreclosconReport<M::Vector>> {
        let frame = orthonormalize_from_gram(&self.gram_graph, self.rank_tol)?;
        let w = &frame.weights;
        let mut report = PreclosconReport {
            ok: true,
            kernel_ok: true,
            domain_ok: true,
            witness: None,
            witness_coeffs: None,
        };
        if frame.rank() == 0 {
            return Ok(report);
        }
        // Part 1: principal angles between M and ker A* in the graph geometry.
        let kernel = self.model.kernel_astar_basis();
        if !kernel.is_empty() {
            let kf = SpanFamily::with_rank_tol(self.model, kernel, self.rank_tol)?;
            let kframe = orthonormalize_from_gram(&kf.gram_graph, self.rank_tol)?;
            let joint = self.joint_graph_gram(&kf)?;
            let k1 = self.len();
            let cross = joint.matrix().view((0, k1), (k1, kf.len())).clone_owned();
            let c = w.adjoint() * cross * &kframe.weights;
            let cc = HermitianMatrix::symmetrized(&c * c.adjoint());
            let eig = hermitian_eig(&cc);
            if let Some(&top) = eig.values.first() {
                if top >= 1.0 - INTERSECTION_TOL {
                    let u = eig.vectors.column(0).clone_owned();
                    let coeffs: Vec<Complex64> = (w * u).iter().copied().collect();
                    report.ok = false;
                    report.kernel_ok = false;
                    report.witness = Some(self.combine(&coeffs));
                    report.witness_coeffs = Some(coeffs);
                    return Ok(report);
                }
            }
        }
        // Part 2: combinations whose A*-image clears every domain obstruction.
        let obs = self.model.domain_obstruction(&self.astar)?;
        let reduced = obs * w;
        let null = nullspace(&reduced, self.rank_tol);
        if null.ncols() > 0 {
            let z = null.column(0).clone_owned();
            let coeffs: Vec<Complex64> = (w * z).iter().copied().collect();
            report.ok = false;
            report.domain_ok = false;
            report.witness = Some(self.combine(&coeffs));
            report.witness_coeffs = Some(coeffs);
        }
        Ok(report)
    }
}

#[derive(Debug, Clone)]
pub struct PreclosconReport<V> {
    pub ok: bool,
    /// `ker A* ∩ M = {0}`.
    pub kernel_ok: bool,
    /// `A*M ∩ D(A) = {0}`.
    pub domain_ok: bool,
    /// Violating vector of unit graph norm.
    pub witness: Option<V>,
    /// The witness as coefficients on the generators.
    pub witness_coeffs: Option<Vec<Complex64>>,
}

/// Projection of a vector with moments `v_i = ⟨φ_i, f⟩` and squared norm `norm_sq`
/// onto the span of a family with Gram matrix `gram`.
pub fn project_with_gram(
    gram: &HermitianMatrix,
    v: &[Complex64],
    norm_sq: f64,
    rank_tol: f64,
) -> Result<(Vec<Complex64>, f64)> {
    let frame = orthonormalize_from_gram(gram, rank_tol)?;
    let vv = nalgebra::DVector::from_column_slice(v);
    let t = frame.weights.adjoint() * vv;
    let captured: f64 = t.iter().map(|z| z.norm_sqr()).sum();
    let coeffs = &frame.weights * t;
    let distance = (norm_sq - captured).max(0.0).sqrt();
    Ok((coeffs.iter().copied().collect(), distance))
}

/// `‖P(Γ_{M1}) − P(Γ_{M2})‖`.
pub fn gap_metric<M: HilbertModel>(m1: &SpanFamily<'_, M>, m2: &SpanFamily<'_, M>) -> Result<f64> {
    if !m1.model.same_operator(m2.model) {
        return Err(Error::ModelMismatch);
    }
    let joint = m1.joint_graph_gram(m2)?;
    let k1 = m1.len();
    let idx_u: Vec<usize> = (0..k1).collect();
    let idx_v: Vec<usize> = (k1..k1 + m2.len()).collect();
    projection_difference_norm(&joint, &idx_u, &idx_v, m1.rank_tol.max(m2.rank_tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiagonalSequence, MomentumLine};
    use crate::pwexp::{psi_infinity, psi_n, PiecewiseExpPoly};
    use crate::seq::{Polynomial, SeqVector};
    use approx::assert_abs_diff_eq;

    fn kernels(ls: &[f64]) -> Vec<PiecewiseExpPoly> {
        ls.iter().map(|&l| PiecewiseExpPoly::kernel(l)).collect()
    }

    #[test]
    fn projection_of_member_and_neighbour() {
        let m = MomentumLine;
        let fam = SpanFamily::new(&m, kernels(&[0.0, 1.0])).unwrap();
        let (_, d) = fam.graph_project(&PiecewiseExpPoly::kernel(1.0)).unwrap();
        assert_abs_diff_eq!(d, 0.0, epsilon = 1e-7);
        let fam = SpanFamily::new(&m, kernels(&[0.0])).unwrap();
        let (c, d) = fam.graph_project(&PiecewiseExpPoly::kernel(1.0)).unwrap();
        let e1 = (-1.0f64).exp();
        assert_abs_diff_eq!(d * d, 0.5 * (1.0 - e1 * e1), epsilon = 1e-14);
        assert_abs_diff_eq!(d, 0.657_520, epsilon = 1e-6);
        assert_abs_diff_eq!(c[0].re, e1, epsilon = 1e-14);
    }

    #[test]
    fn projection_distance_decreases_on_nested_families() {
        let m = MomentumLine;
        let psi = psi_infinity();
        let mut last = f64::INFINITY;
        for k in [1usize, 2, 4, 8] {
            let ls: Vec<f64> = (0..=k).map(|j| j as f64 / k as f64).collect();
            let fam = SpanFamily::new(&m, kernels(&ls)).unwrap();
            let (_, d) = fam.graph_project(&psi).unwrap();
            assert!(d <= last + 1e-12);
            last = d;
        }
    }

    #[test]
    fn gap_examples() {
        let m = MomentumLine;
        let a = SpanFamily::new(&m, kernels(&[0.0])).unwrap();
        let b = SpanFamily::new(&m, kernels(&[1.0])).unwrap();
        assert_abs_diff_eq!(gap_metric(&a, &a).unwrap(), 0.0, epsilon = 1e-7);
        let e1 = (-1.0f64).exp();
        assert_abs_diff_eq!(gap_metric(&a, &b).unwrap(), (1.0 - e1 * e1).sqrt(), epsilon = 1e-12);
        assert_eq!(gap_metric(&a, &b).unwrap(), gap_metric(&b, &a).unwrap());
        let d1 = DiagonalSequence::new(Polynomial::identity());
        let d2 = DiagonalSequence::new(Polynomial::real(&[-3.0, 1.0]));
        let e = || vec![SeqVector::basis(1).unwrap()];
        let x = SpanFamily::new(&d1, e()).unwrap();
        let y = SpanFamily::new(&d2, e()).unwrap();
        assert!(matches!(gap_metric(&x, &y), Err(Error::ModelMismatch)));
    }

    #[test]
    fn gap_to_psi_infinity_shrinks() {
        let m = MomentumLine;
        let inf = SpanFamily::new(&m, vec![psi_infinity()]).unwrap();
        let mut last = 1.0;
        for n in [2usize, 4, 8, 16] {
            let fam = SpanFamily::new(&m, vec![psi_n(n)]).unwrap();
            let d = gap_metric(&fam, &inf).unwrap();
            assert!(d < last);
            last = d;
        }
    }

    #[test]
    fn precloscon_examples() {
        let m = MomentumLine;
        let fam = SpanFamily::new(&m, kernels(&[0.0])).unwrap();
        assert!(fam.condition_precloscon().unwrap().ok);
        let fam = SpanFamily::new(&m, kernels(&[0.0, 0.5, 1.0])).unwrap();
        assert!(fam.condition_precloscon().unwrap().ok);
        let fam = SpanFamily::new(&m, vec![psi_infinity()]).unwrap();
        let r = fam.condition_precloscon().unwrap();
        assert!(!r.ok && !r.domain_ok);
        let w = r.witness.unwrap();
        assert_abs_diff_eq!(m.graph_norm(&w).unwrap(), 1.0, epsilon = 1e-12);
        assert!(w.sub(&psi_infinity()).max_coeff() < 1e-12);
    }

    #[test]
    fn precloscon_on_diagonal_model() {
        let m = DiagonalSequence::new(Polynomial::identity());
        let phi = SeqVector::power_tail(Complex64::new(1.0, 0.0), 2.0);
        assert!(SpanFamily::new(&m, vec![phi]).unwrap().condition_precloscon().unwrap().ok);
        let fam = SpanFamily::new(&m, vec![SeqVector::basis(1).unwrap()]).unwrap();
        assert!(!fam.condition_precloscon().unwrap().domain_ok);
        let shifted = DiagonalSequence::new(Polynomial::real(&[-3.0, 1.0]));
        let fam = SpanFamily::new(&shifted, vec![SeqVector::basis(3).unwrap(), SeqVector::basis(1).unwrap()]).unwrap();
        let r = fam.condition_precloscon().unwrap();
        assert!(!r.kernel_ok);
        let w = r.witness.unwrap();
        assert!(shifted.apply_astar(&w).unwrap().is_zero() || shifted.norm(&shifted.apply_astar(&w).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn cached_grams_are_consistent() {
        let m = MomentumLine;
        let fam = SpanFamily::new(&m, vec![psi_infinity(), PiecewiseExpPoly::kernel(0.4)]).unwrap();
        assert!(fam.gram_drift().unwrap() <= 1e-14);
        let diff = fam.gram_graph().sub(fam.gram_ambient());
        let eig = hermitian_eig(&diff);
        assert!(eig.values.iter().all(|&v| v >= -1e-12));
    }
}
