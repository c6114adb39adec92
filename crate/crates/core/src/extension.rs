//! The extension `A_M: f + A*φ ↦ Af − φ` and the restriction `C_M` of `A*` to the
//! graph-orthogonal complement of `M`, with the checks tying them together.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dense::{least_squares, max_abs, orthonormalize_from_gram, row_space, CMatrix, HermitianMatrix};
use crate::error::{Error, Result};
use crate::geometry::SpanFamily;
use crate::model::HilbertModel;
use crate::sampling::{random_combination, Lcg};

/// Relative threshold for membership in `D(C_M)`.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone)]
pub struct ExtensionOperator<'a, M: HilbertModel> {
    family: SpanFamily<'a, M>,
}

impl<'a, M: HilbertModel> ExtensionOperator<'a, M> {
    /// Fails unless `ker A* ∩ M = {0}` and `A*M ∩ D(A) = {0}`.
    pub fn new(family: SpanFamily<'a, M>) -> Result<Self> {
        let report = family.condition_precloscon()?;
        if !report.ok {
            let what = if report.kernel_ok { "A*M meets D(A)" } else { "M meets ker A*" };
            return Err(Error::ConditionViolated(what.into()));
        }
        Ok(ExtensionOperator { family })
    }

    pub fn family(&self) -> &SpanFamily<'a, M> {
        &self.family
    }

    /// `A f − sum_i c_i φ_i`, the image of `f + A*(sum_i c_i φ_i)`.
    pub fn apply(&self, f: &M::Vector, c: &[Complex64]) -> Result<M::Vector> {
        if c.len() != self.family.len() {
            return Err(Error::InvalidParameter(format!(
                "{} coefficients for {} generators",
                c.len(),
                self.family.len()
            )));
        }
        let model = self.family.model();
        if !model.in_dom_a(f) {
            return Err(Error::domain("extension_apply", "f is not in D(A)"));
        }
        let af = model.apply_a(f)?;
        let phi = self.family.combine(c);
        Ok(model.sub(&af, &phi))
    }

    /// The vector `f + A*(sum_i c_i φ_i)`.
    pub fn compose(&self, f: &M::Vector, c: &[Complex64]) -> M::Vector {
        let a = self.family.combine_astar(c);
        self.family.model().lin_comb(&[(ONE, f), (ONE, &a)])
    }

    /// Splits `h = f + A*φ` with `f ∈ D(A)`, or `None` when `h ∉ D(A_M)`.
    pub fn decompose(&self, h: &M::Vector) -> Result<Option<(M::Vector, Vec<Complex64>)>> {
        let model = self.family.model();
        if !model.in_h(h) {
            return Ok(None);
        }
        let k = self.family.len();
        if k == 0 {
            return Ok(model.in_dom_a(h).then(|| (h.clone(), Vec::new())));
        }
        let mut vs = Vec::with_capacity(k + 1);
        vs.push(h.clone());
        vs.extend(self.family.astar_generators().iter().cloned());
        let obs = model.domain_obstruction(&vs)?;
        let rhs: Vec<Complex64> = obs.column(0).iter().copied().collect();
        let lhs = obs.columns(1, k).clone_owned();
        let (c, _) = least_squares(&lhs, &rhs, 1e-12);
        let c = if c.len() == k { c } else { vec![Complex64::new(0.0, 0.0); k] };
        let a = self.family.combine_astar(&c);
        let f = model.sub(h, &a);
        Ok(model.in_dom_a(&f).then_some((f, c)))
    }

    /// `A_M h` when `h ∈ D(A_M)`.
    pub fn apply_vector(&self, h: &M::Vector) -> Result<M::Vector> {
        match self.decompose(h)? {
            Some((f, c)) => self.apply(&f, &c),
            None => Err(Error::domain("extension_apply", "vector is not in D(A_M)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RestrictionOperator<'a, M: HilbertModel> {
    family: SpanFamily<'a, M>,
}

impl<'a, M: HilbertModel> RestrictionOperator<'a, M> {
    pub fn new(family: SpanFamily<'a, M>) -> Self {
        RestrictionOperator { family }
    }

    pub fn family(&self) -> &SpanFamily<'a, M> {
        &self.family
    }

    /// Membership in `D(C_M)` together with the residuals `graph_inner(φ_i, f)`.
    pub fn membership(&self, f: &M::Vector) -> Result<(bool, Vec<Complex64>)> {
        let model = self.family.model();
        if !model.in_dom_astar(f) {
            return Err(Error::domain("restriction_membership", "vector is not in D(A*)"));
        }
        let residuals = self.family.graph_moments(f)?;
        let scale = 1.0 + model.graph_norm(f)?;
        let worst = residuals.iter().fold(0.0f64, |a, r| a.max(r.norm()));
        Ok((worst <= MEMBERSHIP_TOL * scale, residuals))
    }

    /// `g` minus its graph projection onto `M`.
    pub fn project_into_domain(&self, g: &M::Vector) -> Result<M::Vector> {
        let (c, _) = self.family.graph_project(g)?;
        let p = self.family.combine(&c);
        Ok(self.family.model().sub(g, &p))
    }

    /// `C_M f = A* f`.
    pub fn apply(&self, f: &M::Vector) -> Result<M::Vector> {
        if !self.membership(f)?.0 {
            return Err(Error::domain("restriction_apply", "vector is not in D(C_M)"));
        }
        self.family.model().apply_astar(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityReport {
    /// `max |⟨g, A_M u⟩ − ⟨C_M g, u⟩|`.
    pub max_residual: f64,
    /// Largest residual divided by `(1 + ‖g‖_{+1})(1 + ‖u‖ + ‖A_M u‖)`.
    pub max_scaled_residual: f64,
    pub samples: usize,
}

/// Pairs random `u ∈ D(A_M)` with random `g ∈ D(C_M)` and measures the adjoint identity.
pub fn adjoint_duality_check<M: HilbertModel>(
    family: &SpanFamily<'_, M>,
    n_samples: usize,
    seed: u64,
) -> Result<DualityReport> {
    let model = family.model();
    let ext = ExtensionOperator::new(family.clone())?;
    let res = RestrictionOperator::new(family.clone());
    let dom = model.domain_probes();
    let adj = model.adjoint_domain_probes();
    let mut rng = Lcg::new(seed);
    let draws: Vec<(M::Vector, Vec<Complex64>, M::Vector)> = (0..n_samples)
        .map(|_| {
            let f = random_combination(model, &dom, &mut rng);
            let c: Vec<Complex64> = (0..family.len()).map(|_| rng.coeff()).collect();
            let g = random_combination(model, &adj, &mut rng);
            (f, c, g)
        })
        .collect();
    let rows: Vec<(f64, f64)> = draws
        .par_iter()
        .map(|(f, c, g0)| {
            let u = ext.compose(f, c);
            let amu = ext.apply(f, c)?;
            let g = res.project_into_domain(g0)?;
            let cg = model.apply_astar(&g)?;
            let r = (model.inner(&g, &amu)? - model.inner(&cg, &u)?).norm();
            let scale = (1.0 + model.graph_norm(&g)?) * (1.0 + model.norm(&u)? + model.norm(&amu)?);
            Ok((r, r / scale))
        })
        .collect::<Result<_>>()?;
    Ok(DualityReport {
        max_residual: rows.iter().fold(0.0, |a, r| a.max(r.0)),
        max_scaled_residual: rows.iter().fold(0.0, |a, r| a.max(r.1)),
        samples: n_samples,
    })
}

#[derive(Debug, Clone)]
pub struct DensityReport<V> {
    pub dense: bool,
    /// The violating `φ ∈ M` (unit graph norm) when not dense.
    pub phi: Option<V>,
    /// `w = (1 + AA*)φ`, orthogonal to `D(C_M)`.
    pub witness: Option<V>,
    pub witness_norm: f64,
    /// `max |⟨w, g⟩|` over the domain samples.
    pub orthogonality_residual: f64,
    pub samples: usize,
}

/// Decides whether `C_M` is densely defined; when it is not, produces and checks the witness.
pub fn density_decision<M: HilbertModel>(
    family: &SpanFamily<'_, M>,
    n_samples: usize,
    seed: u64,
) -> Result<DensityReport<M::Vector>> {
    let model = family.model();
    let report = family.condition_precloscon()?;
    let Some(phi) = report.witness else {
        return Ok(DensityReport {
            dense: true,
            phi: None,
            witness: None,
            witness_norm: 0.0,
            orthogonality_residual: 0.0,
            samples: 0,
        });
    };
    let a = model.apply_astar(&phi)?;
    let aa = model.apply_a(&a)?;
    let w = model.lin_comb(&[(ONE, &phi), (ONE, &aa)]);
    let witness_norm = model.norm(&w)?;
    if witness_norm == 0.0 {
        return Err(Error::ConditionViolated("(1 + AA*)φ vanished".into()));
    }
    let samples = domain_samples(family, n_samples, seed)?;
    let residuals: Vec<f64> = samples
        .par_iter()
        .map(|g| Ok(model.inner(&w, g)?.norm()))
        .collect::<Result<_>>()?;
    Ok(DensityReport {
        dense: false,
        phi: Some(phi),
        witness: Some(w),
        witness_norm,
        orthogonality_residual: residuals.iter().fold(0.0, |a, &r| a.max(r)),
        samples: n_samples,
    })
}

/// Deterministic samples of `D(C_M)`, made by projecting random probe combinations.
pub fn domain_samples<M: HilbertModel>(
    family: &SpanFamily<'_, M>,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<M::Vector>> {
    let model = family.model();
    let res = RestrictionOperator::new(family.clone());
    let adj = model.adjoint_domain_probes();
    let mut rng = Lcg::new(seed);
    let raw: Vec<M::Vector> = (0..n_samples).map(|_| random_combination(model, &adj, &mut rng)).collect();
    raw.par_iter().map(|g| res.project_into_domain(g)).collect()
}

/// Rebuilds `M` from the action of `A_M` alone, inside the span of the model's probes and
/// the generators: `Γ_M = Γ(A*) ⊖ Γ(A_M*)` restricted to that span.
pub fn recover_parameter<'a, M: HilbertModel>(ext: &ExtensionOperator<'a, M>) -> Result<SpanFamily<'a, M>> {
    let family = ext.family();
    let model = family.model();
    let mut vs = model.adjoint_domain_probes();
    vs.extend(family.generators().iter().cloned());
    let astar_v: Vec<M::Vector> = vs.par_iter().map(|v| model.apply_astar(v)).collect::<Result<_>>()?;
    // Test vectors of D(A_M): the D(A) probes and A*φ_k for each generator.
    let k = family.len();
    let zero_c = vec![Complex64::new(0.0, 0.0); k];
    let mut tests: Vec<(M::Vector, M::Vector)> = Vec::new();
    for f in model.domain_probes() {
        let img = ext.apply(&f, &zero_c)?;
        tests.push((f, img));
    }
    for j in 0..k {
        let mut c = zero_c.clone();
        c[j] = ONE;
        let u = ext.compose(&model.zero(), &c);
        let img = ext.apply(&model.zero(), &c)?;
        tests.push((u, img));
    }
    let n = vs.len();
    let entries: Vec<(Complex64, f64)> = (0..tests.len() * n)
        .into_par_iter()
        .map(|idx| {
            let (r, j) = (idx / n, idx % n);
            let (u, img) = &tests[r];
            let a = model.inner(&vs[j], img)?;
            let b = model.inner(&astar_v[j], u)?;
            Ok((a - b, a.norm() + b.norm()))
        })
        .collect::<Result<_>>()?;
    let values: Vec<Complex64> = entries.iter().map(|e| e.0).collect();
    let d = CMatrix::from_row_slice(tests.len(), n, &values);
    let probe_family = SpanFamily::with_rank_tol(model, vs, family.rank_tol())?;
    let frame = orthonormalize_from_gram(probe_family.gram_graph(), family.rank_tol())?;
    let reduced = d * frame.weights.map(|z| z.conj());
    // Rounding in each entry is relative to the size of the two terms it cancels,
    // and the frame change can amplify it by at most 1/sqrt(smallest kept eigenvalue).
    let term_scale = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
    let amplification = frame.eigenvalues.last().map_or(1.0, |l| 1.0 / l.sqrt());
    let tol = 1e-8 * term_scale.max(f64::MIN_POSITIVE) * amplification;
    let rows = row_space(&reduced, tol);
    let recovered: Vec<M::Vector> = rows
        .iter()
        .map(|b| {
            let coeffs = &frame.weights * nalgebra::DVector::from_column_slice(b);
            probe_family.combine(coeffs.as_slice())
        })
        .collect();
    SpanFamily::with_rank_tol(model, recovered, family.rank_tol())
}

/// `⟨f, A*φ⟩ + ⟨Af, −φ⟩`: the graph inner product of the two summands of `u = f + A*φ`
/// lifted into `Γ(A_M)`.
pub fn summand_graph_pairing<M: HilbertModel>(
    ext: &ExtensionOperator<'_, M>,
    f: &M::Vector,
    c: &[Complex64],
) -> Result<Complex64> {
    let model = ext.family().model();
    let zero_c = vec![Complex64::new(0.0, 0.0); c.len()];
    let a_phi = ext.family().combine_astar(c);
    let af = ext.apply(f, &zero_c)?;
    let minus_phi = ext.apply(&model.zero(), c)?;
    Ok(model.inner(f, &a_phi)? + model.inner(&af, &minus_phi)?)
}

/// Largest entrywise deviation of `Wᴴ G W` from the identity, for diagnostics.
pub fn frame_defect(g: &HermitianMatrix, rank_tol: f64) -> Result<f64> {
    let frame = orthonormalize_from_gram(g, rank_tol)?;
    let r = frame.rank();
    let check = frame.weights.adjoint() * g.matrix() * &frame.weights;
    Ok(max_abs(&(check - CMatrix::identity(r, r))))
}
