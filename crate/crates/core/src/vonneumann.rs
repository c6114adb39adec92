//! The symmetric restriction `C_φ` of a self-adjoint `S`, its defect vectors
//! `(S ± i)φ`, the self-adjoint family `C_{φ,θ}` and its rank-one resolvent formula.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::dense::{least_squares, max_abs};
use crate::error::{Error, Result};
use crate::extension::{ExtensionOperator, RestrictionOperator};
use crate::geometry::SpanFamily;
use crate::model::{HilbertModel, Sign};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Admissible `φ` for a self-adjoint model, normalized so that `‖(S + i)φ‖ = 1`.
#[derive(Debug, Clone)]
pub struct RankOneRestriction<'a, M: HilbertModel> {
    model: &'a M,
    phi: M::Vector,
    s_phi: M::Vector,
    n_plus: M::Vector,
    n_minus: M::Vector,
    /// `‖(S + i)φ‖` before normalization.
    raw_norm: f64,
}

impl<'a, M: HilbertModel> RankOneRestriction<'a, M> {
    pub fn new(model: &'a M, phi: M::Vector) -> Result<Self> {
        if !model.is_self_adjoint() {
            return Err(Error::ConditionViolated(format!("model {} is not self-adjoint", model.name())));
        }
        if !model.in_dom_a(&phi) || model.is_zero(&phi) {
            return Err(Error::ConditionViolated("φ must be a nonzero vector of D(S)".into()));
        }
        let s_phi = model.apply_a(&phi)?;
        if model.in_dom_a(&s_phi) {
            return Err(Error::ConditionViolated("Sφ lies in D(S)".into()));
        }
        let raw_norm = (model.inner(&phi, &phi)?.re + model.inner(&s_phi, &s_phi)?.re).sqrt();
        let inv = Complex64::new(1.0 / raw_norm, 0.0);
        let phi = model.scale(inv, &phi);
        let s_phi = model.scale(inv, &s_phi);
        let n_plus = model.lin_comb(&[(ONE, &s_phi), (I, &phi)]);
        let n_minus = model.lin_comb(&[(ONE, &s_phi), (-I, &phi)]);
        Ok(RankOneRestriction {
            model,
            phi,
            s_phi,
            n_plus,
            n_minus,
            raw_norm,
        })
    }

    pub fn model(&self) -> &'a M {
        self.model
    }

    pub fn phi(&self) -> &M::Vector {
        &self.phi
    }

    pub fn s_phi(&self) -> &M::Vector {
        &self.s_phi
    }

    pub fn raw_norm(&self) -> f64 {
        self.raw_norm
    }

    /// `(S + i)φ` and `(S − i)φ`.
    pub fn defect_pair(&self) -> (&M::Vector, &M::Vector) {
        (&self.n_plus, &self.n_minus)
    }

    pub fn family(&self) -> Result<SpanFamily<'a, M>> {
        SpanFamily::new(self.model, vec![self.phi.clone()])
    }

    /// `C_φ`: `S` on vectors graph-orthogonal to `φ`.
    pub fn restriction(&self) -> Result<RestrictionOperator<'a, M>> {
        Ok(RestrictionOperator::new(self.family()?))
    }

    /// `C_φ* : f + λSφ ↦ Sf − λφ`.
    pub fn adjoint(&self) -> Result<ExtensionOperator<'a, M>> {
        ExtensionOperator::new(self.family()?)
    }

    /// `n_+ + e^{iθ} n_−`, the direction added to `D(C_φ)`.
    pub fn theta_direction(&self, theta: ExtensionParameter) -> M::Vector {
        self.model.lin_comb(&[(ONE, &self.n_plus), (theta.phase(), &self.n_minus)])
    }

    /// `f + λ(n_+ + e^{iθ} n_−)`.
    pub fn domain_vector(&self, theta: ExtensionParameter, f: &M::Vector, lambda: Complex64) -> M::Vector {
        let d = self.theta_direction(theta);
        self.model.lin_comb(&[(ONE, f), (lambda, &d)])
    }
}

/// `θ ∈ (−π, π]`; `θ = π` is the trivial extension `S` itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtensionParameter {
    theta: f64,
}

impl ExtensionParameter {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > -PI && theta <= PI) {
            return Err(Error::InvalidParameter(format!("θ = {theta} is outside (−π, π]")));
        }
        Ok(ExtensionParameter { theta })
    }

    pub fn trivial() -> Self {
        ExtensionParameter { theta: PI }
    }

    pub fn theta(self) -> f64 {
        self.theta
    }

    pub fn is_trivial(self) -> bool {
        self.theta == PI
    }

    /// `e^{iθ}`, exactly `−1` at `θ = π`.
    pub fn phase(self) -> Complex64 {
        if self.is_trivial() {
            -ONE
        } else {
            Complex64::from_polar(1.0, self.theta)
        }
    }

    /// `(1 + e^{iθ}) / (2i)`.
    pub fn coefficient(self) -> Complex64 {
        (ONE + self.phase()) / (2.0 * I)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectReport<V> {
    pub n_plus: V,
    pub n_minus: V,
    /// `‖C_φ* n_± ∓ i n_±‖`.
    pub residual_plus: f64,
    pub residual_minus: f64,
    pub norm_plus: f64,
    pub norm_minus: f64,
}

/// The defect vectors, with `C_φ* n_± = ±i n_±` replayed through the extension map.
pub fn defect_vectors<M: HilbertModel>(cfg: &RankOneRestriction<'_, M>) -> Result<DefectReport<M::Vector>> {
    let model = cfg.model;
    let adj = cfg.adjoint()?;
    let mut residuals = [0.0; 2];
    for (slot, (sign, n)) in [(I, &cfg.n_plus), (-I, &cfg.n_minus)].into_iter().enumerate() {
        // n_± = (±iφ) + 1·Sφ with ±iφ ∈ D(S).
        let f = model.scale(sign, &cfg.phi);
        let image = adj.apply(&f, &[ONE])?;
        let diff = model.lin_comb(&[(ONE, &image), (-sign, n)]);
        residuals[slot] = if model.is_zero(&diff) { 0.0 } else { model.norm(&diff)? };
    }
    Ok(DefectReport {
        n_plus: cfg.n_plus.clone(),
        n_minus: cfg.n_minus.clone(),
        residual_plus: residuals[0],
        residual_minus: residuals[1],
        norm_plus: model.norm(&cfg.n_plus)?,
        norm_minus: model.norm(&cfg.n_minus)?,
    })
}

/// `C_{φ,θ}(f + λ(n_+ + e^{iθ}n_−)) = Sf + iλ(n_+ − e^{iθ}n_−)` for `f ∈ D(C_φ)`.
pub fn extension_apply_theta<M: HilbertModel>(
    cfg: &RankOneRestriction<'_, M>,
    theta: ExtensionParameter,
    f: &M::Vector,
    lambda: Complex64,
) -> Result<M::Vector> {
    let model = cfg.model;
    if !model.in_dom_a(f) || !cfg.restriction()?.membership(f)?.0 {
        return Err(Error::domain("extension_apply_theta", "f is not in D(C_φ)"));
    }
    let sf = model.apply_a(f)?;
    Ok(model.lin_comb(&[
        (ONE, &sf),
        (I * lambda, &cfg.n_plus),
        (-I * lambda * theta.phase(), &cfg.n_minus),
    ]))
}

/// `(S + i)^{-1}ψ + (1 + e^{iθ})/(2i) ⟨(S + i)φ, ψ⟩ (S − i)φ`.
pub fn rank_one_resolvent<M: HilbertModel>(
    cfg: &RankOneRestriction<'_, M>,
    theta: ExtensionParameter,
    psi: &M::Vector,
) -> Result<M::Vector> {
    let model = cfg.model;
    let base = model.resolvent_at(Sign::Plus, psi)?;
    let k = theta.coefficient();
    if k == Complex64::new(0.0, 0.0) {
        return Ok(base);
    }
    let pairing = model.inner(&cfg.n_plus, psi)?;
    Ok(model.lin_comb(&[(ONE, &base), (k * pairing, &cfg.n_minus)]))
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTrip {
    /// `‖(C_{φ,θ} + i) r − ψ‖`, infinite when `r` could not be decomposed.
    pub residual: f64,
    pub lambda: Complex64,
    /// `|graph_inner(φ, f)|` of the `D(C_φ)` part.
    pub orthogonality: f64,
    pub diagnostics: Option<String>,
}

impl RoundTrip {
    fn failed(why: impl Into<String>) -> Self {
        RoundTrip {
            residual: f64::INFINITY,
            lambda: Complex64::new(0.0, 0.0),
            orthogonality: f64::INFINITY,
            diagnostics: Some(why.into()),
        }
    }
}

/// Applies `C_{φ,θ} + i` to the resolvent output and compares with `ψ`.
pub fn verify_resolvent_round_trip<M: HilbertModel>(
    cfg: &RankOneRestriction<'_, M>,
    theta: ExtensionParameter,
    psi: &M::Vector,
) -> Result<RoundTrip> {
    let model = cfg.model;
    let r = rank_one_resolvent(cfg, theta, psi)?;
    let dir = cfg.theta_direction(theta);
    let obs = model.domain_obstruction(&[r.clone(), dir.clone()])?;
    let col_r: Vec<Complex64> = obs.column(0).iter().copied().collect();
    let col_d = obs.columns(1, 1).clone_owned();
    let lambda = if max_abs(&col_d) > 1e-12 * (1.0 + max_abs(&obs)) {
        let (sol, residual) = least_squares(&col_d, &col_r, 1e-12);
        if residual > 1e-9 * (1.0 + max_abs(&obs)) || sol.len() != 1 {
            return Ok(RoundTrip::failed(format!("r leaves D(C_φ*) (obstruction residual {residual:e})")));
        }
        sol[0]
    } else {
        // The direction already lies in D(S): pick λ so that f is graph-orthogonal to φ.
        if !model.in_dom_a(&r) {
            return Ok(RoundTrip::failed("r is not in D(S) and the direction cannot repair it"));
        }
        let denom = model.graph_inner(&cfg.phi, &dir)?;
        if denom.norm() == 0.0 {
            return Ok(RoundTrip::failed("direction is graph-orthogonal to φ"));
        }
        model.graph_inner(&cfg.phi, &r)? / denom
    };
    let f = model.lin_comb(&[(ONE, &r), (-lambda, &dir)]);
    if !model.in_dom_a(&f) {
        return Ok(RoundTrip::failed("D(S) part still carries an obstruction"));
    }
    let (member, moments) = cfg.restriction()?.membership(&f)?;
    let orthogonality = moments.first().map_or(0.0, |m| m.norm());
    if !member {
        return Ok(RoundTrip {
            orthogonality,
            lambda,
            ..RoundTrip::failed(format!("f is not graph-orthogonal to φ ({orthogonality:e})"))
        });
    }
    let image = extension_apply_theta(cfg, theta, &f, lambda)?;
    let out = model.lin_comb(&[(ONE, &image), (I, &r), (-ONE, psi)]);
    let residual = if model.is_zero(&out) { 0.0 } else { model.norm(&out)? };
    Ok(RoundTrip {
        residual,
        lambda,
        orthogonality,
        diagnostics: None,
    })
}
