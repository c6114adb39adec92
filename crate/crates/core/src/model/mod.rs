//! The operator pair `(A, A*)` both bundled models implement.

mod diagonal;
mod momentum;

pub use diagonal::DiagonalSequence;
pub use momentum::MomentumLine;

use std::fmt::Debug;

use num_complex::Complex64;
use serde::Serialize;

use crate::dense::CMatrix;
use crate::error::Result;

/// Which resolvent: `(A + i)^{-1}` or `(A - i)^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn shift(self) -> Complex64 {
        match self {
            Sign::Plus => Complex64::new(0.0, 1.0),
            Sign::Minus => Complex64::new(0.0, -1.0),
        }
    }
}

/// A densely defined closed operator `A` with adjoint `A*` on an exactly computable class of vectors.
///
/// `A` and `A*` stay separate slots even though both bundled models are self-adjoint.
pub trait HilbertModel: Sync {
    type Vector: Clone + Debug + Send + Sync + Serialize;

    fn name(&self) -> &str;
    fn is_self_adjoint(&self) -> bool;
    /// Whether `other` describes the same operator.
    fn same_operator(&self, other: &Self) -> bool;
    fn zero(&self) -> Self::Vector;
    fn lin_comb(&self, terms: &[(Complex64, &Self::Vector)]) -> Self::Vector;
    fn is_zero(&self, f: &Self::Vector) -> bool;

    /// Ambient inner product, antilinear in the first slot.
    fn inner(&self, f: &Self::Vector, g: &Self::Vector) -> Result<Complex64>;
    fn in_h(&self, f: &Self::Vector) -> bool;
    fn in_dom_a(&self, f: &Self::Vector) -> bool;
    fn in_dom_astar(&self, f: &Self::Vector) -> bool;
    /// `f ∈ D(A*)` and `A*f ∈ D(A)`.
    fn in_dom_aastar(&self, f: &Self::Vector) -> bool;
    fn apply_a(&self, f: &Self::Vector) -> Result<Self::Vector>;
    fn apply_astar(&self, f: &Self::Vector) -> Result<Self::Vector>;

    /// Spanning list of `ker A*`.
    fn kernel_astar_basis(&self) -> Vec<Self::Vector>;
    /// `g` with `g + AA*g = f`.
    fn solve_one_plus_aastar(&self, f: &Self::Vector) -> Result<Self::Vector>;
    /// `(A ± i)^{-1} f`.
    fn resolvent_at(&self, sign: Sign, f: &Self::Vector) -> Result<Self::Vector>;

    /// A matrix `O` with one column per input vector such that
    /// `sum_i c_i vs[i] ∈ D(A)` exactly when `O c = 0`. Every input must lie in H.
    fn domain_obstruction(&self, vs: &[Self::Vector]) -> Result<CMatrix>;
    /// Fixed dictionary of vectors in `D(A)`.
    fn domain_probes(&self) -> Vec<Self::Vector>;
    /// Fixed dictionary of vectors in `D(A*)`.
    fn adjoint_domain_probes(&self) -> Vec<Self::Vector>;

    /// `⟨f, g⟩ + ⟨A*f, A*g⟩`.
    fn graph_inner(&self, f: &Self::Vector, g: &Self::Vector) -> Result<Complex64> {
        let af = self.apply_astar(f)?;
        let ag = self.apply_astar(g)?;
        Ok(self.inner(f, g)? + self.inner(&af, &ag)?)
    }

    fn norm(&self, f: &Self::Vector) -> Result<f64> {
        Ok(self.inner(f, f)?.re.max(0.0).sqrt())
    }

    fn graph_norm(&self, f: &Self::Vector) -> Result<f64> {
        Ok(self.graph_inner(f, f)?.re.max(0.0).sqrt())
    }

    fn sub(&self, f: &Self::Vector, g: &Self::Vector) -> Self::Vector {
        let one = Complex64::new(1.0, 0.0);
        self.lin_comb(&[(one, f), (-one, g)])
    }

    fn scale(&self, c: Complex64, f: &Self::Vector) -> Self::Vector {
        self.lin_comb(&[(c, f)])
    }
}
