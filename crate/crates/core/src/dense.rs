//! Small dense complex linear algebra: Hermitian eigendecomposition,
//! Gram-based orthonormalization, rank-tolerant pseudo-inverses and norms of
//! projection differences computed from Gram matrices alone.
//!
//! All routines are deterministic and operate on immutable inputs.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Default relative rank tolerance for Gram matrices.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const HERMITIAN_TOL: f64 = 1e-12;

/// A square matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates `m` and exactly symmetrizes away sub-tolerance asymmetry.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotHermitian(format!(
                "{}x{} is not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        let scale = max_abs(&m).max(1.0);
        for i in 0..n {
            for j in i..n {
                let d = (m[(i, j)] - m[(j, i)].conj()).norm();
                if d > HERMITIAN_TOL * scale {
                    return Err(Error::NotHermitian(format!(
                        "entry ({i},{j}) differs from conj of ({j},{i}) by {d:e}"
                    )));
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    /// Builds a Hermitian matrix from the upper triangle produced by `f(i, j)`, `i <= j`.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                if i == j {
                    m[(i, i)] = Complex64::new(v.re, 0.0);
                } else {
                    m[(i, j)] = v;
                    m[(j, i)] = v.conj();
                }
            }
        }
        HermitianMatrix(m)
    }

    pub fn from_real_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_upper(n, |i, j| Complex64::new(f(i, j), 0.0))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMatrix::identity(n, n))
    }

    pub(crate) fn symmetrized(m: CMatrix) -> Self {
        let n = m.nrows();
        Self::from_upper(n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn submatrix(&self, idx: &[usize]) -> Result<Self> {
        let n = self.dim();
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, dim: n });
        }
        Ok(Self::from_upper(idx.len(), |a, b| self.0[(idx[a], idx[b])]))
    }

    /// Entrywise sum; both operands are Hermitian so the result is too.
    pub fn add(&self, other: &Self) -> Self {
        HermitianMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        HermitianMatrix(&self.0 - &other.0)
    }
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Eigenvalues in descending order with matching unitary eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn hermitian_eig(m: &HermitianMatrix) -> HermitianEigen {
    let n = m.dim();
    if n == 0 {
        return HermitianEigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        };
    }
    // Real symmetric input goes through the (four times cheaper) real solver.
    let is_real = m.0.iter().all(|z| z.im == 0.0);
    let (values, vectors): (Vec<f64>, CMatrix) = if is_real {
        let re = m.0.map(|z| z.re);
        let eig = SymmetricEigen::new(re);
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(|x| Complex64::new(x, 0.0)),
        )
    } else {
        let eig = SymmetricEigen::new(m.0.clone());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let mut sorted_vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = vectors.column(src).clone_owned();
        fix_phase(col.as_mut_slice());
        sorted_vectors.set_column(dst, &col);
    }
    HermitianEigen {
        values: sorted_values,
        vectors: sorted_vectors,
    }
}

/// Rotates `v` so that its first entry of (near) maximal modulus is real and positive.
pub fn fix_phase(v: &mut [Complex64]) {
    let max = v.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if max == 0.0 {
        return;
    }
    if let Some(pivot) = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-8)) {
        let phase = pivot.conj() / pivot.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Orthonormal directions of a spanning family, expressed as weights on the
/// family: the columns of `weights` give vectors `sum_i W[i,k] v_i` that are
/// orthonormal in the geometry whose Gram matrix was supplied.
#[derive(Debug, Clone)]
pub struct FrameCoefficients {
    pub weights: CMatrix,
    /// Retained eigenvalues of the unit-diagonal Gram, descending.
    pub eigenvalues: Vec<f64>,
    /// Largest unit-diagonal Gram eigenvalue (zero for an empty or zero family).
    pub largest: f64,
}

impl FrameCoefficients {
    pub fn n_vectors(&self) -> usize {
        self.weights.nrows()
    }

    pub fn rank(&self) -> usize {
        self.weights.ncols()
    }
}

/// `D G D` with `D = diag(g_ii^{-1/2})`, zero where the diagonal vanishes.
///
/// Rank decisions are made on this matrix so that a generator of tiny norm is not
/// mistaken for a dependent one.
fn equilibrate(g: &HermitianMatrix) -> Result<(HermitianMatrix, Vec<f64>)> {
    let n = g.dim();
    let threshold = 1e-10 * g.max_abs();
    let mut d = vec![0.0; n];
    for (i, di) in d.iter_mut().enumerate() {
        let x = g.0[(i, i)].re;
        if x > 0.0 {
            *di = 1.0 / x.sqrt();
            continue;
        }
        // A vanishing norm forces a vanishing row.
        let row = g.0.row(i).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if x < -threshold || row > threshold {
            return Err(Error::NotGram {
                min: x.min(-row),
                threshold: -threshold,
            });
        }
    }
    let m = CMatrix::from_fn(n, n, |i, j| g.0[(i, j)] * (d[i] * d[j]));
    Ok((HermitianMatrix::symmetrized(m), d))
}

pub fn orthonormalize_from_gram(g: &HermitianMatrix, rank_tol: f64) -> Result<FrameCoefficients> {
    let n = g.dim();
    let (g, d) = equilibrate(g)?;
    let g = &g;
    let eig = hermitian_eig(g);
    let largest = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    if let Some(&min) = eig.values.last() {
        let threshold = -1e-10 * g.max_abs();
        if min < threshold {
            return Err(Error::NotGram { min, threshold });
        }
    }
    let keep: Vec<usize> = (0..n)
        .filter(|&k| eig.values[k] > 0.0 && eig.values[k] > rank_tol * largest)
        .collect();
    let mut weights = CMatrix::zeros(n, keep.len());
    for (col, &k) in keep.iter().enumerate() {
        let s = eig.values[k].sqrt();
        for i in 0..n {
            weights[(i, col)] = eig.vectors[(i, k)] * (d[i] / s);
        }
    }
    Ok(FrameCoefficients {
        weights,
        eigenvalues: keep.iter().map(|&k| eig.values[k]).collect(),
        largest,
    })
}

/// Rank-tolerant Moore–Penrose inverse of a positive semidefinite matrix.
pub fn pseudo_inverse_psd(g: &HermitianMatrix, rank_tol: f64) -> Result<CMatrix> {
    let frame = orthonormalize_from_gram(g, rank_tol)?;
    Ok(&frame.weights * frame.weights.adjoint())
}

/// `||P_U - P_V||` for subspaces spanned by the index sets `idx_u` and `idx_v`
/// of a family with joint Gram matrix `g_joint`.
///
/// The difference of the two projections vanishes on the orthogonal complement
/// of the joint span, so the spectral norm is evaluated inside it.
pub fn projection_difference_norm(
    g_joint: &HermitianMatrix,
    idx_u: &[usize],
    idx_v: &[usize],
    rank_tol: f64,
) -> Result<f64> {
    let n = g_joint.dim();
    if let Some(&bad) = idx_u.iter().chain(idx_v).find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, dim: n });
    }
    // Projections ignore the scale of generators, so work with unit-diagonal Grams.
    let (g_joint, _) = equilibrate(g_joint)?;
    let g_joint = &g_joint;
    let eig = hermitian_eig(g_joint);
    let largest = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..n)
        .filter(|&k| eig.values[k] > 0.0 && eig.values[k] > rank_tol * largest)
        .collect();
    let r = keep.len();
    if r == 0 {
        return Ok(0.0);
    }
    // Coordinates of every generator in an orthonormal basis of the joint span.
    let mut coords = CMatrix::zeros(r, n);
    for (row, &k) in keep.iter().enumerate() {
        let s = eig.values[k].sqrt();
        for j in 0..n {
            coords[(row, j)] = eig.vectors[(j, k)].conj() * s;
        }
    }
    let projector = |idx: &[usize]| -> Result<CMatrix> {
        if idx.is_empty() {
            return Ok(CMatrix::zeros(r, r));
        }
        let sub = g_joint.submatrix(idx)?;
        let frame = orthonormalize_from_gram(&sub, rank_tol)?;
        let mut x = CMatrix::zeros(r, idx.len());
        for (c, &j) in idx.iter().enumerate() {
            x.set_column(c, &coords.column(j));
        }
        let q = x * frame.weights;
        Ok(&q * q.adjoint())
    };
    let diff = projector(idx_u)? - projector(idx_v)?;
    let diff = HermitianMatrix::symmetrized(diff);
    let eig = hermitian_eig(&diff);
    let norm = eig.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    Ok(norm.clamp(0.0, 1.0))
}

/// Singular values (descending) and full right singular vectors of `m`.
fn full_svd(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    // Pad wide matrices with zero rows so the thin SVD still yields all of V.
    let padded = if rows < cols {
        let mut p = CMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    let mut v = CMatrix::zeros(cols, order.len());
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..cols {
            v[(i, dst)] = v_t[(src, i)].conj();
        }
    }
    (order.iter().map(|&k| sv[k]).collect(), v)
}

/// Orthonormal basis (columns) of `{x : m x = 0}`; singular values at or below
/// `rel_tol * max(1, sigma_max)` count as zero.
pub fn nullspace(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let cols = m.ncols();
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return CMatrix::identity(cols, cols);
    }
    let (sv, v) = full_svd(m);
    let threshold = rel_tol * sv.first().copied().unwrap_or(0.0).max(1.0);
    let null: Vec<usize> = (0..cols).filter(|&k| sv[k] <= threshold).collect();
    let mut out = CMatrix::zeros(cols, null.len());
    for (c, &k) in null.iter().enumerate() {
        let mut col = v.column(k).clone_owned();
        fix_phase(col.as_mut_slice());
        out.set_column(c, &col);
    }
    out
}

/// Orthonormal basis of the row space of `m`, as conjugated right singular
/// vectors, keeping singular values above `abs_tol`.
pub fn row_space(m: &CMatrix, abs_tol: f64) -> Vec<Vec<Complex64>> {
    let (sv, v) = full_svd(m);
    (0..sv.len())
        .filter(|&k| sv[k] > abs_tol)
        .map(|k| {
            let mut row: Vec<Complex64> = v.column(k).iter().map(|z| z.conj()).collect();
            fix_phase(&mut row);
            row
        })
        .collect()
}

/// Minimum-norm least-squares solution of `a x = b` and the residual `||a x - b||`.
pub fn least_squares(a: &CMatrix, b: &[Complex64], rel_tol: f64) -> (Vec<Complex64>, f64) {
    let cols = a.ncols();
    if cols == 0 {
        let r = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        return (Vec::new(), r);
    }
    let gram = HermitianMatrix::symmetrized(a.adjoint() * a);
    let rhs = a.adjoint() * nalgebra::DVector::from_column_slice(b);
    // Normal equations are adequate here: the systems are tiny and well scaled.
    let pinv = pseudo_inverse_psd(&gram, rel_tol * rel_tol).unwrap_or_else(|_| CMatrix::zeros(cols, cols));
    let x = pinv * rhs;
    let r = a * &x - nalgebra::DVector::from_column_slice(b);
    (x.iter().copied().collect(), r.norm())
}
