//! Square-summable sequences with a finite part plus symbolic tails
//! `c n^{-s} rho^n`, diagonal polynomial symbols, and certified tail sums.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute accuracy of certified sums.
pub const DEFAULT_EPS: f64 = 1e-10;
/// Tails start at this index unless a vector says otherwise.
pub const DEFAULT_TAIL_START: u64 = 2;
/// Largest index a certified sum or resolvent may push its cut to.
pub const MAX_CUT: u64 = 10_000_000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const POWER_TOL: f64 = 1e-12;
const RATIO_TOL: f64 = 1e-13;
const TAIL_DROP_TOL: f64 = 1e-15;

/// `coeff * n^{-power} * ratio^n` for every `n >= tail_start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub coeff: Complex64,
    pub power: f64,
    pub ratio: Complex64,
}

impl Tail {
    pub fn at(&self, n: u64) -> Complex64 {
        let nf = n as f64;
        let r = if self.ratio == ONE { ONE } else { self.ratio.powf(nf) };
        self.coeff * nf.powf(-self.power) * r
    }

    /// Square-summability of the tail by itself.
    pub fn in_l2(&self) -> bool {
        let r = self.ratio.norm();
        r < 1.0 || (r == 1.0 && 2.0 * self.power > 1.0)
    }

    fn same_class(&self, other: &Tail) -> bool {
        (self.power - other.power).abs() <= POWER_TOL && (self.ratio - other.ratio).norm() <= RATIO_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqVector {
    finite: BTreeMap<u64, Complex64>,
    tail_start: u64,
    tails: Vec<Tail>,
}

impl Default for SeqVector {
    fn default() -> Self {
        Self::zero()
    }
}

impl SeqVector {
    pub fn zero() -> Self {
        SeqVector {
            finite: BTreeMap::new(),
            tail_start: DEFAULT_TAIL_START,
            tails: Vec::new(),
        }
    }

    /// Standard basis vector `e_k`, `k >= 1`.
    pub fn basis(k: u64) -> Result<Self> {
        Self::from_finite([(k, ONE)])
    }

    pub fn from_finite(entries: impl IntoIterator<Item = (u64, Complex64)>) -> Result<Self> {
        let mut finite = BTreeMap::new();
        for (k, v) in entries {
            if k == 0 {
                return Err(Error::InvalidParameter("sequence indices start at 1".into()));
            }
            *finite.entry(k).or_insert(ZERO) += v;
        }
        finite.retain(|_, v| *v != ZERO);
        let top = finite.keys().next_back().map_or(0, |k| k + 1);
        Ok(SeqVector {
            finite,
            tail_start: top.max(DEFAULT_TAIL_START),
            tails: Vec::new(),
        })
    }

    /// `c n^{-s} rho^n` for `n >= start`, zero before.
    pub fn tail_from(coeff: Complex64, power: f64, ratio: Complex64, start: u64) -> Result<Self> {
        if start == 0 {
            return Err(Error::InvalidParameter("sequence indices start at 1".into()));
        }
        if ratio.norm() > 1.0 || !power.is_finite() {
            return Err(Error::InvalidParameter(format!("tail ratio {ratio} has modulus above 1")));
        }
        let tail = Tail { coeff, power, ratio };
        let tail_start = start.max(DEFAULT_TAIL_START);
        let finite = (start..tail_start).map(|n| (n, tail.at(n))).collect();
        Ok(Self::canonical(finite, tail_start, vec![tail]))
    }

    /// `c n^{-s}` for all `n >= 1`.
    pub fn power_tail(coeff: Complex64, power: f64) -> Self {
        Self::tail_from(coeff, power, ONE, 1).expect("valid power tail")
    }

    /// `c rho^n` for all `n >= 1`.
    pub fn geometric(coeff: Complex64, ratio: Complex64) -> Result<Self> {
        Self::tail_from(coeff, 0.0, ratio, 1)
    }

    pub fn finite_part(&self) -> &BTreeMap<u64, Complex64> {
        &self.finite
    }

    pub fn tails(&self) -> &[Tail] {
        &self.tails
    }

    pub fn tail_start(&self) -> u64 {
        self.tail_start
    }

    pub fn is_zero(&self) -> bool {
        self.finite.is_empty() && self.tails.is_empty()
    }

    /// Exact coordinate `f_n`.
    pub fn coordinate(&self, n: u64) -> Complex64 {
        if n < self.tail_start {
            self.finite.get(&n).copied().unwrap_or(ZERO)
        } else {
            self.tails.iter().map(|t| t.at(n)).sum()
        }
    }

    pub fn in_l2(&self) -> bool {
        self.tails.iter().all(Tail::in_l2)
    }

    /// `‖finite‖_1 + sum |c|`: a crude magnitude used to scale tolerances.
    pub fn magnitude(&self) -> f64 {
        self.finite.values().map(|v| v.norm()).sum::<f64>() + self.tails.iter().map(|t| t.coeff.norm()).sum::<f64>()
    }

    /// Moves the coordinates below `start` into the finite part.
    pub fn raise_start(&self, start: u64) -> Self {
        if start <= self.tail_start {
            return self.clone();
        }
        let mut finite = self.finite.clone();
        if !self.tails.is_empty() {
            for n in self.tail_start..start {
                let v: Complex64 = self.tails.iter().map(|t| t.at(n)).sum();
                if v != ZERO {
                    finite.insert(n, v);
                }
            }
        }
        SeqVector {
            finite,
            tail_start: start,
            tails: self.tails.clone(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let finite = self.finite.iter().map(|(&k, &v)| (k, v * c)).collect();
        let tails = self
            .tails
            .iter()
            .map(|t| Tail { coeff: t.coeff * c, ..*t })
            .collect();
        Self::canonical(finite, self.tail_start, tails)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::linear_combination(&[(ONE, self), (ONE, other)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::linear_combination(&[(ONE, self), (-ONE, other)])
    }

    pub fn linear_combination(terms: &[(Complex64, &Self)]) -> Self {
        let start = terms
            .iter()
            .map(|(_, v)| v.tail_start)
            .max()
            .unwrap_or(DEFAULT_TAIL_START);
        let mut finite: BTreeMap<u64, Complex64> = BTreeMap::new();
        let mut tails = Vec::new();
        for (c, v) in terms {
            if *c == ZERO {
                continue;
            }
            let v = v.raise_start(start);
            for (k, x) in v.finite {
                *finite.entry(k).or_insert(ZERO) += c * x;
            }
            tails.extend(v.tails.iter().map(|t| Tail { coeff: t.coeff * c, ..*t }));
        }
        Self::canonical(finite, start, tails)
    }

    /// Pointwise multiplication by a polynomial symbol.
    pub fn apply_symbol(&self, sym: &Polynomial) -> Self {
        let finite = self
            .finite
            .iter()
            .map(|(&k, &v)| (k, v * sym.eval(k as f64)))
            .collect();
        let mut tails = Vec::with_capacity(self.tails.len() * sym.coeffs.len());
        for t in &self.tails {
            for (d, &q) in sym.coeffs.iter().enumerate() {
                if q != ZERO {
                    tails.push(Tail {
                        coeff: t.coeff * q,
                        power: t.power - d as f64,
                        ratio: t.ratio,
                    });
                }
            }
        }
        Self::canonical(finite, self.tail_start, tails)
    }

    /// Tail classes `(power, ratio)` of `self` that are not square summable,
    /// with their coefficients.
    pub fn non_l2_tails(&self) -> Vec<Tail> {
        self.tails.iter().filter(|t| !t.in_l2()).copied().collect()
    }

    fn canonical(mut finite: BTreeMap<u64, Complex64>, tail_start: u64, tails: Vec<Tail>) -> Self {
        let mut merged: Vec<Tail> = Vec::with_capacity(tails.len());
        for t in tails {
            match merged.iter_mut().find(|s| s.same_class(&t)) {
                Some(s) => s.coeff += t.coeff,
                None => merged.push(t),
            }
        }
        let max = merged.iter().fold(0.0f64, |a, t| a.max(t.coeff.norm()));
        merged.retain(|t| t.coeff != ZERO && t.coeff.norm() > TAIL_DROP_TOL * max);
        merged.sort_by(|a, b| {
            a.power
                .total_cmp(&b.power)
                .then(a.ratio.re.total_cmp(&b.ratio.re))
                .then(a.ratio.im.total_cmp(&b.ratio.im))
        });
        finite.retain(|_, v| *v != ZERO);
        SeqVector {
            finite,
            tail_start,
            tails: merged,
        }
    }
}

/// A polynomial `q(n) = sum_d coeffs[d] n^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// `a_n = n`.
    pub fn identity() -> Self {
        Self::real(&[0.0, 1.0])
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }

    pub fn eval(&self, n: f64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * n + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let at = |p: &Self, d: usize| p.coeffs.get(d).copied().unwrap_or(ZERO);
        Self::new((0..len).map(|d| at(self, d) + at(other, d)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::new(Vec::new());
        }
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.conj()).collect())
    }

    pub fn shift(&self, c: Complex64) -> Self {
        self.add(&Self::new(vec![c]))
    }

    /// Cauchy bound on the modulus of every root.
    pub fn root_bound(&self) -> f64 {
        match self.degree() {
            None | Some(0) => 0.0,
            Some(d) => {
                let lead = self.coeffs[d].norm();
                1.0 + self.coeffs[..d].iter().fold(0.0f64, |a, c| a.max(c.norm() / lead))
            }
        }
    }

    /// Positive integers `n` with `q(n) = 0`.
    pub fn integer_roots(&self) -> Vec<u64> {
        if self.degree().unwrap_or(0) == 0 {
            return Vec::new();
        }
        let bound = self.root_bound().floor() as u64;
        (1..=bound)
            .filter(|&n| {
                let nf = n as f64;
                let scale: f64 = self
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(d, c)| c.norm() * nf.powi(d as i32))
                    .sum();
                self.eval(nf).norm() <= 1e-12 * scale
            })
            .collect()
    }
}

impl std::fmt::Display for Polynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (d, c) in self.coeffs.iter().enumerate().rev() {
            if *c == ZERO {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let c = if c.im == 0.0 { format!("{}", c.re) } else { format!("({c})") };
            match d {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}n")?,
                _ => write!(f, "{c}n^{d}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Neumaier-compensated complex accumulator that also tracks `sum |x|`.
#[derive(Default)]
struct Accumulator {
    sum: Complex64,
    comp: Complex64,
    abs: f64,
}

impl Accumulator {
    fn add(&mut self, x: Complex64) {
        self.abs += x.norm();
        let t = self.sum + x;
        let fix = |s: f64, x: f64, t: f64| if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        self.comp += Complex64::new(fix(self.sum.re, x.re, t.re), fix(self.sum.im, x.im, t.im));
        self.sum = t;
    }

    fn value(&self) -> Complex64 {
        self.sum + self.comp
    }

    fn rounding(&self) -> f64 {
        4.0 * f64::EPSILON * self.abs
    }
}

const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Euler–Maclaurin correction terms of `sum_{n>=m} n^{-sigma}` beyond the integral and
/// half-endpoint terms: `B_{2k}/(2k)! (sigma)_{2k-1} m^{-sigma-2k+1}` for `k = 1..=10`.
fn euler_maclaurin_terms(sigma: f64, m: f64) -> [f64; 10] {
    let mut out = [0.0; 10];
    let mut rising = sigma; // sigma (sigma+1) ... (sigma+2k-2)
    let mut fact = 2.0; // (2k)!
    for k in 1..=10usize {
        if k > 1 {
            let j = 2.0 * k as f64;
            rising *= (sigma + j - 3.0) * (sigma + j - 2.0);
            fact *= (j - 1.0) * j;
        }
        out[k - 1] = BERNOULLI[k - 1] / fact * rising * m.powf(-sigma - 2.0 * k as f64 + 1.0);
    }
    out
}

/// Certified `sum_{n >= start} n^{-sigma} r^n` with `|r| <= 1`.
///
/// Returns the value and a bound on its absolute error, which is at most `eps`
/// unless the accuracy is out of reach (then an error carrying the best bound).
pub fn certified_power_sum(sigma: f64, r: Complex64, start: u64, eps: f64) -> Result<(Complex64, f64)> {
    let start = start.max(1);
    let modulus = r.norm();
    if modulus > 1.0 + 1e-15 {
        return Err(Error::Divergent(format!("ratio {r} has modulus above 1")));
    }
    if (r - ONE).norm() <= 1e-15 {
        return zeta_tail(sigma, start, eps);
    }
    if modulus < 1.0 - 1e-15 {
        return geometric_tail(sigma, r, start, eps);
    }
    dirichlet_tail(sigma, r, start, eps)
}

fn term(sigma: f64, r: Complex64, n: u64) -> Complex64 {
    let nf = n as f64;
    nf.powf(-sigma) * r.powf(nf)
}

fn zeta_tail(sigma: f64, start: u64, eps: f64) -> Result<(Complex64, f64)> {
    if sigma <= 1.0 {
        return Err(Error::Divergent(format!("sum of n^-{sigma} diverges")));
    }
    let mut m = start.max(20);
    loop {
        let mut acc = Accumulator::default();
        for n in start..m {
            acc.add(Complex64::new((n as f64).powf(-sigma), 0.0));
        }
        let mf = m as f64;
        acc.add(Complex64::new(mf.powf(1.0 - sigma) / (sigma - 1.0), 0.0));
        acc.add(Complex64::new(0.5 * mf.powf(-sigma), 0.0));
        let corr = euler_maclaurin_terms(sigma, mf);
        // For completely monotone summands the remainder is bounded by the first omitted term.
        let mut bound = f64::INFINITY;
        for k in 0..corr.len() - 1 {
            acc.add(Complex64::new(corr[k], 0.0));
            let next = corr[k + 1].abs();
            if next + acc.rounding() <= eps {
                bound = next;
                break;
            }
        }
        let total = bound + acc.rounding();
        if total <= eps {
            return Ok((acc.value(), total));
        }
        if m >= MAX_CUT {
            let achieved = corr[corr.len() - 1].abs() + acc.rounding();
            return Err(Error::AccuracyUnreachable { requested: eps, achieved });
        }
        m = (m * 4).min(MAX_CUT);
    }
}

/// Bound on `sum_{n >= t} n^{-sigma} q^n` for `0 <= q < 1` via a ratio test, or
/// infinity when the ratio test fails at `t`.
fn geometric_majorant(sigma: f64, q: f64, t: u64) -> f64 {
    let tf = t as f64;
    let growth = if sigma < 0.0 { (1.0 + 1.0 / tf).powf(-sigma) } else { 1.0 };
    let ratio = q * growth;
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    tf.powf(-sigma) * q.powf(tf) / (1.0 - ratio)
}

fn geometric_tail(sigma: f64, r: Complex64, start: u64, eps: f64) -> Result<(Complex64, f64)> {
    let q = r.norm();
    let mut acc = Accumulator::default();
    let mut n = start;
    loop {
        let rest = geometric_majorant(sigma, q, n);
        if rest + acc.rounding() <= eps {
            return Ok((acc.value(), rest + acc.rounding()));
        }
        if n - start >= MAX_CUT {
            return Err(Error::AccuracyUnreachable {
                requested: eps,
                achieved: rest + acc.rounding(),
            });
        }
        acc.add(term(sigma, r, n));
        n += 1;
    }
}

fn dirichlet_tail(sigma: f64, r: Complex64, start: u64, eps: f64) -> Result<(Complex64, f64)> {
    if sigma <= 0.0 {
        return Err(Error::Divergent(format!("unimodular ratio with n^-{sigma}")));
    }
    // Abel summation: partial sums of r^n are bounded by 2/|1-r|.
    let c = 2.0 / (ONE - r).norm();
    let needed = (c / (0.5 * eps)).powf(1.0 / sigma).ceil();
    if needed > (start + MAX_CUT) as f64 {
        let achieved = c * ((start + MAX_CUT) as f64).powf(-sigma);
        return Err(Error::AccuracyUnreachable { requested: eps, achieved });
    }
    let m = (needed as u64).max(start);
    let mut acc = Accumulator::default();
    for n in start..m {
        acc.add(term(sigma, r, n));
    }
    let bound = c * (m as f64).powf(-sigma) + acc.rounding();
    if bound > eps {
        return Err(Error::AccuracyUnreachable { requested: eps, achieved: bound });
    }
    Ok((acc.value(), bound))
}

/// Certified `⟨f, g⟩ = sum conj(f_n) g_n` with absolute error at most `eps`.
pub fn seq_inner_product(f: &SeqVector, g: &SeqVector, eps: f64) -> Result<(Complex64, f64)> {
    if !f.in_l2() || !g.in_l2() {
        return Err(Error::NotSquareIntegrable("sequence is not in l^2".into()));
    }
    let start = f.tail_start.max(g.tail_start);
    let f = f.raise_start(start);
    let g = g.raise_start(start);
    let mut acc = Accumulator::default();
    for (k, a) in &f.finite {
        if let Some(b) = g.finite.get(k) {
            acc.add(a.conj() * b);
        }
    }
    let pairs = (f.tails.len() * g.tails.len()).max(1) as f64;
    let mut bound = 0.0;
    for s in &f.tails {
        for t in &g.tails {
            let c = s.coeff.conj() * t.coeff;
            let budget = (eps - acc.rounding()).max(0.0) / pairs / c.norm();
            let (v, b) = certified_power_sum(s.power + t.power, s.ratio.conj() * t.ratio, start, budget)?;
            acc.add(c * v);
            bound += c.norm() * b;
        }
    }
    Ok((acc.value(), bound + acc.rounding()))
}

/// Certified squared norm.
pub fn seq_norm_sq(f: &SeqVector, eps: f64) -> Result<(f64, f64)> {
    let (v, b) = seq_inner_product(f, f, eps)?;
    Ok((v.re.max(0.0), b))
}

/// `f_n / q(n)` as a certified symbolic approximant plus exact coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSeq {
    pub approx: SeqVector,
    /// Bound on the l^2 norm of `exact - approx`.
    pub error_bound: f64,
    source: SeqVector,
    denom: Polynomial,
}

impl ResolvedSeq {
    /// Exact coordinate of the quotient.
    pub fn coordinate(&self, n: u64) -> Complex64 {
        self.source.coordinate(n) / self.denom.eval(n as f64)
    }
}

/// Bound on `sum_{j > jmax} C(j+d-1, d-1) x^j` for `0 <= x < 1`.
fn expansion_remainder(d: usize, x: f64, jmax: usize) -> f64 {
    let j = jmax + 1;
    let mut first = x.powi(j as i32);
    for i in 1..d {
        first *= (j + i) as f64 / i as f64;
    }
    let ratio = x * (j + d) as f64 / (j + 1) as f64;
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    first / (1.0 - ratio)
}

/// `f / q` with `‖exact - approx‖ <= eps`.
///
/// Finite coordinates are divided exactly. Past a cut `T` well outside the root
/// disc of `q`, `1/q(n)` is expanded in powers of `1/n` and every tail becomes a
/// finite sum of tails; the expansion remainder is bounded through the Cauchy root bound.
pub fn divide_by_poly(f: &SeqVector, q: &Polynomial, eps: f64) -> Result<ResolvedSeq> {
    let d = q
        .degree()
        .ok_or_else(|| Error::InvalidParameter("division by the zero symbol".into()))?;
    let finite_div = |v: &SeqVector| -> Result<BTreeMap<u64, Complex64>> {
        v.finite
            .iter()
            .map(|(&k, &x)| {
                let den = q.eval(k as f64);
                if den == ZERO {
                    Err(Error::InvalidParameter(format!("symbol vanishes at n = {k}")))
                } else {
                    Ok((k, x / den))
                }
            })
            .collect()
    };
    let lead = q.coeffs[d];
    if d == 0 || f.tails.is_empty() {
                let tails = if d == 0 {
            f.tails.iter().map(|t| Tail { coeff: t.coeff / lead, ..*t }).collect()
        } else {
            Vec::new()
        };
        return Ok(ResolvedSeq {
            approx: SeqVector::canonical(finite_div(f)?, f.tail_start, tails),
            error_bound: 0.0,
            source: f.clone(),
            denom: q.clone(),
        });
    }
    let big_r = q.root_bound();
    let u: Vec<Complex64> = (1..=d).map(|i| q.coeffs[d - i] / lead).collect();
    let mut cut = f.tail_start.max((16.0 * big_r).ceil() as u64);
    loop {
        let x = big_r / cut as f64;
        // l^2 size of each tail times n^{-d} beyond the cut.
        let sizes: Vec<f64> = f
            .tails
            .iter()
            .map(|t| {
                let s2 = 2.0 * (t.power + d as f64);
                let q2 = t.ratio.norm_sqr();
                let sum = if q2 >= 1.0 {
                    let cf = cut as f64;
                    if s2 <= 1.0 {
                        f64::INFINITY
                    } else {
                        cf.powf(-s2) + cf.powf(1.0 - s2) / (s2 - 1.0)
                    }
                } else {
                    geometric_majorant(s2, q2, cut)
                };
                t.coeff.norm() / lead.norm() * sum.sqrt()
            })
            .collect();
        let total: f64 = sizes.iter().sum();
        let jmax = (0..=48).find(|&j| total * expansion_remainder(d, x, j) <= eps);
        if let Some(jmax) = jmax {
            let mut b = vec![ONE];
            for j in 1..=jmax {
                let mut v = ZERO;
                for i in 1..=j.min(d) {
                    v -= u[i - 1] * b[j - i];
                }
                b.push(v);
            }
            let raised = f.raise_start(cut);
            let mut tails = Vec::with_capacity(raised.tails.len() * (jmax + 1));
            for t in &raised.tails {
                for (j, bj) in b.iter().enumerate() {
                    if *bj != ZERO {
                        tails.push(Tail {
                            coeff: t.coeff * bj / lead,
                            power: t.power + (d + j) as f64,
                            ratio: t.ratio,
                        });
                    }
                }
            }
            let error_bound = total * expansion_remainder(d, x, jmax);
            return Ok(ResolvedSeq {
                approx: SeqVector::canonical(finite_div(&raised)?, cut, tails),
                error_bound,
                source: f.clone(),
                denom: q.clone(),
            });
        }
        if cut >= MAX_CUT / 4 {
            return Err(Error::AccuracyUnreachable {
                requested: eps,
                achieved: total * expansion_remainder(d, x, 48),
            });
        }
        cut *= 4;
    }
}
