//! Exact algebra of piecewise exponential-polynomial functions on the real line.
//!
//! A [`PiecewiseExpPoly`] is described by strictly increasing breakpoints
//! `b_0 < ... < b_{m-1}` and `m + 1` pieces. Each piece is a finite sum of terms
//! `c (x - x0)^p e^{a (x - x0)}`, written in local coordinates around the piece
//! anchor `x0`: the left breakpoint of the piece, the first breakpoint for the
//! leftmost piece, and `0` when there are no breakpoints at all. Local anchors
//! keep coefficients of order one no matter how far a piece sits from the origin.
//!
//! Every integral is evaluated from closed-form antiderivatives of
//! `u^p e^{a u}`. The class is closed under sums, products, translation,
//! differentiation, multiplication by `e^{r x}` and integration from either
//! end of the line, which is enough to express convolution with `e^{-|x|}/2`
//! and the resolvents of `i d/dx`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Breakpoints closer than this are identified.
pub const BREAKPOINT_TOL: f64 = 1e-13;
/// Terms whose magnitude on their piece falls below this fraction of the
/// largest term in the function are dropped.
pub const TERM_DROP_TOL: f64 = 1e-14;
const RATE_MERGE_TOL: f64 = 1e-13;
const JUMP_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// `coeff * u^power * e^{rate u}` in the local coordinate `u = x - anchor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: Complex64,
    pub power: u32,
    pub rate: Complex64,
}

impl Term {
    pub fn new(coeff: Complex64, power: u32, rate: Complex64) -> Self {
        Term { coeff, power, rate }
    }

    pub fn constant(coeff: Complex64) -> Self {
        Term::new(coeff, 0, ZERO)
    }

    pub fn exp(coeff: f64, rate: f64) -> Self {
        Term::new(Complex64::new(coeff, 0.0), 0, Complex64::new(rate, 0.0))
    }

    fn eval(&self, u: f64) -> Complex64 {
        let poly = if self.power == 0 { 1.0 } else { u.powi(self.power as i32) };
        self.coeff * poly * (self.rate * u).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Span {
    Whole,
    /// `u` in `(-inf, 0]`.
    Left,
    /// `u` in `[0, len]`.
    Bounded(f64),
    /// `u` in `[0, inf)`.
    Right,
}

/// Locations and sizes (right limit minus left limit) of discontinuities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JumpReport {
    pub locations: Vec<f64>,
    pub jump_values: Vec<Complex64>,
}

impl JumpReport {
    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseExpPoly {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<Term>>,
}

impl Default for PiecewiseExpPoly {
    fn default() -> Self {
        Self::zero()
    }
}

impl PiecewiseExpPoly {
    pub fn zero() -> Self {
        PiecewiseExpPoly {
            breakpoints: Vec::new(),
            pieces: vec![Vec::new()],
        }
    }

    /// Builds a function from raw parts; `pieces.len()` must equal `breakpoints.len() + 1`.
    pub fn from_parts(breakpoints: Vec<f64>, pieces: Vec<Vec<Term>>) -> Result<Self> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                pieces.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter("non-finite breakpoint".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] - w[0] <= BREAKPOINT_TOL) {
            return Err(Error::InvalidParameter(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self::canonical(breakpoints, pieces))
    }

    /// `phi_lambda(x) = e^{-|x - lambda|} / 2`.
    pub fn kernel(lambda: f64) -> Self {
        Self::kernel_combination(&[(lambda, ONE)])
    }

    /// `sum_j w_j phi_{c_j}`, assembled piecewise with prefix sums.
    pub fn kernel_combination(centers: &[(f64, Complex64)]) -> Self {
        let mut sorted: Vec<(f64, Complex64)> = centers.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, Complex64)> = Vec::with_capacity(sorted.len());
        for (c, w) in sorted {
            match merged.last_mut() {
                Some(last) if (c - last.0).abs() <= BREAKPOINT_TOL => last.1 += w,
                _ => merged.push((c, w)),
            }
        }
        if merged.is_empty() {
            return Self::zero();
        }
        let bps: Vec<f64> = merged.iter().map(|m| m.0).collect();
        let m = bps.len();
        let mut pieces = Vec::with_capacity(m + 1);
        // Leftmost piece, anchor b_0: every kernel is rising, e^{x - c_j}.
        let rising: Complex64 = merged.iter().map(|&(c, w)| w * 0.5 * (bps[0] - c).exp()).sum();
        pieces.push(vec![Term::new(rising, 0, ONE)]);
        // Piece k in [b_{k-1}, b_k], anchor b_{k-1}.
        for k in 1..=m {
            let a = bps[k - 1];
            let falling: Complex64 = merged[..k].iter().map(|&(c, w)| w * 0.5 * (c - a).exp()).sum();
            let rising: Complex64 = merged[k..].iter().map(|&(c, w)| w * 0.5 * (a - c).exp()).sum();
            let mut terms = vec![Term::new(falling, 0, -ONE)];
            if k < m {
                terms.push(Term::new(rising, 0, ONE));
            }
            pieces.push(terms);
        }
        Self::canonical(bps, pieces)
    }

    /// `sgn(x - lambda) e^{-|x - lambda|} / 2` with `sgn(0) = 1`.
    pub fn sign_kernel(lambda: f64) -> Self {
        Self::canonical(
            vec![lambda],
            vec![vec![Term::exp(-0.5, 1.0)], vec![Term::exp(0.5, -1.0)]],
        )
    }

    /// Indicator of `[a, b]`.
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        if !(b - a > BREAKPOINT_TOL) {
            return Err(Error::InvalidParameter(format!("empty interval [{a}, {b}]")));
        }
        Ok(Self::canonical(
            vec![a, b],
            vec![Vec::new(), vec![Term::constant(ONE)], Vec::new()],
        ))
    }

    /// `(x - t) e^{-|x - t|}`: an H^1 function vanishing at `t`.
    pub fn odd_bump(t: f64) -> Self {
        Self::canonical(
            vec![t],
            vec![
                vec![Term::new(ONE, 1, ONE)],
                vec![Term::new(ONE, 1, -ONE)],
            ],
        )
    }

    /// `e^{rate (x - t)}` for `x < t` and `e^{-conj-free rate (x - t)}` mirrored for `x >= t`,
    /// i.e. `e^{-rate |x - t|}` for complex `rate` with positive real part.
    pub fn two_sided_exp(t: f64, rate: Complex64) -> Self {
        Self::canonical(
            vec![t],
            vec![vec![Term::new(ONE, 0, rate)], vec![Term::new(ONE, 0, -rate)]],
        )
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Terms of every piece, in local coordinates.
    pub fn pieces(&self) -> &[Vec<Term>] {
        &self.pieces
    }

    pub fn anchor(&self, k: usize) -> f64 {
        anchor_of(&self.breakpoints, k)
    }

    fn span(&self, k: usize) -> Span {
        span_of(&self.breakpoints, k)
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.is_empty())
    }

    fn piece_index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    /// Point value; right-continuous at breakpoints.
    pub fn eval(&self, x: f64) -> Complex64 {
        let k = self.piece_index(x);
        eval_terms(&self.pieces[k], x - self.anchor(k))
    }

    /// Left and right limits at breakpoint `k`.
    fn limits(&self, k: usize) -> (Complex64, Complex64) {
        let b = self.breakpoints[k];
        let left = eval_terms(&self.pieces[k], b - self.anchor(k));
        let right = eval_terms(&self.pieces[k + 1], 0.0);
        (left, right)
    }

    /// Right limit minus left limit at `x` (zero away from breakpoints).
    pub fn jump_at(&self, x: f64) -> Complex64 {
        let k = self.breakpoints.partition_point(|&b| b < x - BREAKPOINT_TOL);
        match self.breakpoints.get(k) {
            Some(&b) if (b - x).abs() <= BREAKPOINT_TOL => {
                let (l, r) = self.limits(k);
                r - l
            }
            _ => ZERO,
        }
    }

    pub fn jumps(&self) -> JumpReport {
        let mut report = JumpReport::default();
        for k in 0..self.breakpoints.len() {
            let (l, r) = self.limits(k);
            let j = r - l;
            if j.norm() > JUMP_TOL * l.norm().max(r.norm()).max(1.0) {
                report.locations.push(self.breakpoints[k]);
                report.jump_values.push(j);
            }
        }
        report
    }

    pub fn is_continuous(&self) -> bool {
        self.jumps().is_empty()
    }

    /// Square integrability: decaying terms on both unbounded pieces.
    pub fn is_l2(&self) -> bool {
        (0..self.pieces.len()).all(|k| {
            let span = self.span(k);
            self.pieces[k].iter().all(|t| decays_on(span, t.rate))
        })
    }

    /// Membership in the Sobolev space H^1(R).
    pub fn in_h1(&self) -> bool {
        if !self.is_l2() || !self.is_continuous() {
            return false;
        }
        self.differentiate().0.is_l2()
    }

    /// Membership in H^2(R).
    pub fn in_h2(&self) -> bool {
        self.in_h1() && self.differentiate().0.in_h1()
    }

    /// Classical derivative on every open piece, plus the jumps of `self`.
    pub fn differentiate(&self) -> (Self, JumpReport) {
        let pieces = self
            .pieces
            .iter()
            .map(|terms| {
                let mut out = Vec::with_capacity(terms.len() * 2);
                for t in terms {
                    if t.power > 0 {
                        out.push(Term::new(t.coeff * t.power as f64, t.power - 1, t.rate));
                    }
                    if t.rate != ZERO {
                        out.push(Term::new(t.coeff * t.rate, t.power, t.rate));
                    }
                }
                out
            })
            .collect();
        (
            Self::canonical(self.breakpoints.clone(), pieces),
            self.jumps(),
        )
    }

    pub fn derivative(&self) -> Self {
        self.differentiate().0
    }

    pub fn scale(&self, c: Complex64) -> Self {
        if c == ZERO {
            return Self::zero();
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| p.iter().map(|t| Term::new(t.coeff * c, t.power, t.rate)).collect())
            .collect();
        Self::canonical(self.breakpoints.clone(), pieces)
    }

    pub fn conj(&self) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| p.iter().map(|t| Term::new(t.coeff.conj(), t.power, t.rate.conj())).collect())
            .collect();
        PiecewiseExpPoly {
            breakpoints: self.breakpoints.clone(),
            pieces,
        }
    }

    /// `x -> f(x - t)`.
    pub fn translate(&self, t: f64) -> Self {
        if self.breakpoints.is_empty() {
            let terms = reanchor(&self.pieces[0], -t);
            return Self::canonical(Vec::new(), vec![terms]);
        }
        PiecewiseExpPoly {
            breakpoints: self.breakpoints.iter().map(|b| b + t).collect(),
            pieces: self.pieces.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let bps = merge_breakpoints(&self.breakpoints, &other.breakpoints);
        let a = self.refine(&bps);
        let b = other.refine(&bps);
        let pieces = a
            .into_iter()
            .zip(b)
            .map(|(mut x, y)| {
                x.extend(y);
                x
            })
            .collect();
        Self::canonical(bps, pieces)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    /// `sum_k c_k f_k` over a common refinement.
    pub fn linear_combination(terms: &[(Complex64, &Self)]) -> Self {
        let mut bps: Vec<f64> = Vec::new();
        for (_, f) in terms {
            bps = merge_breakpoints(&bps, &f.breakpoints);
        }
        let mut pieces: Vec<Vec<Term>> = vec![Vec::new(); bps.len() + 1];
        for (c, f) in terms {
            if *c == ZERO {
                continue;
            }
            for (k, p) in f.refine(&bps).into_iter().enumerate() {
                pieces[k].extend(p.into_iter().map(|t| Term::new(t.coeff * c, t.power, t.rate)));
            }
        }
        Self::canonical(bps, pieces)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        let bps = merge_breakpoints(&self.breakpoints, &other.breakpoints);
        let a = self.refine(&bps);
        let b = other.refine(&bps);
        let pieces = a
            .iter()
            .zip(&b)
            .map(|(x, y)| {
                let mut out = Vec::with_capacity(x.len() * y.len());
                for s in x {
                    for t in y {
                        out.push(Term::new(s.coeff * t.coeff, s.power + t.power, s.rate + t.rate));
                    }
                }
                out
            })
            .collect();
        Self::canonical(bps, pieces)
    }

    /// Multiplication by `e^{rate x}`.
    pub fn mul_exp(&self, rate: Complex64) -> Self {
        let pieces = (0..self.pieces.len())
            .map(|k| {
                let f = (rate * self.anchor(k)).exp();
                self.pieces[k]
                    .iter()
                    .map(|t| Term::new(t.coeff * f, t.power, t.rate + rate))
                    .collect()
            })
            .collect();
        Self::canonical(self.breakpoints.clone(), pieces)
    }

    /// `∫_R f`.
    pub fn integral(&self) -> Result<Complex64> {
        let mut total = ZERO;
        for k in 0..self.pieces.len() {
            let span = self.span(k);
            for t in &self.pieces[k] {
                total += t.coeff * integrate_monomial(span, t.power, t.rate)?;
            }
        }
        Ok(total)
    }

    /// `∫_a^b f` for finite `a <= b`.
    pub fn integral_over(&self, a: f64, b: f64) -> Result<Complex64> {
        if !(a.is_finite() && b.is_finite()) || b < a {
            return Err(Error::InvalidParameter(format!("bad interval [{a}, {b}]")));
        }
        let window = Self::indicator(a, b)?;
        self.mul(&window).integral()
    }

    /// `⟨f, g⟩ = ∫ conj(f) g`, antilinear in the first slot.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if !self.is_l2() || !other.is_l2() {
            return Err(Error::NotSquareIntegrable(
                "inner product needs two L^2 functions".into(),
            ));
        }
        self.conj().mul(other).integral()
    }

    pub fn norm_sq(&self) -> Result<f64> {
        Ok(self.inner(self)?.re.max(0.0))
    }

    /// `F(x) = ∫_{-inf}^x f`.
    pub fn cumulative_from_left(&self) -> Result<Self> {
        let n = self.pieces.len();
        let mut pieces = Vec::with_capacity(n);
        let mut running = ZERO;
        for k in 0..n {
            let span = self.span(k);
            let (g, g0) = antiderivative(&self.pieces[k]);
            match span {
                Span::Whole | Span::Left => {
                    if let Some(t) = self.pieces[k].iter().find(|t| !(t.rate.re > 0.0)) {
                        return Err(Error::Divergent(format!(
                            "term with rate {} is not integrable at -inf",
                            t.rate
                        )));
                    }
                    running = g0;
                    pieces.push(g);
                }
                Span::Bounded(len) => {
                    let mut terms = g.clone();
                    terms.push(Term::constant(running - g0));
                    running += eval_terms(&g, len) - g0;
                    pieces.push(terms);
                }
                Span::Right => {
                    let mut terms = g;
                    terms.push(Term::constant(running - g0));
                    pieces.push(terms);
                }
            }
        }
        Ok(Self::canonical(self.breakpoints.clone(), pieces))
    }

    /// `F(x) = ∫_x^{inf} f`.
    pub fn cumulative_from_right(&self) -> Result<Self> {
        let n = self.pieces.len();
        let mut pieces = vec![Vec::new(); n];
        let mut running = ZERO;
        for k in (0..n).rev() {
            let span = self.span(k);
            let (g, g0) = antiderivative(&self.pieces[k]);
            let neg: Vec<Term> = g.iter().map(|t| Term::new(-t.coeff, t.power, t.rate)).collect();
            match span {
                Span::Whole | Span::Right => {
                    if let Some(t) = self.pieces[k].iter().find(|t| !(t.rate.re < 0.0)) {
                        return Err(Error::Divergent(format!(
                            "term with rate {} is not integrable at +inf",
                            t.rate
                        )));
                    }
                    running = -g0;
                    pieces[k] = neg;
                }
                Span::Bounded(len) => {
                    let gl = eval_terms(&g, len);
                    let mut terms = neg;
                    terms.push(Term::constant(running + gl));
                    running += gl - g0;
                    pieces[k] = terms;
                }
                Span::Left => {
                    let mut terms = neg;
                    terms.push(Term::constant(running + g0));
                    pieces[k] = terms;
                }
            }
        }
        Ok(Self::canonical(self.breakpoints.clone(), pieces))
    }

    /// The unique L^2 solution `g` of `g - g'' = f`: convolution with `e^{-|x|}/2`.
    pub fn solve_one_minus_d2(&self) -> Result<Self> {
        let left = self.mul_exp(ONE).cumulative_from_left()?.mul_exp(-ONE);
        let right = self.mul_exp(-ONE).cumulative_from_right()?.mul_exp(ONE);
        Ok(left.add(&right).scale(Complex64::new(0.5, 0.0)))
    }

    /// `(i d/dx + i)^{-1} f = -i e^{-x} ∫_{-inf}^x e^{y} f(y) dy`.
    pub fn momentum_resolvent_plus(&self) -> Result<Self> {
        Ok(self
            .mul_exp(ONE)
            .cumulative_from_left()?
            .mul_exp(-ONE)
            .scale(-I))
    }

    /// `(i d/dx - i)^{-1} f = i e^{x} ∫_x^{inf} e^{-y} f(y) dy`.
    pub fn momentum_resolvent_minus(&self) -> Result<Self> {
        Ok(self
            .mul_exp(-ONE)
            .cumulative_from_right()?
            .mul_exp(ONE)
            .scale(I))
    }

    /// Largest coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.pieces
            .iter()
            .flatten()
            .fold(0.0, |acc, t| acc.max(t.coeff.norm()))
    }

    /// Terms of every piece of `self` re-expressed over the (finer) breakpoint set `bps`.
    fn refine(&self, bps: &[f64]) -> Vec<Vec<Term>> {
        let m = bps.len();
        (0..=m)
            .map(|k| {
                let probe = if m == 0 {
                    0.0
                } else if k == 0 {
                    bps[0] - 1.0
                } else if k == m {
                    bps[m - 1] + 1.0
                } else {
                    0.5 * (bps[k - 1] + bps[k])
                };
                let src = self.piece_index(probe);
                let delta = anchor_of(bps, k) - self.anchor(src);
                reanchor(&self.pieces[src], delta)
            })
            .collect()
    }

    fn canonical(breakpoints: Vec<f64>, pieces: Vec<Vec<Term>>) -> Self {
        let mut merged: Vec<Vec<Term>> = pieces.into_iter().map(merge_terms).collect();
        let scales: Vec<Vec<f64>> = merged
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let span = span_of(&breakpoints, k);
                p.iter().map(|t| t.coeff.norm() * sup_estimate(span, t)).collect()
            })
            .collect();
        let max = scales.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
        for (p, s) in merged.iter_mut().zip(&scales) {
            let mut idx = 0;
            p.retain(|t| {
                let keep = t.coeff != ZERO && s[idx] >= TERM_DROP_TOL * max;
                idx += 1;
                keep
            });
        }
        PiecewiseExpPoly {
            breakpoints,
            pieces: merged,
        }
    }
}

fn anchor_of(bps: &[f64], k: usize) -> f64 {
    match (bps.is_empty(), k) {
        (true, _) => 0.0,
        (false, 0) => bps[0],
        (false, k) => bps[k - 1],
    }
}

fn span_of(bps: &[f64], k: usize) -> Span {
    let m = bps.len();
    if m == 0 {
        Span::Whole
    } else if k == 0 {
        Span::Left
    } else if k == m {
        Span::Right
    } else {
        Span::Bounded(bps[k] - bps[k - 1])
    }
}

fn decays_on(span: Span, rate: Complex64) -> bool {
    match span {
        Span::Whole => false,
        Span::Left => rate.re > 0.0,
        Span::Right => rate.re < 0.0,
        Span::Bounded(_) => true,
    }
}

/// Upper estimate of `|u^p e^{a u}|` over the piece, used only for dropping negligible terms.
fn sup_estimate(span: Span, t: &Term) -> f64 {
    let p = t.power as i32;
    let re = t.rate.re;
    let unbounded = |decay: f64| {
        if decay <= 0.0 || p == 0 {
            1.0
        } else {
            (p as f64 / (std::f64::consts::E * decay)).powi(p).max(1e-300)
        }
    };
    match span {
        Span::Whole => 1.0,
        Span::Left => unbounded(re),
        Span::Right => unbounded(-re),
        Span::Bounded(len) => len.max(1.0).powi(p) * (re * len).exp().max(1.0),
    }
}

fn eval_terms(terms: &[Term], u: f64) -> Complex64 {
    terms.iter().map(|t| t.eval(u)).sum()
}

fn same_rate(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= RATE_MERGE_TOL * a.norm().max(1.0)
}

fn merge_terms(terms: Vec<Term>) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    for t in terms {
        match out.iter_mut().find(|s| s.power == t.power && same_rate(s.rate, t.rate)) {
            Some(s) => s.coeff += t.coeff,
            None => out.push(t),
        }
    }
    out
}

/// Rewrites terms in `u` as terms in `w = u - delta`.
fn reanchor(terms: &[Term], delta: f64) -> Vec<Term> {
    if delta == 0.0 {
        return terms.to_vec();
    }
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        let shift = t.coeff * (t.rate * delta).exp();
        let p = t.power;
        let mut binom = 1.0;
        for q in (0..=p).rev() {
            // coefficient of w^q in (w + delta)^p is C(p, q) delta^{p-q}
            let k = p - q;
            if k > 0 {
                binom = binom * (p - k + 1) as f64 / k as f64;
            }
            let c = shift * binom * delta.powi(k as i32);
            out.push(Term::new(c, q, t.rate));
        }
    }
    merge_terms(out)
}

/// Antiderivative `G` of the terms (as terms) together with `G(0)`.
///
/// For `a != 0`, `∫ u^p e^{au} du = e^{au} sum_k (-1)^k p!/(p-k)! u^{p-k} / a^{k+1}`.
fn antiderivative(terms: &[Term]) -> (Vec<Term>, Complex64) {
    let mut out = Vec::new();
    let mut at_zero = ZERO;
    for t in terms {
        let p = t.power;
        if t.rate == ZERO {
            out.push(Term::new(t.coeff / (p + 1) as f64, p + 1, ZERO));
            continue;
        }
        let mut falling = 1.0; // p!/(p-k)!
        let mut apow = t.rate; // a^{k+1}
        for k in 0..=p {
            if k > 0 {
                falling *= (p - k + 1) as f64;
                apow *= t.rate;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let c = t.coeff * sign * falling / apow;
            out.push(Term::new(c, p - k, t.rate));
            if k == p {
                at_zero += c;
            }
        }
    }
    (merge_terms(out), at_zero)
}

fn factorial(p: u32) -> f64 {
    (1..=p).fold(1.0, |acc, k| acc * k as f64)
}

/// `∫ u^p e^{a u}` over the span of a piece.
fn integrate_monomial(span: Span, p: u32, a: Complex64) -> Result<Complex64> {
    match span {
        Span::Whole => Err(Error::Divergent("nonzero term on the whole line".into())),
        Span::Right => {
            if !(a.re < 0.0) {
                return Err(Error::Divergent(format!("rate {a} does not decay at +inf")));
            }
            // p! / (-a)^{p+1}
            Ok(factorial(p) / (-a).powu(p + 1))
        }
        Span::Left => {
            if !(a.re > 0.0) {
                return Err(Error::Divergent(format!("rate {a} does not decay at -inf")));
            }
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            Ok(sign * factorial(p) / a.powu(p + 1))
        }
        Span::Bounded(len) => Ok(integrate_bounded(p, a, len)),
    }
}

/// `∫_0^len u^p e^{a u} du`.
fn integrate_bounded(p: u32, a: Complex64, len: f64) -> Complex64 {
    let pf = p as f64;
    if a == ZERO {
        return Complex64::new(len.powf(pf + 1.0) / (pf + 1.0), 0.0);
    }
    if (a * len).norm() < 0.5 {
        // Power series of e^{a u}; avoids cancellation for small |a| len.
        let mut sum = ZERO;
        let mut coef = Complex64::new(len.powf(pf + 1.0), 0.0); // a^k len^{p+k+1} / k!
        for k in 0..200u32 {
            let term = coef / (pf + k as f64 + 1.0);
            sum += term;
            if term.norm() <= 1e-18 * sum.norm() {
                break;
            }
            coef *= a * len / (k as f64 + 1.0);
        }
        return sum;
    }
    let (g, g0) = antiderivative(&[Term::new(ONE, p, a)]);
    eval_terms(&g, len) - g0
}

/// Sorted union of two sorted breakpoint lists, identifying points within tolerance.
pub fn merge_breakpoints(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        match out.last() {
            Some(&last) if next - last <= BREAKPOINT_TOL => {}
            _ => out.push(next),
        }
    }
    out
}

/// `psi_n = sum_{j=0}^{n-1} phi_{j/n}`.
pub fn psi_n(n: usize) -> PiecewiseExpPoly {
    let centers: Vec<(f64, Complex64)> = (0..n).map(|j| (j as f64 / n as f64, ONE)).collect();
    PiecewiseExpPoly::kernel_combination(&centers)
}

/// `sqrt(e) (sgn(x-1) e^{-|x-1|}/2 - sgn(x) e^{-|x|}/2 + chi_[0,1](x))`, the graph-normalized
/// limit of `psi_n`.
pub fn psi_infinity() -> PiecewiseExpPoly {
    let chi = PiecewiseExpPoly::indicator(0.0, 1.0).expect("unit interval");
    let f = PiecewiseExpPoly::linear_combination(&[
        (ONE, &PiecewiseExpPoly::sign_kernel(1.0)),
        (-ONE, &PiecewiseExpPoly::sign_kernel(0.0)),
        (ONE, &chi),
    ]);
    f.scale(Complex64::new(0.5f64.exp(), 0.0))
}

#[derive(Serialize, Deserialize)]
struct PieceDoc {
    anchor: f64,
    terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
struct PwExpDoc {
    breakpoints: Vec<f64>,
    pieces: Vec<PieceDoc>,
}

impl Serialize for PiecewiseExpPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let doc = PwExpDoc {
            breakpoints: self.breakpoints.clone(),
            pieces: (0..self.pieces.len())
                .map(|k| PieceDoc {
                    anchor: self.anchor(k),
                    terms: self.pieces[k].clone(),
                })
                .collect(),
        };
        doc.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PiecewiseExpPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = PwExpDoc::deserialize(d)?;
        for (k, p) in doc.pieces.iter().enumerate() {
            if k <= doc.breakpoints.len() && p.anchor != anchor_of(&doc.breakpoints, k) {
                return Err(D::Error::custom(format!("piece {k} has a non-canonical anchor")));
            }
        }
        let pieces = doc.pieces.into_iter().map(|p| p.terms).collect();
        PiecewiseExpPoly::from_parts(doc.breakpoints, pieces).map_err(D::Error::custom)
    }
}

#[cfg(test)]
pub(crate) mod quadrature {
    //! Independent Gauss–Legendre oracle for integrals of piecewise functions.
    use num_complex::Complex64;

    const NODES: [(f64, f64); 8] = [
        (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
        (-0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
        (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
        (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
        (0.183_434_642_495_649_8, 0.362_683_783_378_362),
        (0.525_532_409_916_329, 0.313_706_645_877_887_3),
        (0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
        (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    ];

    /// `∫_{lo}^{hi} f` with panels that never straddle any of `cuts`.
    pub fn integrate(f: impl Fn(f64) -> Complex64, cuts: &[f64], lo: f64, hi: f64, h: f64) -> Complex64 {
        let mut pts: Vec<f64> = cuts.iter().copied().filter(|&c| c > lo && c < hi).collect();
        pts.push(lo);
        pts.push(hi);
        pts.sort_by(f64::total_cmp);
        let mut total = Complex64::new(0.0, 0.0);
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let panels = ((b - a) / h).ceil().max(1.0) as usize;
            let step = (b - a) / panels as f64;
            for k in 0..panels {
                let x0 = a + k as f64 * step;
                let mid = x0 + 0.5 * step;
                for &(t, wt) in NODES.iter() {
                    total += f(mid + 0.5 * step * t) * (wt * 0.5 * step);
                }
            }
        }
        total
    }
}
