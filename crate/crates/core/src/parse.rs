//! Literal syntax for symbols, vectors, functionals and parameter lists.
//!
//! Vectors are sums of atoms joined by `+`, each optionally prefixed by `c*`.
//! Complex coefficients go in parentheses, e.g. `(1-2i)*e:3`.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gelfand::{functional_from_h, MinusOneFunctional};
use crate::model::{DiagonalSequence, HilbertModel, MomentumLine};
use crate::pwexp::{psi_infinity, psi_n, PiecewiseExpPoly};
use crate::seq::{Polynomial, SeqVector};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Whether the sign at `i` belongs to a float exponent such as `1e-3`.
fn is_exponent_sign(b: &[u8], i: usize) -> bool {
    i >= 2 && matches!(b[i - 1], b'e' | b'E') && (b[i - 2].is_ascii_digit() || b[i - 2] == b'.')
}

/// Splits on `sep` outside parentheses, leaving float exponents intact.
pub fn split_top(s: &str, sep: char) -> Vec<&str> {
    let b = s.as_bytes();
    let mut depth = 0i32;
    let mut out = Vec::new();
    let mut last = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 && !(matches!(c, '+' | '-') && is_exponent_sign(b, i)) => {
                out.push(&s[last..i]);
                last = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[last..]);
    out
}

fn strip_parens(s: &str) -> &str {
    let t = s.trim();
    if t.starts_with('(') && t.ends_with(')') {
        &t[1..t.len() - 1]
    } else {
        t
    }
}

/// A real number; also accepts `pi`, `-pi`, `k*pi` and `pi/k`.
pub fn parse_real(s: &str) -> Result<f64> {
    let t = strip_parens(s);
    if let Ok(x) = t.parse::<f64>() {
        return Ok(x);
    }
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, t),
    };
    let (num, den) = match body.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim().parse::<f64>().map_err(|_| err(format!("bad divisor in {s:?}")))?),
        None => (body, 1.0),
    };
    let mult = if num == "pi" {
        1.0
    } else if let Some(k) = num.strip_suffix("*pi") {
        k.trim().parse::<f64>().map_err(|_| err(format!("bad multiple of pi in {s:?}")))?
    } else {
        return Err(err(format!("not a real number: {s:?}")));
    };
    Ok(sign * mult * PI / den)
}

pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t = strip_parens(s);
    if let Ok(x) = parse_real(t) {
        return Ok(Complex64::new(x, 0.0));
    }
    Complex64::from_str(t).map_err(|_| err(format!("not a complex number: {s:?}")))
}

/// Comma-separated list, e.g. `1,10,100`.
pub fn parse_list<T, F: Fn(&str) -> Result<T>>(s: &str, item: F) -> Result<Vec<T>> {
    let out = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(item)
        .collect::<Result<Vec<T>>>()?;
    if out.is_empty() {
        return Err(err("empty list"));
    }
    Ok(out)
}

pub fn parse_count(s: &str) -> Result<u64> {
    let t = s.trim();
    if let Ok(n) = t.parse::<u64>() {
        return Ok(n);
    }
    // Accepts 1e4 style integers.
    match t.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(err(format!("not a nonnegative integer: {s:?}"))),
    }
}

/// A polynomial in `n` with real or parenthesized complex coefficients, e.g. `n`, `2n^2 - 3*n + 1`.
pub fn parse_symbol(s: &str) -> Result<Polynomial> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(err("empty symbol"));
    }
    let b = t.as_bytes();
    let mut terms = Vec::new();
    let mut depth = 0i32;
    let mut last = 0;
    for (i, ch) in t.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '+' | '-' if depth == 0 && i > last && !is_exponent_sign(b, i) && !matches!(b[i - 1], b'^' | b'*') => {
                terms.push(&t[last..i]);
                last = i;
            }
            _ => {}
        }
    }
    terms.push(&t[last..]);
    let mut coeffs: Vec<Complex64> = Vec::new();
    for term in terms {
        let (neg, body) = match term.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, term.strip_prefix('+').unwrap_or(term)),
        };
        let (coeff, power) = match body.rfind('n') {
            Some(pos) if !body[pos..].starts_with("n)") => {
                let head = body[..pos].strip_suffix('*').unwrap_or(&body[..pos]);
                let c = if head.is_empty() { ONE } else { parse_complex(head)? };
                let tail = &body[pos + 1..];
                let p = if tail.is_empty() {
                    1
                } else {
                    tail.strip_prefix('^')
                        .and_then(|k| k.parse::<usize>().ok())
                        .ok_or_else(|| err(format!("bad power in term {term:?}")))?
                };
                (c, p)
            }
            _ => (parse_complex(body)?, 0),
        };
        if coeffs.len() <= power {
            coeffs.resize(power + 1, Complex64::new(0.0, 0.0));
        }
        coeffs[power] += if neg { -coeff } else { coeff };
    }
    Ok(Polynomial::new(coeffs))
}

/// Splits `c*atom` into the coefficient and the atom.
fn coefficient_prefix(term: &str) -> Result<(Complex64, &str)> {
    let t = term.trim();
    let parts = split_top(t, '*');
    match parts.as_slice() {
        [atom] => match atom.trim().strip_prefix('-') {
            Some(rest) => Ok((-ONE, rest.trim())),
            None => Ok((ONE, atom.trim())),
        },
        [c, atom] => Ok((parse_complex(c)?, atom.trim())),
        _ => Err(err(format!("too many '*' in {term:?}"))),
    }
}

fn args<'a>(atom: &'a str, name: &str, count: usize) -> Result<Option<Vec<&'a str>>> {
    let Some(rest) = atom.strip_prefix(name).and_then(|r| r.strip_prefix(':')) else {
        return Ok(None);
    };
    let parts: Vec<&str> = split_top(rest, ',').into_iter().map(str::trim).collect();
    if parts.len() != count {
        return Err(err(format!("{name} expects {count} argument(s), got {atom:?}")));
    }
    Ok(Some(parts))
}

/// Models whose vectors have a literal syntax.
pub trait LiteralModel: HilbertModel + Sized {
    fn parse_atom(&self, atom: &str) -> Result<Self::Vector>;

    /// A point evaluation functional, where the model has one.
    fn point_functional(&self, _lambda: f64) -> Result<MinusOneFunctional<Self::Vector>> {
        Err(err(format!("point functionals are not available on the {} model", self.name())))
    }

    fn interval_functional(&self, _a: f64, _b: f64, _c: Complex64) -> Result<MinusOneFunctional<Self::Vector>> {
        Err(err(format!("interval functionals are not available on the {} model", self.name())))
    }

    fn parse_vector(&self, s: &str) -> Result<Self::Vector> {
        if s.trim().is_empty() {
            return Err(err("empty vector literal"));
        }
        let mut parts = Vec::new();
        for term in split_top(s, '+') {
            let (c, atom) = coefficient_prefix(term)?;
            parts.push((c, self.parse_atom(atom)?));
        }
        let refs: Vec<(Complex64, &Self::Vector)> = parts.iter().map(|(c, v)| (*c, v)).collect();
        Ok(self.lin_comb(&refs))
    }

    /// `;`-separated generators; an empty string is the empty family.
    fn parse_vectors(&self, s: &str) -> Result<Vec<Self::Vector>> {
        split_top(s, ';')
            .into_iter()
            .filter(|t| !t.trim().is_empty())
            .map(|t| self.parse_vector(t))
            .collect()
    }

    /// `point:λ`, `interval-integral:a,b,c` or `rep:<vector>`; `h:<vector>` is `f ↦ ⟨v, f⟩`.
    fn parse_functional(&self, s: &str) -> Result<MinusOneFunctional<Self::Vector>> {
        let t = s.trim();
        if let Some(p) = args(t, "point", 1)? {
            return self.point_functional(parse_real(p[0])?);
        }
        if let Some(p) = args(t, "interval-integral", 3)? {
            return self.interval_functional(parse_real(p[0])?, parse_real(p[1])?, parse_complex(p[2])?);
        }
        if let Some(rest) = t.strip_prefix("rep:") {
            return Ok(MinusOneFunctional::from_representative(self.parse_vector(rest)?));
        }
        if let Some(rest) = t.strip_prefix("h:") {
            return functional_from_h(self, &self.parse_vector(rest)?);
        }
        Err(err(format!("unknown functional {t:?}")))
    }

    fn parse_functionals(&self, s: &str) -> Result<Vec<MinusOneFunctional<Self::Vector>>> {
        split_top(s, ';')
            .into_iter()
            .filter(|t| !t.trim().is_empty())
            .map(|t| self.parse_functional(t))
            .collect()
    }
}

impl LiteralModel for MomentumLine {
    /// `kernel:λ`, `sign:λ`, `bump:t`, `exp:t,rate`, `indicator:a,b`, `psi:n`, `psi-inf`, `zero`.
    fn parse_atom(&self, atom: &str) -> Result<PiecewiseExpPoly> {
        match atom {
            "psi-inf" => return Ok(psi_infinity()),
            "zero" => return Ok(PiecewiseExpPoly::zero()),
            _ => {}
        }
        if let Some(p) = args(atom, "kernel", 1)? {
            return Ok(PiecewiseExpPoly::kernel(parse_real(p[0])?));
        }
        if let Some(p) = args(atom, "sign", 1)? {
            return Ok(PiecewiseExpPoly::sign_kernel(parse_real(p[0])?));
        }
        if let Some(p) = args(atom, "bump", 1)? {
            return Ok(PiecewiseExpPoly::odd_bump(parse_real(p[0])?));
        }
        if let Some(p) = args(atom, "exp", 2)? {
            let rate = parse_complex(p[1])?;
            if rate.re <= 0.0 {
                return Err(err(format!("exp rate must have positive real part: {atom:?}")));
            }
            return Ok(PiecewiseExpPoly::two_sided_exp(parse_real(p[0])?, rate));
        }
        if let Some(p) = args(atom, "indicator", 2)? {
            return PiecewiseExpPoly::indicator(parse_real(p[0])?, parse_real(p[1])?);
        }
        if let Some(p) = args(atom, "psi", 1)? {
            let n = parse_count(p[0])?;
            if n == 0 || n > 1 << 16 {
                return Err(err(format!("psi:n needs 1 <= n <= 65536, got {n}")));
            }
            return Ok(psi_n(n as usize));
        }
        Err(err(format!("unknown momentum vector {atom:?}")))
    }

    fn point_functional(&self, lambda: f64) -> Result<MinusOneFunctional<PiecewiseExpPoly>> {
        Ok(MinusOneFunctional::point(lambda))
    }

    fn interval_functional(&self, a: f64, b: f64, c: Complex64) -> Result<MinusOneFunctional<PiecewiseExpPoly>> {
        MinusOneFunctional::interval_integral(a, b, c)
    }
}

impl LiteralModel for DiagonalSequence {
    /// `e:k`, `tail:c,s` (`c n^{-s}`), `geom:c,ρ` (`c ρ^n`), `zero`.
    fn parse_atom(&self, atom: &str) -> Result<SeqVector> {
        if atom == "zero" {
            return Ok(SeqVector::zero());
        }
        if let Some(p) = args(atom, "e", 1)? {
            return SeqVector::basis(parse_count(p[0])?);
        }
        if let Some(p) = args(atom, "tail", 2)? {
            return Ok(SeqVector::power_tail(parse_complex(p[0])?, parse_real(p[1])?));
        }
        if let Some(p) = args(atom, "geom", 2)? {
            return SeqVector::geometric(parse_complex(p[0])?, parse_complex(p[1])?);
        }
        Err(err(format!("unknown sequence vector {atom:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn reals_and_complexes() {
        assert_eq!(parse_real("pi").unwrap(), PI);
        assert_eq!(parse_real("-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(parse_real("2*pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_real("1e-3").unwrap(), 1e-3);
        assert!(parse_real("x").is_err());
        assert_eq!(parse_complex("(1-2i)").unwrap(), c(1.0, -2.0));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_count("1e4").unwrap(), 10_000);
        assert!(parse_count("-1").is_err());
        assert_eq!(parse_list("1, 10,100", parse_count).unwrap(), vec![1, 10, 100]);
    }

    #[test]
    fn splitting_keeps_exponents_and_parens() {
        assert_eq!(split_top("kernel:1e+2+(1+i)*e:3", '+'), vec!["kernel:1e+2", "(1+i)*e:3"]);
    }

    #[test]
    fn symbols() {
        assert_eq!(parse_symbol("n").unwrap(), Polynomial::identity());
        assert_eq!(parse_symbol("2n^2 - 3*n + 1").unwrap(), Polynomial::real(&[1.0, -3.0, 2.0]));
        assert_eq!(parse_symbol("-n^3").unwrap(), Polynomial::real(&[0.0, 0.0, 0.0, -1.0]));
        assert_eq!(
            parse_symbol("(0+1i)*n").unwrap(),
            Polynomial::new(vec![c(0.0, 0.0), c(0.0, 1.0)])
        );
        assert!(parse_symbol("n^x").is_err());
        assert!(parse_symbol("").is_err());
    }

    #[test]
    fn sequence_literals() {
        let d = DiagonalSequence::new(Polynomial::identity());
        let v = d.parse_vector("e:1 + 2*e:3 + tail:(1-2i),2").unwrap();
        assert_eq!(v.coordinate(3), c(2.0, 0.0) + c(1.0, -2.0) / 9.0);
        assert_eq!(v.coordinate(1), c(1.0, 0.0) + c(1.0, -2.0));
        let g = d.parse_vector("geom:1,0.5").unwrap();
        assert_abs_diff_eq!(g.coordinate(3).re, 0.125, epsilon = 1e-16);
        assert!(d.parse_vector("e:0").is_err());
        assert!(d.parse_vector("kernel:1").is_err());
        assert_eq!(d.parse_vectors("e:1; e:2").unwrap().len(), 2);
        assert!(d.parse_vectors("").unwrap().is_empty());
        assert!(d.parse_functional("point:0").is_err());
        assert!(d.parse_functional("rep:e:1").is_ok());
    }

    #[test]
    fn momentum_literals() {
        let m = MomentumLine;
        let v = m.parse_vector("kernel:0 + -1*kernel:1").unwrap();
        assert_abs_diff_eq!(v.eval(0.0).re, 0.5 - 0.5 * (-1.0f64).exp(), epsilon = 1e-15);
        assert!(m.parse_vector("psi-inf").unwrap().sub(&psi_infinity()).is_zero());
        assert!(m.parse_vector("psi:4").unwrap().sub(&psi_n(4)).is_zero());
        assert!(m.parse_vector("exp:0,-1").is_err());
        assert!(m.parse_vector("indicator:1,0").is_err());
        let l = m.parse_functional("interval-integral:0,1,1").unwrap();
        let f = PiecewiseExpPoly::kernel(0.5);
        let got = crate::gelfand::functional_eval(&m, &l, &f).unwrap();
        assert_abs_diff_eq!((got - f.integral_over(0.0, 1.0).unwrap()).norm(), 0.0, epsilon = 1e-14);
        assert_eq!(m.parse_functionals("point:0;point:1").unwrap().len(), 2);
        assert!(m.parse_functional("bogus:1").is_err());
    }
}
