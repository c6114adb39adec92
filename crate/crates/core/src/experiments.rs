//! The named experiments behind the command-line harness.

use std::f64::consts::E;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extension::{adjoint_duality_check, density_decision, recover_parameter, ExtensionOperator};
use crate::gelfand::{density_criterion, MinusOneFunctional};
use crate::geometry::{gap_metric, SpanFamily, MAX_GENERATORS};
use crate::model::{DiagonalSequence, HilbertModel, MomentumLine, Sign};
use crate::pwexp::{psi_infinity, psi_n, PiecewiseExpPoly};
use crate::report::{ExperimentReport, Row};
use crate::seq::SeqVector;
use crate::vonneumann::{
    defect_vectors, rank_one_resolvent, verify_resolvent_round_trip, ExtensionParameter, RankOneRestriction,
};

pub const RIEMANN_MAX_N: u64 = 1_000_000;
pub const CLOSABILITY_MAX_KERNELS: usize = 4097;

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// `(1/n²) Σ_{j,l<n} ½e^{−|j−l|/n}`, summed by distance.
pub fn riemann_g(n: u64) -> Result<f64> {
    if n == 0 || n > RIEMANN_MAX_N {
        return Err(Error::InvalidParameter(format!("n = {n} outside 1..={RIEMANN_MAX_N}")));
    }
    let nf = n as f64;
    let mut sum = nf / 2.0;
    for d in 1..n {
        sum += (nf - d as f64) * (-(d as f64) / nf).exp();
    }
    Ok(sum / (nf * nf))
}

/// Distances `|x_k − limit|` do not increase along the list.
fn monotone(xs: &[f64], slack: f64) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0] + slack)
}

pub fn riemann_limit(n_list: &[u64], tol: f64) -> Result<ExperimentReport> {
    let limit = 1.0 / E;
    let gs: Vec<f64> = n_list.par_iter().map(|&n| riemann_g(n)).collect::<Result<_>>()?;
    let mut rep = ExperimentReport::new("riemann-limit").param("n-list", join(n_list)).param("tol", tol);
    for (&n, &g) in n_list.iter().zip(&gs) {
        rep.push(Row::new("g").input("n", n).value("g", g).value("distance", (g - limit).abs()));
    }
    let dist: Vec<f64> = gs.iter().map(|g| (g - limit).abs()).collect();
    rep.push(Row::new("monotone-approach").require(monotone(&dist, 0.0)));
    let last = *gs.last().ok_or_else(|| Error::InvalidParameter("empty n-list".into()))?;
    rep.push(
        Row::new("limit")
            .input("n", n_list[n_list.len() - 1])
            .value("g", last)
            .value("limit", limit)
            .check((last - limit).abs(), tol),
    );
    Ok(rep.finish(Some(limit), last))
}

pub fn psi_infinity_report() -> Result<ExperimentReport> {
    let m = MomentumLine;
    let psi = psi_infinity();
    let (d1, jumps0) = psi.differentiate();
    let (d2, jumps1) = d1.differentiate();
    let chi = PiecewiseExpPoly::indicator(0.0, 1.0)?.scale(Complex64::new(E.sqrt(), 0.0));
    let residual = psi.sub(&d2).sub(&chi);
    let identity = residual.max_coeff();
    let jump = jumps0
        .jump_values
        .iter()
        .chain(&jumps1.jump_values)
        .fold(0.0f64, |a, j| a.max(j.norm()));
    let norm = m.graph_norm(&psi)?;
    let h2 = m.in_dom_aastar(&psi);
    let mut rep = ExperimentReport::new("psi-infinity");
    rep.push(
        Row::new("identity-residual")
            .value("max_coefficient", identity)
            .check(identity, 1e-12),
    );
    rep.push(Row::new("derivative-jumps").value("max_jump", jump).check(jump, 1e-12));
    rep.push(Row::new("graph-norm").value("norm", norm).check((norm - 1.0).abs(), 1e-9));
    rep.push(Row::new("h2-membership").value("in_h2", h2).require(h2));
    Ok(rep.finish(Some(1.0), norm))
}

pub fn kato_gap(n_list: &[usize], bound: f64) -> Result<ExperimentReport> {
    let m = MomentumLine;
    if let Some(&n) = n_list.iter().find(|&&n| n == 0 || n > MAX_GENERATORS * 16) {
        return Err(Error::InvalidParameter(format!("n = {n} out of range")));
    }
    let target = SpanFamily::new(&m, vec![psi_infinity()])?;
    let deltas: Vec<f64> = n_list
        .par_iter()
        .map(|&n| gap_metric(&SpanFamily::new(&m, vec![psi_n(n)])?, &target))
        .collect::<Result<_>>()?;
    let mut rep = ExperimentReport::new("kato-gap")
        .param("n-list", join(n_list))
        .param("bound", bound);
    let same = gap_metric(&target, &target)?;
    rep.push(Row::new("identical-families").value("delta", same).check(same, 1e-12));
    for (&n, &d) in n_list.iter().zip(&deltas) {
        rep.push(Row::new("delta").input("n", n).value("delta", d));
    }
    rep.push(Row::new("monotone").require(monotone(&deltas, 1e-6)));
    let last = *deltas.last().ok_or_else(|| Error::InvalidParameter("empty n-list".into()))?;
    rep.push(Row::new("final").input("n", n_list[n_list.len() - 1]).check(last, bound));
    Ok(rep.finish(Some(bound), last))
}

/// Graph distance from `ψ∞` to the span of kernels at the given centers.
pub fn kernel_span_distance(centers: &[f64]) -> Result<f64> {
    if centers.len() > CLOSABILITY_MAX_KERNELS {
        return Err(Error::InvalidParameter(format!(
            "{} kernels exceed the cap of {CLOSABILITY_MAX_KERNELS}",
            centers.len()
        )));
    }
    let m = MomentumLine;
    let fam = SpanFamily::new(&m, centers.iter().map(|&c| PiecewiseExpPoly::kernel(c)).collect())?;
    Ok(fam.graph_project(&psi_infinity())?.1)
}

pub fn rational_centers(m: usize) -> Vec<f64> {
    (0..=m).map(|j| j as f64 / m as f64).collect()
}

pub fn integer_centers(k: usize) -> Vec<f64> {
    let k = k as i64;
    (-k..=k).map(|z| z as f64).collect()
}

pub fn closability(m_list: &[usize], k_list: &[usize], bound: f64) -> Result<ExperimentReport> {
    if m_list.contains(&0) {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    let d_rat: Vec<f64> = m_list
        .iter()
        .map(|&m| kernel_span_distance(&rational_centers(m)))
        .collect::<Result<_>>()?;
    let d_int: Vec<f64> = k_list
        .iter()
        .map(|&k| kernel_span_distance(&integer_centers(k)))
        .collect::<Result<_>>()?;
    let mut rep = ExperimentReport::new("closability")
        .param("m-list", join(m_list))
        .param("K-list", join(k_list))
        .param("bound", bound);
    for (&m, &d) in m_list.iter().zip(&d_rat) {
        rep.push(Row::new("d_rat").input("m", m).value("distance", d));
    }
    for (&k, &d) in k_list.iter().zip(&d_int) {
        rep.push(Row::new("d_int").input("K", k).value("distance", d));
    }
    rep.push(Row::new("d_rat-monotone").require(monotone(&d_rat, 1e-12)));
    let last_rat = d_rat.last().copied().unwrap_or(f64::INFINITY);
    rep.push(Row::new("d_rat-final").input("m", m_list.last().copied().unwrap_or(0)).check(last_rat, bound));
    // Stabilization: the last value against the one at half the largest K.
    let k_max = k_list.iter().copied().max().unwrap_or(0);
    let half = k_list.iter().position(|&k| 2 * k == k_max);
    let (d_max, d_half) = match (k_list.iter().position(|&k| k == k_max), half) {
        (Some(a), Some(b)) => (d_int[a], d_int[b]),
        _ => (f64::NAN, f64::NAN),
    };
    let row = Row::new("d_int-stable")
        .input("K", k_max)
        .value("d_int", d_max)
        .value("d_int_half", d_half)
        .check((d_max - d_half).abs(), 0.1 * d_half)
        .require(d_max > 0.0);
    let row = if half.is_none() {
        row.note("K-list needs both K_max and K_max/2")
    } else {
        row
    };
    rep.push(row);
    Ok(rep.finish(Some(bound), last_rat))
}

/// A named span family given by its generators.
#[derive(Debug, Clone)]
pub struct Config<V> {
    pub label: String,
    pub generators: Vec<V>,
}

impl<V> Config<V> {
    pub fn new(label: impl Into<String>, generators: Vec<V>) -> Self {
        Config {
            label: label.into(),
            generators,
        }
    }
}

pub fn density<M: HilbertModel>(
    model: &M,
    configs: &[Config<M::Vector>],
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("density")
        .param("model", model.name())
        .param("samples", samples)
        .param("seed", seed);
    let mut worst = 0.0f64;
    for cfg in configs {
        let fam = SpanFamily::new(model, cfg.generators.clone())?;
        let d = density_decision(&fam, samples, seed)?;
        let ls: Vec<MinusOneFunctional<M::Vector>> = cfg
            .generators
            .iter()
            .cloned()
            .map(MinusOneFunctional::from_representative)
            .collect();
        let crit = density_criterion(model, &ls)?;
        let scaled = if d.dense { 0.0 } else { d.orthogonality_residual / d.witness_norm };
        worst = worst.max(scaled);
        let mut row = Row::new(cfg.label.clone())
            .value("dense", d.dense)
            .value("criterion_dense", crit.dense)
            .check(scaled, tol)
            .require(d.dense == crit.dense);
        if let Some(w) = &d.witness {
            row = row.value("witness", w).value("witness_norm", d.witness_norm);
        }
        rep.push(row);
    }
    Ok(rep.finish(Some(tol), worst))
}

pub fn duality<M: HilbertModel>(
    model: &M,
    configs: &[Config<M::Vector>],
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("duality")
        .param("model", model.name())
        .param("samples", samples)
        .param("seed", seed);
    let mut worst = 0.0f64;
    for cfg in configs {
        let fam = SpanFamily::new(model, cfg.generators.clone())?;
        let d = adjoint_duality_check(&fam, samples, seed)?;
        worst = worst.max(d.max_scaled_residual);
        rep.push(
            Row::new(cfg.label.clone())
                .value("max_residual", d.max_residual)
                .value("samples", d.samples)
                .check(d.max_scaled_residual, tol),
        );
    }
    Ok(rep.finish(Some(tol), worst))
}

pub fn recover<M: HilbertModel>(model: &M, configs: &[Config<M::Vector>], tol: f64) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("recover").param("model", model.name());
    let mut worst = 0.0f64;
    for cfg in configs {
        let fam = SpanFamily::new(model, cfg.generators.clone())?;
        let ext = ExtensionOperator::new(fam.clone())?;
        let back = recover_parameter(&ext)?;
        let gap = gap_metric(&fam, &back)?;
        worst = worst.max(gap);
        rep.push(
            Row::new(cfg.label.clone())
                .value("dimension", fam.dimension()?)
                .value("recovered_dimension", back.dimension()?)
                .check(gap, tol),
        );
    }
    Ok(rep.finish(Some(tol), worst))
}

pub fn vonneumann<M: HilbertModel>(
    model: &M,
    phi: &M::Vector,
    thetas: &[ExtensionParameter],
    psis: &[M::Vector],
    tol: f64,
) -> Result<ExperimentReport> {
    let cfg = RankOneRestriction::new(model, phi.clone())?;
    let mut rep = ExperimentReport::new("vonneumann")
        .param("model", model.name())
        .param("theta", join(&thetas.iter().map(|t| t.theta()).collect::<Vec<_>>()));
    let dv = defect_vectors(&cfg)?;
    rep.push(Row::new("defect-plus").check(dv.residual_plus, 1e-10));
    rep.push(Row::new("defect-minus").check(dv.residual_minus, 1e-10));
    rep.push(
        Row::new("defect-norms")
            .value("norm_plus", dv.norm_plus)
            .value("norm_minus", dv.norm_minus)
            .value("raw_norm", cfg.raw_norm())
            .check((dv.norm_plus - 1.0).abs().max((dv.norm_minus - 1.0).abs()), 1e-12),
    );
    let cells: Vec<(usize, usize)> = (0..thetas.len()).flat_map(|t| (0..psis.len()).map(move |p| (t, p))).collect();
    let results: Vec<Row> = cells
        .par_iter()
        .map(|&(ti, pi)| {
            let theta = thetas[ti];
            let psi = &psis[pi];
            let rt = verify_resolvent_round_trip(&cfg, theta, psi)?;
            let k = theta.coefficient();
            let mut row = Row::new("round-trip")
                .input("theta", theta.theta())
                .input("psi", pi)
                .value("coefficient_re", k.re)
                .value("coefficient_im", k.im)
                .value("lambda_re", rt.lambda.re)
                .value("lambda_im", rt.lambda.im);
            if theta.is_trivial() {
                let r = rank_one_resolvent(&cfg, theta, psi)?;
                let base = model.resolvent_at(Sign::Plus, psi)?;
                let diff = model.sub(&r, &base);
                let exact = model.is_zero(&diff);
                row = row.value("equals_s_resolvent", exact).require(exact && k.norm() == 0.0);
                row = row.check(rt.residual, tol.min(1e-10));
            } else {
                row = row.check(rt.residual, tol);
            }
            if let Some(d) = rt.diagnostics {
                row = row.note(d);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    for r in results {
        rep.push(r);
    }
    let achieved = rep.rows.iter().filter_map(|r| r.residual).fold(0.0, f64::max);
    Ok(rep.finish(Some(tol), achieved))
}

/// Default configurations used when no generators are given on the command line.
pub trait BundledModel: crate::parse::LiteralModel {
    fn density_configs(&self) -> Vec<Config<Self::Vector>>;
    fn duality_configs(&self) -> Vec<Config<Self::Vector>>;
    fn recover_configs(&self) -> Vec<Config<Self::Vector>>;
    fn vonneumann_phi(&self) -> Self::Vector;
    fn vonneumann_psis(&self) -> Vec<Self::Vector>;
}

impl BundledModel for MomentumLine {
    fn density_configs(&self) -> Vec<Config<PiecewiseExpPoly>> {
        vec![
            Config::new("span{kernel:0}", vec![PiecewiseExpPoly::kernel(0.0)]),
            Config::new("span{psi-inf}", vec![psi_infinity()]),
        ]
    }

    fn duality_configs(&self) -> Vec<Config<PiecewiseExpPoly>> {
        vec![
            Config::new("span{kernel:0}", vec![PiecewiseExpPoly::kernel(0.0)]),
            Config::new(
                "span{kernel:0;kernel:5}",
                vec![PiecewiseExpPoly::kernel(0.0), PiecewiseExpPoly::kernel(5.0)],
            ),
        ]
    }

    fn recover_configs(&self) -> Vec<Config<PiecewiseExpPoly>> {
        vec![
            Config::new("{0}", vec![]),
            Config::new("span{kernel:0}", vec![PiecewiseExpPoly::kernel(0.0)]),
            Config::new(
                "span{kernel:0;kernel:5}",
                vec![PiecewiseExpPoly::kernel(0.0), PiecewiseExpPoly::kernel(5.0)],
            ),
        ]
    }

    fn vonneumann_phi(&self) -> PiecewiseExpPoly {
        PiecewiseExpPoly::kernel(0.0)
    }

    fn vonneumann_psis(&self) -> Vec<PiecewiseExpPoly> {
        vec![
            PiecewiseExpPoly::indicator(-0.5, 1.0).expect("ordered interval"),
            PiecewiseExpPoly::kernel(0.3),
            PiecewiseExpPoly::odd_bump(0.5),
        ]
    }
}

impl BundledModel for DiagonalSequence {
    fn density_configs(&self) -> Vec<Config<SeqVector>> {
        vec![Config::new("span{critical tail}", vec![self.critical_tail()])]
    }

    fn duality_configs(&self) -> Vec<Config<SeqVector>> {
        self.density_configs()
    }

    fn recover_configs(&self) -> Vec<Config<SeqVector>> {
        vec![Config::new("{0}", vec![]), Config::new("span{critical tail}", vec![self.critical_tail()])]
    }

    fn vonneumann_phi(&self) -> SeqVector {
        self.critical_tail()
    }

    fn vonneumann_psis(&self) -> Vec<SeqVector> {
        (1..=5).map(|k| SeqVector::basis(k).expect("k >= 1")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn riemann_small_cases() {
        assert_eq!(riemann_g(1).unwrap(), 0.5);
        assert_abs_diff_eq!(riemann_g(2).unwrap(), (1.0 + (-0.5f64).exp()) / 4.0, epsilon = 1e-16);
        assert_abs_diff_eq!(riemann_g(2).unwrap(), 0.401_633, epsilon = 1e-6);
        assert!(riemann_g(0).is_err());
        assert!(riemann_g(RIEMANN_MAX_N + 1).is_err());
        let rep = riemann_limit(&[10, 100, 1000, 10_000], 1e-3).unwrap();
        assert!(rep.pass(), "{}", rep.to_json());
    }

    #[test]
    fn psi_report_passes() {
        let rep = psi_infinity_report().unwrap();
        assert!(rep.pass(), "{}", rep.to_json());
    }

    #[test]
    fn kato_gap_small() {
        let rep = kato_gap(&[2, 4, 8, 16], 0.5).unwrap();
        assert!(rep.pass(), "{}", rep.to_json());
    }

    #[test]
    fn kernel_cap() {
        assert!(kernel_span_distance(&vec![0.0; CLOSABILITY_MAX_KERNELS + 1]).is_err());
    }

    #[test]
    fn integer_and_rational_centers() {
        assert_eq!(integer_centers(1), vec![-1.0, 0.0, 1.0]);
        assert_eq!(rational_centers(2), vec![0.0, 0.5, 1.0]);
    }
}
