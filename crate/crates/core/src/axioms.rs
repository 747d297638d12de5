//! Sampled checks of the displacement hypotheses.
//!
//! A `pass` verdict means no violation was found at the sampled resolution.
//! Finite graphs are checked exhaustively.

use std::f64::consts::TAU;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::displacement::{gamma_estimate, DisplacementSpec};
use crate::error::{Error, Result};
use crate::expr::Expr;

/// Tolerance for algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-9;
/// Tolerance for limit statements.
pub const LIMIT_TOL: f64 = 1e-6;

const MAX_WITNESSES: usize = 16;
const H5_LEVELS: i32 = 30;
const H4_GAMMA_GRID: usize = 1025;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    H1,
    #[serde(rename = "H2-usc")]
    H2Usc,
    #[serde(rename = "H2'")]
    H2Prime,
    H3,
    #[serde(rename = "H4-gamma")]
    H4Gamma,
    H5,
    #[serde(rename = "D2-positive")]
    D2Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub hypothesis: Hypothesis,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub sample_count: usize,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl AxiomReport {
    fn new(hypothesis: Hypothesis, tolerance: f64) -> AxiomReport {
        AxiomReport {
            hypothesis,
            verdict: Verdict::Pass,
            witnesses: Vec::new(),
            sample_count: 0,
            tolerance,
            r_estimate: None,
            note: None,
        }
    }

    fn fail(&mut self, point: Vec<f64>, values: Vec<f64>) {
        self.verdict = Verdict::Fail;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(Witness { point, values });
        }
    }

    fn inconclusive(&mut self, point: Vec<f64>, values: Vec<f64>) {
        if self.verdict == Verdict::Pass {
            self.verdict = Verdict::Inconclusive;
        }
        if self.verdict == Verdict::Inconclusive && self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(Witness { point, values });
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Points at which a spec is sampled: all vertices of a graph, `samples`
/// equispaced angles in `[0, 2π)`, or `samples` equispaced points of `[a, b]`.
pub fn sample_points(spec: &DisplacementSpec, samples: usize) -> Vec<f64> {
    match spec {
        DisplacementSpec::FiniteGraph(g) => (0..g.len()).map(|v| v as f64).collect(),
        DisplacementSpec::Angular => (0..samples).map(|k| TAU * k as f64 / samples as f64).collect(),
        _ => spec.interval().expect("interval spec").grid(samples),
    }
}

fn require_samples(samples: usize) -> Result<()> {
    if samples == 0 {
        Err(Error::InvalidArgument("at least one sample is required".into()))
    } else {
        Ok(())
    }
}

/// (H1): `Δ(x, x) = 0`.
pub fn check_h1(spec: &DisplacementSpec, samples: usize) -> Result<AxiomReport> {
    require_samples(samples)?;
    let mut report = AxiomReport::new(Hypothesis::H1, ALGEBRAIC_TOL);
    let exact = matches!(spec, DisplacementSpec::FiniteGraph(_));
    for x in sample_points(spec, samples) {
        report.sample_count += 1;
        let v = spec.delta(x, x)?;
        let bad = if exact { v != 0.0 } else { v.abs() > ALGEBRAIC_TOL };
        if bad {
            report.fail(vec![x], vec![v]);
        }
    }
    if exact {
        report.tolerance = 0.0;
        report.note = Some("exhaustive over all vertices".into());
    }
    Ok(report)
}

/// (H2′): `φ(|Δ(x, z)|) ≤ φ(|Δ(x, y)|) + φ(|Δ(y, z)|)` over all sampled triples.
///
/// `phi` is an expression in `r`. It must vanish at 0 and be strictly
/// increasing on the displacement magnitudes that occur, otherwise the
/// report is inconclusive.
pub fn check_h2prime(spec: &DisplacementSpec, phi: &Expr, samples: usize) -> Result<AxiomReport> {
    require_samples(samples)?;
    let mut report = AxiomReport::new(Hypothesis::H2Prime, ALGEBRAIC_TOL);
    let pts = sample_points(spec, samples);
    let n = pts.len();
    let mut table = vec![0.0; n * n];
    for (i, &x) in pts.iter().enumerate() {
        for (j, &y) in pts.iter().enumerate() {
            table[i * n + j] = spec.delta(x, y)?.abs();
        }
    }

    let mut mags: Vec<f64> = table.iter().copied().chain([0.0]).collect();
    mags.sort_by(f64::total_cmp);
    mags.dedup();
    let mut phis = Vec::with_capacity(mags.len());
    for &m in &mags {
        match phi.eval_slots(&[m]) {
            Ok(v) => phis.push(v),
            Err(e) => {
                report.inconclusive(vec![m], vec![]);
                report.note = Some(format!("phi cannot be evaluated at {m}: {e}"));
                return Ok(report);
            }
        }
    }
    if phis[0].abs() > ALGEBRAIC_TOL {
        report.inconclusive(vec![0.0], vec![phis[0]]);
        report.note = Some(format!("phi(0) = {} is not 0", phis[0]));
        return Ok(report);
    }
    if let Some(k) = (1..phis.len()).find(|&k| !(phis[k] > phis[k - 1])) {
        report.inconclusive(vec![mags[k - 1], mags[k]], vec![phis[k - 1], phis[k]]);
        report.note = Some("phi is not strictly increasing on the sampled magnitudes".into());
        return Ok(report);
    }
    let psi = |m: f64| phis[mags.binary_search_by(|p| p.total_cmp(&m)).expect("tabulated")];

    for i in 0..n {
        for j in 0..n {
            let xy = psi(table[i * n + j]);
            for k in 0..n {
                report.sample_count += 1;
                let xz = psi(table[i * n + k]);
                let yz = psi(table[j * n + k]);
                if xz > xy + yz + ALGEBRAIC_TOL {
                    report.fail(vec![pts[i], pts[j], pts[k]], vec![xz, xy, yz]);
                }
            }
        }
    }
    if matches!(spec, DisplacementSpec::FiniteGraph(_)) {
        report.note = Some(format!("exhaustive over all {} triples", n * n * n));
    }
    Ok(report)
}

/// (H2) through upper semicontinuity of `|Δ(x, ·)|` in the Δ-topology.
///
/// For each sampled pair `(x, y)` the supremum of `|Δ(x, z)|` is taken over
/// points `z` within `ρ_k` of `y` that are also Δ-close (`|Δ(y, z)| ≤ √ρ_k`),
/// for radii `ρ_k` halving over `shrink_levels` levels. The excess over
/// `|Δ(x, y)|` must vanish or decay geometrically.
pub fn check_h2_usc(spec: &DisplacementSpec, samples: usize, shrink_levels: usize) -> Result<AxiomReport> {
    require_samples(samples)?;
    let dom = spec.require_interval("check_h2_usc")?;
    if shrink_levels < 3 {
        return Err(Error::InvalidArgument(
            "check_h2_usc needs at least 3 shrink levels".into(),
        ));
    }
    let mut report = AxiomReport::new(Hypothesis::H2Usc, LIMIT_TOL);
    let pts = dom.grid(samples);
    let rho0 = 0.1 * dom.width();
    for &x in &pts {
        for &y in &pts {
            report.sample_count += 1;
            let base = spec.delta(x, y)?.abs();
            let mut excess = Vec::with_capacity(shrink_levels);
            for k in 0..shrink_levels {
                let rho = rho0 * 0.5f64.powi(k as i32);
                let mut sup = base;
                for j in 1..=4 {
                    for z in [y - rho * j as f64 / 4.0, y + rho * j as f64 / 4.0] {
                        if !dom.contains(z) || spec.delta(y, z)?.abs() > rho.sqrt() {
                            continue;
                        }
                        sup = sup.max(spec.delta(x, z)?.abs());
                    }
                }
                excess.push(sup - base);
            }
            let last = excess[shrink_levels - 1];
            if last <= LIMIT_TOL {
                continue;
            }
            let ratios: Vec<f64> = excess[shrink_levels - 3..].windows(2).map(|w| w[1] / w[0]).collect();
            if ratios.iter().all(|&q| q <= 0.6) {
                continue;
            }
            if ratios.iter().all(|&q| q >= 0.9) {
                report.fail(vec![x, y], vec![base, base + last]);
            } else {
                report.inconclusive(vec![x, y], excess.clone());
            }
        }
    }
    Ok(report)
}

/// (H3): `Δ(x, ·)` is nondecreasing.
pub fn check_h3(spec: &DisplacementSpec, samples: usize) -> Result<AxiomReport> {
    require_samples(samples)?;
    let dom = spec.require_interval("check_h3")?;
    let mut report = AxiomReport::new(Hypothesis::H3, ALGEBRAIC_TOL);
    let pts = dom.grid(samples);
    for &x in &pts {
        let mut prev: Option<(f64, f64)> = None;
        for &y in &pts {
            report.sample_count += 1;
            let v = spec.delta(x, y)?;
            if let Some((py, pv)) = prev {
                if pv > v + ALGEBRAIC_TOL {
                    report.fail(vec![x, py, y], vec![pv, v]);
                }
            }
            prev = Some((y, v));
        }
    }
    Ok(report)
}

/// (H4)(i) on random quadruples and (H4)(ii) along `z̄ → z`.
///
/// Smooth specs use the grid estimate of γ; Stieltjes specs satisfy (H4)
/// with `γ ≡ 1`, which is what gets tested.
pub fn check_h4(spec: &DisplacementSpec, samples: usize, seed: u64) -> Result<AxiomReport> {
    require_samples(samples)?;
    let dom = spec.require_interval("check_h4")?;
    let mut report = AxiomReport::new(Hypothesis::H4Gamma, LIMIT_TOL);
    let smooth = matches!(spec, DisplacementSpec::Smooth(_));
    let gamma = |z: f64, zbar: f64| -> Result<f64> {
        if smooth {
            Ok(gamma_estimate(spec, z, zbar, H4_GAMMA_GRID)?.value)
        } else {
            Ok(1.0)
        }
    };
    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..samples {
        report.sample_count += 1;
        let [x, y, z, zbar] = [(); 4].map(|_| rng.gen_range(dom.a..=dom.b));
        let lhs = (spec.delta(z, x)? - spec.delta(z, y)?).abs();
        let g = gamma(z, zbar)?;
        let rhs = g * (spec.delta(zbar, x)? - spec.delta(zbar, y)?).abs();
        if lhs > rhs * (1.0 + LIMIT_TOL) + ALGEBRAIC_TOL {
            report.fail(vec![x, y, z, zbar], vec![lhs, rhs, g]);
        }
    }
    if smooth {
        for z in dom.grid(5) {
            let step = 0.5f64.powi(10) * dom.width();
            let zbar = if z + step <= dom.b { z + step } else { z - step };
            report.sample_count += 1;
            let (g1, g2) = (gamma(z, zbar)?, gamma(zbar, z)?);
            if (g1 - 1.0).max(g2 - 1.0) > 1e-3 {
                report.inconclusive(vec![z, zbar], vec![g1, g2]);
            }
        }
    }
    Ok(report)
}

/// (H5): `Δ(x, x - h) → 0` as `h ↓ 0`.
pub fn check_h5(spec: &DisplacementSpec, samples: usize) -> Result<AxiomReport> {
    require_samples(samples)?;
    let dom = spec.require_interval("check_h5")?;
    let mut report = AxiomReport::new(Hypothesis::H5, LIMIT_TOL);
    for x in dom.grid(samples) {
        if x <= dom.a {
            continue;
        }
        report.sample_count += 1;
        let h0 = (x - dom.a).min(0.1 * dom.width());
        let seq = (0..H5_LEVELS)
            .map(|k| spec.delta(x, x - h0 * 0.5f64.powi(k)))
            .collect::<Result<Vec<f64>>>()?;
        let last = seq[seq.len() - 1];
        if last.abs() > LIMIT_TOL {
            let tail = &seq[seq.len() - 4..];
            report.fail(vec![x, x - h0 * 0.5f64.powi(H5_LEVELS - 1)], tail.to_vec());
        }
    }
    Ok(report)
}

/// `D2Δ > 0` on the `(grid + 1)²` nodes of a uniform lattice on `[a, b]²`.
/// The report carries the lattice minimum as `r_estimate`.
pub fn check_d2_positive(spec: &DisplacementSpec, grid: usize) -> Result<AxiomReport> {
    require_samples(grid)?;
    let s = spec.require_smooth("check_d2_positive")?;
    let mut report = AxiomReport::new(Hypothesis::D2Positive, 0.0);
    let pts = s.domain().grid(grid + 1);
    let mut min = f64::INFINITY;
    for &x in &pts {
        for &y in &pts {
            report.sample_count += 1;
            let v = s.d2(x, y)?;
            min = min.min(v);
            if !(v > 0.0) {
                report.fail(vec![x, y], vec![v]);
            }
        }
    }
    report.r_estimate = Some(min);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::displacement::{Bivariate, Domain, Graph, Smooth};
    use crate::gauge::{Density, Gauge, Jump};
    use crate::registry::make_builtin;
    use std::f64::consts::PI;

    fn identity_phi() -> Expr {
        Expr::parse("r", &["r"]).unwrap()
    }

    fn smooth(a: f64, b: f64, delta: &str, d2: Option<&str>) -> DisplacementSpec {
        DisplacementSpec::Smooth(Smooth::from_exprs(Domain::new(a, b).unwrap(), delta, d2).unwrap())
    }

    fn unit_jump() -> DisplacementSpec {
        DisplacementSpec::Stieltjes(
            Gauge::new(
                Domain::new(0.0, 1.0).unwrap(),
                Density::Zero,
                vec![Jump { tau: 0.5, size: 1.0 }],
                vec![],
            )
            .unwrap(),
        )
    }

    #[test]
    fn h1() {
        let r = check_h1(&make_builtin("exponential").unwrap(), 101).unwrap();
        assert_eq!((r.verdict, r.sample_count), (Verdict::Pass, 101));
        assert!(check_h1(&make_builtin("identity_gauge").unwrap(), 11).unwrap().passed());
        let g = DisplacementSpec::FiniteGraph(Graph::new(vec![vec![1.0, 2.0], vec![3.0, 0.0]]).unwrap());
        let r = check_h1(&g, 1).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(
            r.witnesses,
            vec![Witness {
                point: vec![0.0],
                values: vec![1.0]
            }]
        );
    }

    #[test]
    fn h2prime_santiago_matrix() {
        // the matrix as printed violates the triangle inequality at (x1, x3, x4):
        // E[0][3] = 10 > E[0][2] + E[2][3] = 4 + 5
        let g = make_builtin("santiago_graph").unwrap();
        let r = check_h2prime(&g, &identity_phi(), 0).unwrap_err();
        assert!(matches!(r, Error::InvalidArgument(_)));
        let r = check_h2prime(&g, &identity_phi(), 1).unwrap();
        assert_eq!(r.sample_count, 64);
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.witnesses[0].point, vec![0.0, 2.0, 3.0]);
        assert_eq!(r.witnesses[0].values, vec![10.0, 4.0, 5.0]);
        // a concave rescaling restores subadditivity
        let sqrt = Expr::parse("sqrt(r)", &["r"]).unwrap();
        let r = check_h2prime(&g, &sqrt, 1).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn h2prime_other_specs() {
        assert!(
            check_h2prime(&make_builtin("identity_gauge").unwrap(), &identity_phi(), 21)
                .unwrap()
                .passed()
        );
        assert!(check_h2prime(&unit_jump(), &identity_phi(), 21).unwrap().passed());
        let r = check_h2prime(&DisplacementSpec::Angular, &identity_phi(), 32).unwrap();
        assert_eq!((r.verdict, r.sample_count), (Verdict::Pass, 32 * 32 * 32));
        let bad_phi = Expr::parse("r + 1", &["r"]).unwrap();
        let r = check_h2prime(&DisplacementSpec::Angular, &bad_phi, 8).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        let decreasing = Expr::parse("-r", &["r"]).unwrap();
        let r = check_h2prime(&DisplacementSpec::Angular, &decreasing, 8).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn h2_usc() {
        let r = check_h2_usc(&make_builtin("exponential").unwrap(), 21, 8).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        assert_eq!(r.sample_count, 441);
        assert_eq!(check_h2_usc(&unit_jump(), 21, 8).unwrap().verdict, Verdict::Pass);
        let g = make_builtin("santiago_graph").unwrap();
        assert!(matches!(check_h2_usc(&g, 21, 8), Err(Error::UnsupportedVariant { .. })));
        // Δ(x, y) = y - x + [x < 1/2 < y]: from x = 0, points just right of
        // y = 1/2 are Δ-close to y yet one unit further away
        let broken = DisplacementSpec::Smooth(Smooth::new(
            Domain::new(0.0, 1.0).unwrap(),
            Bivariate::native(|x, y| y - x + if x < 0.5 && y > 0.5 { 1.0 } else { 0.0 }),
            None,
        ));
        let r = check_h2_usc(&broken, 5, 8).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.witnesses.iter().any(|w| w.point == vec![0.0, 0.5]));
    }

    #[test]
    fn h3() {
        assert!(check_h3(&make_builtin("exponential").unwrap(), 21).unwrap().passed());
        assert!(check_h3(&unit_jump(), 21).unwrap().passed());
        let sine = smooth(0.0, PI, "sin(y) - sin(x)", None);
        let r = check_h3(&sine, 21).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let y = r.witnesses[0].point[1];
        assert!((y - PI / 2.0).abs() <= PI / 20.0 + 1e-12, "{y}");
        assert!(matches!(
            check_h3(&DisplacementSpec::Angular, 5),
            Err(Error::UnsupportedVariant { .. })
        ));
    }

    #[test]
    fn h4() {
        assert!(check_h4(&make_builtin("exponential").unwrap(), 200, 0)
            .unwrap()
            .passed());
        assert!(check_h4(&unit_jump(), 200, 7).unwrap().passed());
        let a = check_h4(&make_builtin("exponential").unwrap(), 50, 3).unwrap();
        let b = check_h4(&make_builtin("exponential").unwrap(), 50, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn h5() {
        assert!(check_h5(&make_builtin("exponential").unwrap(), 21).unwrap().passed());
        assert!(check_h5(&unit_jump(), 21).unwrap().passed());
        let right = DisplacementSpec::Smooth(Smooth::new(
            Domain::new(0.0, 1.0).unwrap(),
            Bivariate::native(|x, y| {
                let g = |t: f64| t + if t >= 0.5 { 1.0 } else { 0.0 };
                g(y) - g(x)
            }),
            None,
        ));
        let r = check_h5(&right, 11).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.witnesses[0].point[0], 0.5);
    }

    #[test]
    fn d2_positive() {
        let r = check_d2_positive(&make_builtin("exponential").unwrap(), 64).unwrap();
        assert!(r.passed());
        assert!(r.r_estimate.unwrap() >= (-1f64).exp() - 1e-9);
        let cubic = smooth(-1.0, 1.0, "y^3 - x^3", None);
        let r = check_d2_positive(&cubic, 64).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.witnesses.iter().all(|w| w.point[1] == 0.0));
        let lin = smooth(0.0, 1.0, "y - x", None);
        let r = check_d2_positive(&lin, 64).unwrap();
        assert!(r.passed());
        assert!((r.r_estimate.unwrap() - 1.0).abs() < 1e-9);
        assert!(check_d2_positive(&unit_jump(), 8).is_err());
    }

    #[test]
    fn report_json_tags() {
        let r = check_h1(&DisplacementSpec::Angular, 4).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["hypothesis"], "H1");
        assert_eq!(v["verdict"], "pass");
        let r = check_h2prime(&DisplacementSpec::Angular, &identity_phi(), 4).unwrap();
        assert_eq!(serde_json::to_value(&r).unwrap()["hypothesis"], "H2'");
    }
}
