//! Displacement spaces on intervals, finite graphs and the circle.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::gauge::{Density, Gauge, GaugeJson};

/// Closed interval `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub a: f64,
    pub b: f64,
}

impl Domain {
    pub fn new(a: f64, b: f64) -> Result<Domain> {
        if a.is_finite() && b.is_finite() && a < b {
            Ok(Domain { a, b })
        } else {
            Err(Error::InvalidArgument(format!("[{a}, {b}] is not a proper interval")))
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.a && t <= self.b
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    /// `n` equispaced points including both ends (the midpoint when `n == 1`).
    pub fn grid(&self, n: usize) -> Vec<f64> {
        match n {
            0 => vec![],
            1 => vec![0.5 * (self.a + self.b)],
            _ => (0..n)
                .map(|i| {
                    if i == n - 1 {
                        self.b
                    } else {
                        self.a + self.width() * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.a, self.b)
    }
}

/// A two-variable function given either as an expression in `x, y` or natively.
#[derive(Clone)]
pub enum Bivariate {
    Expr(Expr),
    Native(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl Bivariate {
    pub fn parse(source: &str) -> Result<Bivariate> {
        Ok(Bivariate::Expr(Expr::parse(source, &["x", "y"])?))
    }

    pub fn native(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Bivariate {
        Bivariate::Native(Arc::new(f))
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            Bivariate::Expr(e) => Ok(e.eval_slots(&[x, y])?),
            Bivariate::Native(f) => {
                let v = f(x, y);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite { t: y, value: v })
                }
            }
        }
    }

    fn source(&self) -> Option<&str> {
        match self {
            Bivariate::Expr(e) => Some(e.source()),
            Bivariate::Native(_) => None,
        }
    }
}

impl fmt::Debug for Bivariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bivariate::Expr(e) => write!(f, "Expr({})", e.source()),
            Bivariate::Native(_) => f.write_str("Native(..)"),
        }
    }
}

/// Smooth displacement on an interval, with an optional closed form for `D2Δ`.
#[derive(Debug, Clone)]
pub struct Smooth {
    domain: Domain,
    delta: Bivariate,
    d2: Option<Bivariate>,
}

impl Smooth {
    pub fn new(domain: Domain, delta: Bivariate, d2: Option<Bivariate>) -> Smooth {
        Smooth { domain, delta, d2 }
    }

    pub fn from_exprs(domain: Domain, delta: &str, d2: Option<&str>) -> Result<Smooth> {
        Ok(Smooth {
            domain,
            delta: Bivariate::parse(delta)?,
            d2: d2.map(Bivariate::parse).transpose()?,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn has_closed_form_d2(&self) -> bool {
        self.d2.is_some()
    }

    /// `Δ(x, y)` without the domain check.
    pub fn raw(&self, x: f64, y: f64) -> Result<f64> {
        self.delta.eval(x, y)
    }

    /// Partial derivative in the second argument.
    ///
    /// Without a closed form this is a Richardson-extrapolated central
    /// difference with step `cbrt(eps)·max(1, |y|)`, switching to one-sided
    /// second-order stencils near the ends of the domain.
    pub fn d2(&self, x: f64, y: f64) -> Result<f64> {
        if let Some(d2) = &self.d2 {
            return d2.eval(x, y);
        }
        let h = f64::EPSILON.cbrt() * y.abs().max(1.0);
        let f = |s: f64| self.delta.eval(x, s);
        let stencil = |h: f64| -> Result<f64> {
            if y - h >= self.domain.a && y + h <= self.domain.b {
                Ok((f(y + h)? - f(y - h)?) / (2.0 * h))
            } else if y + 2.0 * h <= self.domain.b {
                Ok((-3.0 * f(y)? + 4.0 * f(y + h)? - f(y + 2.0 * h)?) / (2.0 * h))
            } else {
                Ok((3.0 * f(y)? - 4.0 * f(y - h)? + f(y - 2.0 * h)?) / (2.0 * h))
            }
        };
        let coarse = stencil(h)?;
        let fine = stencil(0.5 * h)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }

    /// `t ↦ D2Δ(t, t)` as a gauge density, expression-backed when possible.
    pub fn diagonal_density(&self) -> Result<Density> {
        if let Some(Bivariate::Expr(e)) = &self.d2 {
            return Ok(Density::Expr(e.rename_vars(&[("x", "t"), ("y", "t")], &["t"])?));
        }
        let this = self.clone();
        Ok(Density::native(move |t| this.d2(t, t).unwrap_or(f64::NAN)))
    }
}

/// Complete weighted directed graph; `weights[j][k]` is the displacement from vertex j to k.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    weights: Vec<Vec<f64>>,
}

impl Graph {
    pub fn new(weights: Vec<Vec<f64>>) -> Result<Graph> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::InvalidSpec("graph has no vertices".into()));
        }
        if weights.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidSpec("weight matrix is not square".into()));
        }
        if weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::InvalidSpec("weight matrix has non-finite entries".into()));
        }
        Ok(Graph { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, j: usize, k: usize) -> f64 {
        self.weights[j][k]
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    fn vertex(&self, v: f64) -> Result<usize> {
        if v.fract() == 0.0 && v >= 0.0 && (v as usize) < self.len() {
            Ok(v as usize)
        } else {
            Err(Error::OutOfDomain {
                value: v,
                domain: format!("vertices 0..{}", self.len()),
            })
        }
    }
}

/// A displacement together with the set it lives on.
#[derive(Debug, Clone)]
pub enum DisplacementSpec {
    Smooth(Smooth),
    /// `Δ(x, y) = g(y) - g(x)`.
    Stieltjes(Gauge),
    FiniteGraph(Graph),
    /// Minimum counter-clockwise angle on the circle, angles taken mod 2π.
    Angular,
}

/// Normalise an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl DisplacementSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            DisplacementSpec::Smooth(_) => "smooth",
            DisplacementSpec::Stieltjes(_) => "stieltjes",
            DisplacementSpec::FiniteGraph(_) => "graph",
            DisplacementSpec::Angular => "angular",
        }
    }

    /// The interval for Smooth and Stieltjes specs.
    pub fn interval(&self) -> Option<Domain> {
        match self {
            DisplacementSpec::Smooth(s) => Some(s.domain()),
            DisplacementSpec::Stieltjes(g) => Some(g.domain()),
            _ => None,
        }
    }

    pub(crate) fn require_interval(&self, op: &'static str) -> Result<Domain> {
        self.interval()
            .ok_or(Error::UnsupportedVariant { op, kind: self.kind() })
    }

    pub(crate) fn require_smooth(&self, op: &'static str) -> Result<&Smooth> {
        match self {
            DisplacementSpec::Smooth(s) => Ok(s),
            other => Err(Error::UnsupportedVariant { op, kind: other.kind() }),
        }
    }

    /// `Δ(x, y)`. Graph vertices are passed as integral reals.
    pub fn delta(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            DisplacementSpec::Smooth(s) => {
                for v in [x, y] {
                    if !s.domain.contains(v) {
                        return Err(Error::OutOfDomain {
                            value: v,
                            domain: s.domain.to_string(),
                        });
                    }
                }
                s.raw(x, y)
            }
            DisplacementSpec::Stieltjes(g) => Ok(g.eval(y)? - g.eval(x)?),
            DisplacementSpec::FiniteGraph(gr) => Ok(gr.weight(gr.vertex(x)?, gr.vertex(y)?)),
            DisplacementSpec::Angular => {
                if !x.is_finite() || !y.is_finite() {
                    return Err(Error::OutOfDomain {
                        value: if x.is_finite() { y } else { x },
                        domain: "angles".into(),
                    });
                }
                Ok(normalize_angle(normalize_angle(y) - normalize_angle(x)))
            }
        }
    }

    pub fn to_json(&self) -> Result<SpecJson> {
        let mut out = SpecJson {
            domain: None,
            kind: self.kind().to_string(),
            delta: None,
            d2: None,
            gauge: None,
            weights: None,
        };
        match self {
            DisplacementSpec::Smooth(s) => {
                out.domain = Some([s.domain.a, s.domain.b]);
                out.delta = Some(
                    s.delta
                        .source()
                        .ok_or_else(|| Error::Serialization("delta is a native closure".into()))?
                        .to_string(),
                );
                out.d2 = match &s.d2 {
                    None => None,
                    Some(d) => Some(
                        d.source()
                            .ok_or_else(|| Error::Serialization("d2 is a native closure".into()))?
                            .to_string(),
                    ),
                };
            }
            DisplacementSpec::Stieltjes(g) => {
                out.domain = Some([g.domain().a, g.domain().b]);
                out.gauge = Some(g.to_json()?);
            }
            DisplacementSpec::FiniteGraph(gr) => out.weights = Some(gr.weights.clone()),
            DisplacementSpec::Angular => out.domain = Some([0.0, TAU]),
        }
        Ok(out)
    }

    pub fn from_json(json: &SpecJson) -> Result<DisplacementSpec> {
        let domain = || -> Result<Domain> {
            let [a, b] = json
                .domain
                .ok_or_else(|| Error::InvalidSpec(format!("`{}` spec needs a domain", json.kind)))?;
            Domain::new(a, b)
        };
        match json.kind.as_str() {
            "smooth" => {
                let delta = json
                    .delta
                    .as_deref()
                    .ok_or_else(|| Error::InvalidSpec("smooth spec needs `delta`".into()))?;
                Ok(DisplacementSpec::Smooth(Smooth::from_exprs(
                    domain()?,
                    delta,
                    json.d2.as_deref(),
                )?))
            }
            "stieltjes" => {
                let gauge = json
                    .gauge
                    .as_ref()
                    .ok_or_else(|| Error::InvalidSpec("stieltjes spec needs `gauge`".into()))?;
                let g = Gauge::from_json(gauge)?;
                if let Some([a, b]) = json.domain {
                    if a != g.domain().a || b != g.domain().b {
                        return Err(Error::InvalidSpec("spec and gauge domains differ".into()));
                    }
                }
                Ok(DisplacementSpec::Stieltjes(g))
            }
            "graph" => {
                let w = json
                    .weights
                    .clone()
                    .ok_or_else(|| Error::InvalidSpec("graph spec needs `weights`".into()))?;
                Ok(DisplacementSpec::FiniteGraph(Graph::new(w)?))
            }
            "angular" => Ok(DisplacementSpec::Angular),
            other => Err(Error::InvalidSpec(format!("unknown kind `{other}`"))),
        }
    }
}

/// JSON form of a [`DisplacementSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecJson {
    #[serde(default)]
    pub domain: Option<[f64; 2]>,
    pub kind: String,
    #[serde(default)]
    pub delta: Option<String>,
    #[serde(default)]
    pub d2: Option<String>,
    #[serde(default)]
    pub gauge: Option<GaugeJson>,
    #[serde(default)]
    pub weights: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaEstimate {
    pub z: f64,
    pub zbar: f64,
    pub value: f64,
    pub grid_size: usize,
}

/// `γ(z, z̄) = max{1, max_ξ D2Δ(z, ξ) / D2Δ(z̄, ξ)}` over `grid` equispaced `ξ`.
pub fn gamma_estimate(spec: &DisplacementSpec, z: f64, zbar: f64, grid: usize) -> Result<GammaEstimate> {
    let s = spec.require_smooth("gamma_estimate")?;
    let dom = s.domain();
    for v in [z, zbar] {
        if !dom.contains(v) {
            return Err(Error::OutOfDomain {
                value: v,
                domain: dom.to_string(),
            });
        }
    }
    if grid == 0 {
        return Err(Error::InvalidArgument("gamma grid must be non-empty".into()));
    }
    if z == zbar {
        return Ok(GammaEstimate {
            z,
            zbar,
            value: 1.0,
            grid_size: grid,
        });
    }
    let mut value = 1.0f64;
    for xi in dom.grid(grid) {
        let den = s.d2(zbar, xi)?;
        if !(den > 0.0) {
            return Err(Error::NonPositiveD2 {
                x: zbar,
                y: xi,
                value: den,
            });
        }
        value = value.max(s.d2(z, xi)? / den);
    }
    Ok(GammaEstimate {
        z,
        zbar,
        value,
        grid_size: grid,
    })
}

/// Radon–Nikodym density `h_{z,z̄}(t) = D2Δ(z, t) / D2Δ(z̄, t)` of `μ_z` w.r.t. `μ_z̄`.
pub fn rn_density(spec: &DisplacementSpec, z: f64, zbar: f64, t: f64) -> Result<f64> {
    let s = spec.require_smooth("rn_density")?;
    let den = s.d2(zbar, t)?;
    if !(den > 0.0) {
        return Err(Error::NonPositiveD2 {
            x: zbar,
            y: t,
            value: den,
        });
    }
    if z == zbar {
        return Ok(1.0);
    }
    Ok(s.d2(z, t)? / den)
}

/// An interval with open/closed ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ball {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Ball {
    pub fn contains(&self, t: f64) -> bool {
        let above = if self.lo_closed { t >= self.lo } else { t > self.lo };
        let below = if self.hi_closed { t <= self.hi } else { t < self.hi };
        above && below
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// `B_Δ(x, r) = {t : |Δ(x, t)| < r}` for an interval displacement that is
/// nondecreasing in its second argument.
///
/// Each end is bracketed by bisection until the bracket stops shrinking. If Δ
/// changes by at most `tol·(1 + r)` across the final bracket the end solves
/// `Δ(x, ·) = ±r` and lies outside the ball; across a discontinuity (snapped
/// to the gauge jump for Stieltjes specs) membership is decided by evaluating
/// Δ there.
pub fn delta_ball(spec: &DisplacementSpec, x: f64, r: f64, tol: f64) -> Result<Ball> {
    let dom = spec.require_interval("delta_ball")?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("ball radius must be positive, got {r}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if !dom.contains(x) {
        return Err(Error::OutOfDomain {
            value: x,
            domain: dom.to_string(),
        });
    }
    let d = |t: f64| spec.delta(x, t);
    let inside = |t: f64| -> Result<bool> { Ok(d(t)?.abs() < r) };
    let jumps: Vec<f64> = match spec {
        DisplacementSpec::Stieltjes(g) => g.jumps().iter().map(|j| j.tau).collect(),
        _ => vec![],
    };
    let continuity_gap = tol * (1.0 + r);

    let (lo, lo_closed) = if d(dom.a)? > -r {
        (dom.a, true)
    } else {
        // Δ(x, out) <= -r < Δ(x, inn)
        let (mut out, mut inn) = (dom.a, x);
        loop {
            let mid = 0.5 * (out + inn);
            if mid <= out || mid >= inn {
                break;
            }
            if d(mid)? > -r {
                inn = mid;
            } else {
                out = mid;
            }
        }
        if d(inn)? - d(out)? <= continuity_gap {
            (inn, false)
        } else {
            let p = jumps
                .iter()
                .copied()
                .find(|&j| j >= out && j <= inn)
                .unwrap_or(0.5 * (out + inn));
            (p, inside(p)?)
        }
    };
    let (hi, hi_closed) = if d(dom.b)? < r {
        (dom.b, true)
    } else {
        let (mut inn, mut out) = (x, dom.b);
        loop {
            let mid = 0.5 * (out + inn);
            if mid <= inn || mid >= out {
                break;
            }
            if d(mid)? < r {
                inn = mid;
            } else {
                out = mid;
            }
        }
        if d(out)? - d(inn)? <= continuity_gap {
            (out, false)
        } else {
            let p = jumps
                .iter()
                .copied()
                .find(|&j| j >= inn && j <= out)
                .unwrap_or(0.5 * (out + inn));
            (p, inside(p)?)
        }
    };
    Ok(Ball {
        lo,
        hi,
        lo_closed,
        hi_closed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::Jump;
    use crate::registry::make_builtin;
    use std::f64::consts::{E, FRAC_PI_2, PI};

    fn exponential() -> DisplacementSpec {
        make_builtin("exponential").unwrap()
    }

    #[test]
    fn builtin_values() {
        let g = make_builtin("santiago_graph").unwrap();
        assert_eq!(g.delta(0.0, 2.0).unwrap(), 4.0);
        let ex = exponential();
        // the formula gives Δ(1, 0) = e^{-1} - e and Δ(0, 1) = e - e^{-1}
        assert!((ex.delta(1.0, 0.0).unwrap() - (1.0 / E - E)).abs() < 1e-15);
        assert!((ex.delta(0.0, 1.0).unwrap() - (E - 1.0 / E)).abs() < 1e-15);
        assert_ne!(ex.delta(1.0, 0.0).unwrap(), ex.delta(0.0, 1.0).unwrap());
        let id = make_builtin("identity_gauge").unwrap();
        assert_eq!(id.delta(0.25, 0.75).unwrap(), 0.5);
    }

    #[test]
    fn diagonal_is_zero() {
        for spec in [
            exponential(),
            make_builtin("identity_gauge").unwrap(),
            DisplacementSpec::Angular,
        ] {
            for c in [0.0, 0.3, 0.77, 1.0] {
                assert_eq!(spec.delta(c, c).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn roundabout_angles() {
        let r = DisplacementSpec::Angular;
        assert!((r.delta(0.0, FRAC_PI_2).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((r.delta(FRAC_PI_2, 0.0).unwrap() - 3.0 * FRAC_PI_2).abs() < 1e-15);
        assert_eq!(normalize_angle(TAU), 0.0);
        assert_eq!(normalize_angle(-1e-300), 0.0);
        for (x, y) in [(-7.0, 3.0), (100.0, -2.5), (PI, PI + TAU)] {
            let v = r.delta(x, y).unwrap();
            assert!((0.0..TAU).contains(&v));
        }
    }

    #[test]
    fn out_of_domain_inputs() {
        assert!(matches!(exponential().delta(1.5, 0.0), Err(Error::OutOfDomain { .. })));
        let g = make_builtin("santiago_graph").unwrap();
        assert!(g.delta(4.0, 0.0).is_err());
        assert!(g.delta(0.5, 0.0).is_err());
        assert!(DisplacementSpec::Angular.delta(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn finite_difference_d2_matches_closed_form() {
        let closed = exponential();
        let closed = closed.require_smooth("t").unwrap();
        let fd = Smooth::from_exprs(closed.domain(), "exp(y^2 - x^2) - exp(x - y)", None).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.3, 0.9), (1.0, 1.0), (0.5, 0.0), (0.2, 0.5)] {
            let a = closed.d2(x, y).unwrap();
            let b = fd.d2(x, y).unwrap();
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "({x},{y}): {a} vs {b}");
        }
    }

    #[test]
    fn gamma_basics() {
        let ex = exponential();
        assert_eq!(gamma_estimate(&ex, 0.5, 0.5, 64).unwrap().value, 1.0);
        let lin = DisplacementSpec::Smooth(Smooth::from_exprs(Domain::new(0.0, 1.0).unwrap(), "y - x", None).unwrap());
        assert!((gamma_estimate(&lin, 0.1, 0.9, 32).unwrap().value - 1.0).abs() < 1e-9);
        let g01 = gamma_estimate(&ex, 0.0, 1.0, 256).unwrap();
        let g10 = gamma_estimate(&ex, 1.0, 0.0, 256).unwrap();
        assert!(g01.value >= 1.0 && g10.value >= 1.0);
        assert!(g01.value * g10.value >= 1.0);
        // oracle: max over the same 256-point grid of the closed-form ratio
        let brute = (0..256)
            .map(|i| {
                let t = i as f64 / 255.0;
                (2.0 * t * (t * t).exp() + (-t).exp()) / (2.0 * t * (t * t - 1.0).exp() + (1.0 - t).exp())
            })
            .fold(1.0, f64::max);
        assert!((g01.value - brute).abs() < 1e-12, "{} vs {brute}", g01.value);
        assert!((g01.value - 1.934814366).abs() < 1e-8);
        assert!((g10.value - E).abs() < 1e-12);
        assert!(matches!(
            gamma_estimate(&DisplacementSpec::Angular, 0.0, 1.0, 8),
            Err(Error::UnsupportedVariant { .. })
        ));
    }

    #[test]
    fn rn_density_identities() {
        let ex = exponential();
        assert_eq!(rn_density(&ex, 0.4, 0.4, 0.9).unwrap(), 1.0);
        let h = rn_density(&ex, 0.2, 0.8, 0.5).unwrap();
        let k = rn_density(&ex, 0.8, 0.2, 0.5).unwrap();
        assert!((h * k - 1.0).abs() < 1e-12);
        let cubic = DisplacementSpec::Smooth(
            Smooth::from_exprs(Domain::new(-1.0, 1.0).unwrap(), "y^3 - x^3", Some("3*y^2")).unwrap(),
        );
        assert!(matches!(
            rn_density(&cubic, 0.5, 0.1, 0.0),
            Err(Error::NonPositiveD2 { .. })
        ));
    }

    #[test]
    fn balls() {
        let id = make_builtin("identity_gauge").unwrap();
        let b = delta_ball(&id, 0.5, 0.2, 1e-12).unwrap();
        assert!((b.lo - 0.3).abs() < 1e-11 && (b.hi - 0.7).abs() < 1e-11);
        assert!(!b.lo_closed && !b.hi_closed);
        assert!(b.contains(0.5));

        // oracle: bisection on e^{y^2} - e^{-y} = 1
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if (m * m).exp() - (-m).exp() < 1.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        let ex = exponential();
        let b = delta_ball(&ex, 0.0, 1.0, 1e-12).unwrap();
        assert_eq!((b.lo, b.lo_closed), (0.0, true));
        assert!((b.hi - lo).abs() < 1e-11);
        assert!(!b.hi_closed);
        assert!((ex.delta(0.0, b.hi).unwrap() - 1.0).abs() <= 1e-12 * 2.0);

        // whole domain when r is large
        let all = delta_ball(&id, 0.5, 10.0, 1e-9).unwrap();
        assert_eq!((all.lo, all.hi, all.lo_closed, all.hi_closed), (0.0, 1.0, true, true));

        // jump at 0.6 of size 1 on top of g(t) = t: Δ(0.5, ·) jumps past r = 0.3
        let g = Gauge::new(
            Domain::new(0.0, 1.0).unwrap(),
            Density::Constant(1.0),
            vec![Jump { tau: 0.6, size: 1.0 }],
            vec![],
        )
        .unwrap();
        let st = DisplacementSpec::Stieltjes(g);
        let b = delta_ball(&st, 0.5, 0.3, 1e-12).unwrap();
        assert_eq!(b.hi, 0.6);
        assert!(b.hi_closed);
        assert!((b.lo - 0.2).abs() < 1e-11);

        assert!(matches!(
            delta_ball(&DisplacementSpec::Angular, 0.0, 1.0, 1e-9),
            Err(Error::UnsupportedVariant { .. })
        ));
        assert!(delta_ball(&id, 0.5, 0.0, 1e-9).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        for name in ["exponential", "santiago_graph", "identity_gauge", "roundabout"] {
            let spec = make_builtin(name).unwrap();
            let json = serde_json::to_string(&spec.to_json().unwrap()).unwrap();
            let back = DisplacementSpec::from_json(&serde_json::from_str(&json).unwrap()).unwrap();
            assert_eq!(back.kind(), spec.kind());
            let (x, y) = if name == "santiago_graph" {
                (3.0, 1.0)
            } else {
                (0.2, 0.9)
            };
            assert_eq!(back.delta(x, y).unwrap(), spec.delta(x, y).unwrap());
        }
        let bad: SpecJson = serde_json::from_str(r#"{"kind":"smooth","domain":[0,1]}"#).unwrap();
        assert!(matches!(DisplacementSpec::from_json(&bad), Err(Error::InvalidSpec(_))));
        let bad: SpecJson = serde_json::from_str(r#"{"kind":"wat"}"#).unwrap();
        assert!(DisplacementSpec::from_json(&bad).is_err());
        let bad: SpecJson = serde_json::from_str(r#"{"kind":"graph","weights":[[0,1],[1]]}"#).unwrap();
        assert!(DisplacementSpec::from_json(&bad).is_err());
    }
}
