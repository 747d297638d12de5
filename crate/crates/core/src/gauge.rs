//! Left-continuous nondecreasing gauges and their Lebesgue–Stieltjes measures.
//!
//! A gauge on `[a, b]` is stored as an absolutely continuous part (a density),
//! a sorted list of jumps and an optional list of declared flat intervals:
//!
//! ```text
//! g(t) = ∫_a^t density + Σ_{τ_i < t} size_i,      g(a) = 0
//! ```
//!
//! The strict inequality `τ_i < t` is what makes `g` left-continuous.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::displacement::{Domain, Smooth};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quad::CumulativeTable;

/// Default absolute tolerance for the continuous part.
pub const DEFAULT_QUAD_TOL: f64 = 1e-12;

/// Query points closer than this to a constancy endpoint are treated as excluded.
pub const SNAP_RADIUS: f64 = 1e-12;

const FLAT_SAMPLES: usize = 2000;

/// Absolutely continuous part of a gauge, `d(g_c)/dt`.
#[derive(Clone)]
pub enum Density {
    Zero,
    Constant(f64),
    /// Expression in the single variable `t`.
    Expr(Expr),
    Native(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Density {
    pub fn expr(source: &str) -> Result<Density> {
        Ok(Density::Expr(Expr::parse(source, &["t"])?))
    }

    pub fn native(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Density {
        Density::Native(Arc::new(f))
    }

    /// Value at `t`; expression domain errors come back as NaN and are
    /// rejected by the quadrature layer.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Density::Zero => 0.0,
            Density::Constant(c) => *c,
            Density::Expr(e) => e.eval_slots(&[t]).unwrap_or(f64::NAN),
            Density::Native(f) => f(t),
        }
    }

    fn to_source(&self) -> Option<String> {
        match self {
            Density::Zero => Some("0".into()),
            Density::Constant(c) => Some(format!("{c}")),
            Density::Expr(e) => Some(e.source().to_string()),
            Density::Native(_) => None,
        }
    }
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::Zero => f.write_str("Zero"),
            Density::Constant(c) => write!(f, "Constant({c})"),
            Density::Expr(e) => write!(f, "Expr({})", e.source()),
            Density::Native(_) => f.write_str("Native(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub tau: f64,
    pub size: f64,
}

/// Interval shapes accepted by [`Gauge::measure`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interval {
    /// `[c, d)`
    ClosedOpen(f64, f64),
    /// `(c, d)`
    Open(f64, f64),
    /// `[c, d]`
    Closed(f64, f64),
    /// `(c, d]`
    OpenClosed(f64, f64),
    /// `{c}`
    Point(f64),
}

#[derive(Clone)]
pub struct Gauge {
    domain: Domain,
    density: Density,
    jumps: Vec<Jump>,
    // prefix[k] = size_0 + ... + size_{k-1}, summed left to right
    prefix: Vec<f64>,
    flats: Vec<(f64, f64)>,
    quad_tol: f64,
    table: Arc<OnceLock<Result<CumulativeTable>>>,
}

impl fmt::Debug for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gauge")
            .field("domain", &self.domain)
            .field("density", &self.density)
            .field("jumps", &self.jumps)
            .field("flats", &self.flats)
            .finish()
    }
}

impl Gauge {
    /// Build and validate a gauge. Jumps may be given in any order; duplicate
    /// positions, non-positive sizes and overlapping flats are rejected.
    pub fn new(domain: Domain, density: Density, jumps: Vec<Jump>, flats: Vec<(f64, f64)>) -> Result<Gauge> {
        let Domain { a, b } = domain;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidGauge(format!("bad domain [{a}, {b}]")));
        }
        let mut jumps = jumps;
        jumps.sort_by(|p, q| p.tau.total_cmp(&q.tau));
        for j in &jumps {
            if !(j.tau >= a && j.tau <= b) {
                return Err(Error::InvalidGauge(format!("jump at {} outside [{a}, {b}]", j.tau)));
            }
            if !(j.size > 0.0 && j.size.is_finite()) {
                return Err(Error::InvalidGauge(format!("jump at {} has size {}", j.tau, j.size)));
            }
        }
        if jumps.windows(2).any(|w| w[0].tau == w[1].tau) {
            return Err(Error::InvalidGauge("two jumps at the same point".into()));
        }
        let mut flats = flats;
        flats.sort_by(|p, q| p.0.total_cmp(&q.0));
        for &(l, r) in &flats {
            if !(l < r && l >= a && r <= b) {
                return Err(Error::InvalidGauge(format!("flat ({l}, {r}) not inside ({a}, {b})")));
            }
            if jumps.iter().any(|j| j.tau > l && j.tau < r) {
                return Err(Error::InvalidGauge(format!("flat ({l}, {r}) contains a jump")));
            }
        }
        if flats.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::InvalidGauge("flat intervals overlap".into()));
        }
        for &(l, r) in &flats {
            for k in 1..16 {
                let t = l + (r - l) * k as f64 / 16.0;
                let v = density.eval(t);
                if v != 0.0 {
                    return Err(Error::InvalidGauge(format!(
                        "density is {v} at {t}, inside declared flat ({l}, {r})"
                    )));
                }
            }
        }
        if let Density::Constant(c) = density {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::InvalidGauge(format!("constant density {c}")));
            }
        }
        let mut prefix = Vec::with_capacity(jumps.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for j in &jumps {
            acc += j.size;
            prefix.push(acc);
        }
        Ok(Gauge {
            domain,
            density,
            jumps,
            prefix,
            flats,
            quad_tol: DEFAULT_QUAD_TOL,
            table: Arc::new(OnceLock::new()),
        })
    }

    /// `g(t) = t - a`.
    pub fn identity(a: f64, b: f64) -> Result<Gauge> {
        Gauge::new(Domain::new(a, b)?, Density::Constant(1.0), vec![], vec![])
    }

    pub fn with_quad_tol(mut self, tol: f64) -> Gauge {
        self.quad_tol = tol;
        self.table = Arc::new(OnceLock::new());
        self
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn flats(&self) -> &[(f64, f64)] {
        &self.flats
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    /// Density value at `t` (zero for pure-jump gauges).
    pub fn density_at(&self, t: f64) -> f64 {
        self.density.eval(t)
    }

    pub fn has_density(&self) -> bool {
        !matches!(self.density, Density::Zero | Density::Constant(0.0))
    }

    /// Jump size at exactly `t`, or zero.
    pub fn jump_at(&self, t: f64) -> f64 {
        match self.jumps.binary_search_by(|j| j.tau.total_cmp(&t)) {
            Ok(k) => self.jumps[k].size,
            Err(_) => 0.0,
        }
    }

    /// Jump positions and flat endpoints: the places where quadrature must split.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.jumps.iter().map(|j| j.tau).collect();
        for &(l, r) in &self.flats {
            pts.push(l);
            pts.push(r);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn table(&self) -> Result<&CumulativeTable> {
        let built = self.table.get_or_init(|| {
            let f = |t: f64| self.density.eval(t);
            let table = CumulativeTable::build(&f, self.domain.a, self.domain.b, &self.breakpoints(), self.quad_tol)?;
            let min = table.min_sample();
            if min.is_nan() || min < 0.0 {
                return Err(Error::InvalidGauge(format!("density takes the value {min}")));
            }
            Ok(table)
        });
        built.as_ref().map_err(Clone::clone)
    }

    /// Force construction of the cumulative table (surfacing density errors).
    pub fn prepare(&self) -> Result<()> {
        match self.density {
            Density::Zero | Density::Constant(_) => Ok(()),
            _ => self.table().map(|_| ()),
        }
    }

    /// Smallest density value seen at quadrature nodes.
    pub fn min_density_sample(&self) -> Result<f64> {
        match self.density {
            Density::Zero => Ok(0.0),
            Density::Constant(c) => Ok(c),
            _ => Ok(self.table()?.min_sample()),
        }
    }

    fn continuous_part(&self, t: f64) -> Result<f64> {
        match &self.density {
            Density::Zero => Ok(0.0),
            Density::Constant(c) => Ok(c * (t - self.domain.a)),
            d => {
                let f = |s: f64| d.eval(s);
                self.table()?.eval(&f, t)
            }
        }
    }

    fn check(&self, t: f64) -> Result<()> {
        if self.domain.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                value: t,
                domain: self.domain.to_string(),
            })
        }
    }

    /// Left-continuous value `g(t) = μ([a, t))`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        let below = self.jumps.partition_point(|j| j.tau < t);
        Ok(self.continuous_part(t)? + self.prefix[below])
    }

    /// Right limit `g(t⁺)`; at `b` this is `g(b)` plus any jump sitting at `b`.
    pub fn eval_right(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        let upto = self.jumps.partition_point(|j| j.tau <= t);
        Ok(self.continuous_part(t)? + self.prefix[upto])
    }

    /// Lebesgue–Stieltjes measure of an interval or singleton.
    pub fn measure(&self, interval: Interval) -> Result<f64> {
        let (c, d) = match interval {
            Interval::ClosedOpen(c, d) | Interval::Open(c, d) | Interval::Closed(c, d) | Interval::OpenClosed(c, d) => {
                (c, d)
            }
            Interval::Point(c) => (c, c),
        };
        if !(c <= d) {
            return Err(Error::MalformedInterval(format!(
                "{interval:?}: left end exceeds right end"
            )));
        }
        if !self.domain.contains(c) || !self.domain.contains(d) {
            return Err(Error::MalformedInterval(format!("{interval:?} leaves {}", self.domain)));
        }
        let value = match interval {
            Interval::ClosedOpen(..) => self.eval(d)? - self.eval(c)?,
            Interval::Point(_) => self.eval_right(c)? - self.eval(c)?,
            Interval::Open(..) if c == d => 0.0,
            Interval::Open(..) => self.eval(d)? - self.eval_right(c)?,
            Interval::Closed(..) => self.eval_right(d)? - self.eval(c)?,
            Interval::OpenClosed(..) if c == d => 0.0,
            Interval::OpenClosed(..) => self.eval_right(d)? - self.eval_right(c)?,
        };
        Ok(value.max(0.0))
    }

    /// Jump points, constancy intervals and their non-jump endpoints.
    pub fn distinguished_sets(&self) -> DistinguishedSets {
        let Domain { a, b } = self.domain;
        let d_set: Vec<f64> = self.jumps.iter().map(|j| j.tau).collect();
        let mut candidates: Vec<(f64, f64)> = self.flats.clone();

        let zero_runs: Vec<(f64, f64)> = match self.density {
            Density::Zero | Density::Constant(0.0) => vec![(a, b)],
            Density::Constant(_) => vec![],
            _ => {
                let samples: Vec<(f64, f64)> = (0..=FLAT_SAMPLES)
                    .map(|i| {
                        let t = a + (b - a) * i as f64 / FLAT_SAMPLES as f64;
                        (t, self.density.eval(t))
                    })
                    .collect();
                let max = samples.iter().map(|s| s.1).fold(0.0, f64::max);
                let thresh = 1e-12 * (1.0 + max);
                let mut runs = Vec::new();
                let mut start: Option<f64> = None;
                let mut last = a;
                for &(t, v) in &samples {
                    if v.abs() < thresh {
                        start.get_or_insert(t);
                        last = t;
                    } else if let Some(s) = start.take() {
                        if last > s {
                            runs.push((s, last));
                        }
                    }
                }
                if let Some(s) = start {
                    if last > s {
                        runs.push((s, last));
                    }
                }
                runs
            }
        };
        // constancy intervals never straddle a jump
        for (l, r) in zero_runs {
            let mut lo = l;
            for j in self.jumps.iter().filter(|j| j.tau > l && j.tau < r) {
                candidates.push((lo, j.tau));
                lo = j.tau;
            }
            candidates.push((lo, r));
        }
        candidates.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut c_set: Vec<(f64, f64)> = Vec::new();
        for (l, r) in candidates {
            if let Some(last) = c_set.last_mut() {
                let touching = l < last.1 || (l == last.1 && self.jump_at(l) == 0.0);
                if touching {
                    last.1 = last.1.max(r);
                    continue;
                }
            }
            c_set.push((l, r));
        }
        let mut n_set: Vec<f64> = c_set
            .iter()
            .flat_map(|&(l, r)| [l, r])
            .filter(|p| !d_set.contains(p))
            .collect();
        n_set.sort_by(f64::total_cmp);
        n_set.dedup();
        DistinguishedSets { d_set, c_set, n_set }
    }

    /// JSON form; fails for natively defined densities.
    pub fn to_json(&self) -> Result<GaugeJson> {
        let density = self
            .density
            .to_source()
            .ok_or_else(|| Error::Serialization("gauge density is a native closure".into()))?;
        Ok(GaugeJson {
            domain: [self.domain.a, self.domain.b],
            density,
            jumps: self.jumps.iter().map(|j| [j.tau, j.size]).collect(),
            flats: self.flats.iter().map(|&(l, r)| [l, r]).collect(),
        })
    }

    pub fn from_json(json: &GaugeJson) -> Result<Gauge> {
        let density = match json.density.trim() {
            "0" => Density::Zero,
            src => Density::expr(src)?,
        };
        Gauge::new(
            Domain::new(json.domain[0], json.domain[1])?,
            density,
            json.jumps.iter().map(|&[tau, size]| Jump { tau, size }).collect(),
            json.flats.iter().map(|&[l, r]| (l, r)).collect(),
        )
    }
}

/// On-disk gauge: `{"domain":[a,b],"density":"<expr in t>","jumps":[[tau,size]],"flats":[[l,r]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeJson {
    pub domain: [f64; 2],
    #[serde(default = "zero_density")]
    pub density: String,
    #[serde(default)]
    pub jumps: Vec<[f64; 2]>,
    #[serde(default)]
    pub flats: Vec<[f64; 2]>,
}

fn zero_density() -> String {
    "0".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    ContinuityPoint,
    JumpPoint,
    ExcludedPoint,
}

/// Part of the excluded set `O = C ∪ N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Open(f64, f64),
    Point(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistinguishedSets {
    pub d_set: Vec<f64>,
    pub c_set: Vec<(f64, f64)>,
    pub n_set: Vec<f64>,
}

impl DistinguishedSets {
    pub fn o_set(&self) -> Vec<Region> {
        let mut out: Vec<Region> = self.c_set.iter().map(|&(l, r)| Region::Open(l, r)).collect();
        out.extend(self.n_set.iter().map(|&p| Region::Point(p)));
        out
    }

    pub fn is_excluded(&self, x: f64) -> bool {
        self.c_set.iter().any(|&(l, r)| x > l && x < r) || self.n_set.iter().any(|&p| (x - p).abs() <= SNAP_RADIUS)
    }

    pub fn classify(&self, x: f64) -> PointClass {
        if self.is_excluded(x) {
            PointClass::ExcludedPoint
        } else if self.d_set.iter().any(|&p| (x - p).abs() <= SNAP_RADIUS) {
            PointClass::JumpPoint
        } else {
            PointClass::ContinuityPoint
        }
    }
}

/// Gauge of a smooth displacement: density `t ↦ D2Δ(t, t)`, no jumps.
pub fn gauge_from_smooth(spec: &Smooth, quad_tol: f64) -> Result<Gauge> {
    let density = spec.diagonal_density()?;
    let dom = spec.domain();
    let worst = dom
        .grid(1001)
        .into_iter()
        .map(|t| (t, density.eval(t)))
        .fold((dom.a, f64::INFINITY), |acc, (t, v)| {
            if v < acc.1 || v.is_nan() && !acc.1.is_nan() {
                (t, v)
            } else {
                acc
            }
        });
    let non_positive = |t: f64, value: f64| Error::NonPositiveD2 { x: t, y: t, value };
    if !(worst.1 > 0.0) {
        return Err(non_positive(worst.0, worst.1));
    }
    let gauge = Gauge::new(dom, density, vec![], vec![])?.with_quad_tol(quad_tol);
    let min = match gauge.min_density_sample() {
        Ok(m) => m,
        Err(Error::InvalidGauge(_)) => f64::NAN,
        Err(e) => return Err(e),
    };
    if !(min > 0.0) {
        return Err(non_positive(f64::NAN, min));
    }
    Ok(gauge)
}
