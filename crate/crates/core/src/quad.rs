//! Adaptive Gauss–Kronrod quadrature and a cumulative integral table.
//!
//! The table fixes a partition of `[a, b]` once, stores the running integral at
//! every panel boundary and answers `∫_a^t` queries by adding a single in-panel
//! Kronrod evaluation. Values at panel boundaries come from one accumulation, so
//! two queries in different panels are ordered exactly as their panel sums are.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// 15-point Kronrod abscissae (positive half, descending) and weights; the
// embedded 7-point Gauss rule uses the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Cap on panels per integral; noisy integrands stop here instead of splitting forever.
const MAX_PANELS: usize = 2000;

/// One 15-point Kronrod panel: (integral, |K15 - G7|).
pub fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    if !value.is_finite() {
        return Err(Error::NonFinite { t: center, value });
    }
    Ok((value, ((kronrod - gauss) * half).abs()))
}

/// Sorted, deduplicated cut points strictly inside `(a, b)`, with the ends attached.
pub fn cut_points(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    pts.extend(inner);
    pts.push(b);
    pts
}

#[derive(PartialEq)]
struct Panel {
    err: f64,
    l: f64,
    r: f64,
    val: f64,
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then(other.l.total_cmp(&self.l))
    }
}

/// Globally adaptive bisection: the panel with the largest error estimate is
/// split until the summed estimate meets `tol` or the panel cap is reached.
/// Returns the panels in left-to-right order and the summed error estimate.
fn adaptive(f: &dyn Fn(f64) -> f64, pts: &[f64], tol: f64) -> Result<(Vec<Panel>, f64)> {
    let mut heap = BinaryHeap::new();
    let mut done = Vec::new();
    let mut total_err = 0.0;
    let mut total_val = 0.0;
    for w in pts.windows(2) {
        let (val, err) = gk15(f, w[0], w[1])?;
        total_err += err;
        total_val += val;
        heap.push(Panel {
            err,
            l: w[0],
            r: w[1],
            val,
        });
    }
    while total_err > tol.max(4.0 * f64::EPSILON * total_val.abs()) && heap.len() + done.len() < MAX_PANELS {
        let Some(p) = heap.pop() else { break };
        let mid = 0.5 * (p.l + p.r);
        if !(mid > p.l && mid < p.r) {
            done.push(p);
            continue;
        }
        let (v1, e1) = gk15(f, p.l, mid)?;
        let (v2, e2) = gk15(f, mid, p.r)?;
        total_err += e1 + e2 - p.err;
        total_val += v1 + v2 - p.val;
        heap.push(Panel {
            err: e1,
            l: p.l,
            r: mid,
            val: v1,
        });
        heap.push(Panel {
            err: e2,
            l: mid,
            r: p.r,
            val: v2,
        });
    }
    done.extend(heap.into_vec());
    done.sort_by(|p, q| p.l.total_cmp(&q.l));
    let err = done.iter().map(|p| p.err).sum();
    Ok((done, err))
}

/// Adaptive integral of `f` over `[a, b]`, splitting first at `breaks`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let (panels, err) = adaptive(f, &cut_points(a, b, breaks), tol)?;
    if err > 1e3 * tol.max(f64::EPSILON) {
        return Err(Error::Quadrature { a, b, estimate: err });
    }
    Ok(panels.iter().map(|p| p.val).sum())
}

/// Running integral `t ↦ ∫_a^t f` over a fixed adaptive partition.
#[derive(Debug, Clone)]
pub struct CumulativeTable {
    edges: Vec<f64>,
    cumulative: Vec<f64>,
    min_sample: f64,
}

impl CumulativeTable {
    pub fn build(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidArgument(format!("empty interval [{a}, {b}]")));
        }
        let min_seen = std::cell::Cell::new(f64::INFINITY);
        let tracked = |t: f64| {
            let v = f(t);
            if v < min_seen.get() || v.is_nan() {
                min_seen.set(v);
            }
            v
        };
        let (leaves, err) = adaptive(&tracked, &cut_points(a, b, breaks), tol)?;
        if err > 1e3 * tol.max(f64::EPSILON) {
            return Err(Error::Quadrature { a, b, estimate: err });
        }
        let mut edges = Vec::with_capacity(leaves.len() + 1);
        let mut cumulative = Vec::with_capacity(leaves.len() + 1);
        edges.push(a);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for p in &leaves {
            acc += p.val;
            edges.push(p.r);
            cumulative.push(acc);
        }
        Ok(CumulativeTable {
            edges,
            cumulative,
            min_sample: min_seen.get(),
        })
    }

    /// Smallest integrand value met while building (NaN if one was NaN).
    pub fn min_sample(&self) -> f64 {
        self.min_sample
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn panels(&self) -> usize {
        self.edges.len() - 1
    }

    /// `∫_a^t f`, with `t` clamped into the table's interval.
    pub fn eval(&self, f: &dyn Fn(f64) -> f64, t: f64) -> Result<f64> {
        let n = self.edges.len();
        if t <= self.edges[0] {
            return Ok(0.0);
        }
        if t >= self.edges[n - 1] {
            return Ok(self.cumulative[n - 1]);
        }
        // edges[k] <= t < edges[k+1]
        let k = self.edges.partition_point(|&e| e <= t) - 1;
        let lo = self.cumulative[k];
        if t == self.edges[k] {
            return Ok(lo);
        }
        let hi = self.cumulative[k + 1];
        let (part, _) = gk15(f, self.edges[k], t)?;
        let (min, max) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        Ok((lo + part).clamp(min, max))
    }
}
