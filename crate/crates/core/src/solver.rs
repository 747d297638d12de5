//! Stieltjes initial-value problems `u'_g = F(t, u)` and the stationary
//! surface problem `u'_W(x) = -∫_a^x h`, `u(b) = C`.
//!
//! Trajectories are left-continuous: the value stored at an atom `τ` is the
//! value before the jump, and the jump itself is kept as a separate record.

use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::displacement::Domain;
use crate::error::{Error, Result};
use crate::gauge::Gauge;
use crate::quad::{self, CumulativeTable};

/// Mesh points closer than this to an atom are merged into it.
const MERGE_RADIUS: f64 = 1e-12;

#[derive(Clone)]
pub struct IvpProblem {
    pub gauge: Gauge,
    pub rhs: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub u0: f64,
    pub interval: Domain,
}

impl IvpProblem {
    pub fn new(gauge: Gauge, rhs: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, u0: f64) -> IvpProblem {
        let interval = gauge.domain();
        IvpProblem {
            gauge,
            rhs: Arc::new(rhs),
            u0,
            interval,
        }
    }

    pub fn on(mut self, interval: Domain) -> IvpProblem {
        self.interval = interval;
        self
    }

    fn validate(&self) -> Result<()> {
        let dom = self.gauge.domain();
        if !(dom.contains(self.interval.a) && dom.contains(self.interval.b)) {
            return Err(Error::InvalidArgument(format!(
                "interval {} is not inside the gauge domain {dom}",
                self.interval
            )));
        }
        if !self.u0.is_finite() {
            return Err(Error::InvalidArgument(format!("initial value {}", self.u0)));
        }
        Ok(())
    }
}

impl fmt::Debug for IvpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IvpProblem")
            .field("gauge", &self.gauge)
            .field("u0", &self.u0)
            .field("interval", &self.interval)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpRecord {
    pub tau: f64,
    pub u_before: f64,
    pub u_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IvpSolution {
    /// `(t, u(t))` with `u(t)` the left value.
    pub nodes: Vec<(f64, f64)>,
    pub jump_records: Vec<JumpRecord>,
    pub method: String,
    /// Largest mesh step.
    pub step_stat: f64,
}

impl IvpSolution {
    pub fn final_value(&self) -> f64 {
        self.nodes.last().map(|n| n.1).unwrap_or(f64::NAN)
    }

    fn right_value(&self, k: usize) -> f64 {
        let (t, u) = self.nodes[k];
        self.jump_records.iter().find(|r| r.tau == t).map_or(u, |r| r.u_after)
    }

    /// Left-continuous piecewise-linear interpolant.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let (first, last) = (self.nodes[0].0, self.nodes[self.nodes.len() - 1].0);
        if !(t >= first && t <= last) {
            return Err(Error::OutOfDomain {
                value: t,
                domain: format!("[{first}, {last}]"),
            });
        }
        let k = self.nodes.partition_point(|n| n.0 < t);
        if self.nodes[k].0 == t {
            return Ok(self.nodes[k].1);
        }
        let (t0, t1) = (self.nodes[k - 1].0, self.nodes[k].0);
        let (u0, u1) = (self.right_value(k - 1), self.nodes[k].1);
        Ok(u0 + (u1 - u0) * (t - t0) / (t1 - t0))
    }

    /// `t,u` rows; an atom contributes a second row with the post-jump value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,u\n");
        for &(t, u) in &self.nodes {
            writeln!(out, "{t:.16e},{u:.16e}").unwrap();
            if let Some(r) = self.jump_records.iter().find(|r| r.tau == t) {
                writeln!(out, "{t:.16e},{:.16e}", r.u_after).unwrap();
            }
        }
        out
    }
}

/// Uniform mesh of `[a, b]` with spacing at most `step`, with every atom of
/// `g` inside `[a, b)` inserted.
fn build_mesh(g: &Gauge, interval: Domain, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    let Domain { a, b } = interval;
    let n = ((b - a) / step).ceil();
    if !(1.0..1e9).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "step {step} gives an unusable mesh on {interval}"
        )));
    }
    let n = n as usize;
    let atoms: Vec<f64> = g.jumps().iter().map(|j| j.tau).filter(|&t| t >= a && t < b).collect();
    let mut mesh: Vec<f64> = (0..=n)
        .map(|k| if k == n { b } else { a + (b - a) * k as f64 / n as f64 })
        .filter(|&t| atoms.iter().all(|&tau| (t - tau).abs() > MERGE_RADIUS) || t == a || t == b)
        .collect();
    mesh.extend(atoms.iter().filter(|&&t| t != a));
    mesh.sort_by(f64::total_cmp);
    mesh.dedup();
    Ok(mesh)
}

fn max_step(mesh: &[f64]) -> f64 {
    mesh.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// `g(t)` and `g(t⁺)` at every mesh point.
fn gauge_on_mesh(g: &Gauge, mesh: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let left = mesh.iter().map(|&t| g.eval(t)).collect::<Result<Vec<f64>>>()?;
    let right = mesh
        .iter()
        .zip(&left)
        .map(|(&t, &l)| if g.jump_at(t) > 0.0 { g.eval_right(t) } else { Ok(l) })
        .collect::<Result<Vec<f64>>>()?;
    Ok((left, right))
}

fn blow_up(t: f64, last: (f64, f64)) -> Error {
    Error::BlowUp {
        t,
        last_t: last.0,
        last_u: last.1,
    }
}

/// Explicit g-Euler, optionally followed by Picard sweeps.
///
/// Atoms are crossed with the exact update `u⁺ = u + F(τ, u)·μ({τ})`; between
/// mesh points the increment is `F(t_k, u(t_k⁺))·(g(t_{k+1}) - g(t_k⁺))`.
/// Each Picard sweep replaces the trajectory by
/// `u0 + ∫_{[a, t)} F(s, u(s)) dμ_g`, the continuous part by the trapezoid
/// rule on the mesh.
pub fn solve_ivp(p: &IvpProblem, step: f64, picard_sweeps: usize) -> Result<IvpSolution> {
    p.validate()?;
    let g = &p.gauge;
    let mesh = build_mesh(g, p.interval, step)?;
    let (gl, gr) = gauge_on_mesh(g, &mesh)?;
    let rhs = |t: f64, u: f64| (p.rhs)(t, u);

    let mut u = Vec::with_capacity(mesh.len());
    let mut records = Vec::new();
    let mut current = p.u0;
    for k in 0..mesh.len() {
        let t = mesh[k];
        u.push(current);
        if k + 1 == mesh.len() {
            break;
        }
        let size = g.jump_at(t);
        if size > 0.0 {
            let after = current + rhs(t, current) * size;
            if !after.is_finite() {
                return Err(blow_up(t, (t, current)));
            }
            records.push(JumpRecord {
                tau: t,
                u_before: current,
                u_after: after,
            });
            current = after;
        }
        let next = current + rhs(t, current) * (gl[k + 1] - gr[k]);
        if !next.is_finite() {
            return Err(blow_up(mesh[k + 1], (t, u[k])));
        }
        current = next;
    }

    for _ in 0..picard_sweeps {
        let mut next = Vec::with_capacity(mesh.len());
        let mut next_records = Vec::new();
        let mut acc = 0.0;
        next.push(p.u0);
        for k in 0..mesh.len() - 1 {
            let t = mesh[k];
            let size = g.jump_at(t);
            let mut right = u[k];
            if size > 0.0 {
                let f = rhs(t, u[k]);
                acc += f * size;
                right = u[k] + f * size;
            }
            acc += 0.5 * (rhs(t, right) + rhs(mesh[k + 1], u[k + 1])) * (gl[k + 1] - gr[k]);
            let v = p.u0 + acc;
            if !v.is_finite() {
                return Err(blow_up(mesh[k + 1], (t, next[k])));
            }
            next.push(v);
        }
        for (k, &t) in mesh.iter().enumerate().take(mesh.len() - 1) {
            let size = g.jump_at(t);
            if size > 0.0 {
                next_records.push(JumpRecord {
                    tau: t,
                    u_before: next[k],
                    u_after: next[k] + rhs(t, next[k]) * size,
                });
            }
        }
        u = next;
        records = next_records;
    }

    Ok(IvpSolution {
        nodes: mesh.iter().copied().zip(u).collect(),
        jump_records: records,
        method: if picard_sweeps == 0 {
            "g-euler".into()
        } else {
            format!("g-euler+picard({picard_sweeps})")
        },
        step_stat: max_step(&mesh),
    })
}

// 4-point Gauss–Legendre on [-1, 1].
const GL4_X: [f64; 2] = [0.339_981_043_584_856_26, 0.861_136_311_594_052_6];
const GL4_W: [f64; 2] = [0.652_145_154_862_546_1, 0.347_854_845_137_453_85];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub max_residual: f64,
    pub worst_point: f64,
    pub grid: usize,
}

/// Residual of the integral equation `u(t) = u0 + ∫_{[a, t)} F(s, u(s)) dμ_g`
/// for the interpolated solution, at `grid` equispaced points.
pub fn verify_solution(p: &IvpProblem, sol: &IvpSolution, grid: usize) -> Result<VerifyReport> {
    p.validate()?;
    if grid == 0 || sol.nodes.is_empty() {
        return Err(Error::InvalidArgument(
            "verification needs a grid and a non-empty solution".into(),
        ));
    }
    let g = &p.gauge;
    let checkpoints = p.interval.grid(grid);
    let mut cuts: Vec<f64> = sol.nodes.iter().map(|n| n.0).collect();
    cuts.extend(&checkpoints);
    let cuts = quad::cut_points(p.interval.a, p.interval.b, &cuts);
    let f = |s: f64| -> Result<f64> { Ok((p.rhs)(s, sol.value_at(s)?)) };

    let mut report = VerifyReport {
        max_residual: 0.0,
        worst_point: p.interval.a,
        grid,
    };
    let mut acc = 0.0;
    let mut cell = 0;
    for &t in &checkpoints {
        while cell + 1 < cuts.len() && cuts[cell + 1] <= t {
            let (l, r) = (cuts[cell], cuts[cell + 1]);
            let size = g.jump_at(l);
            if size > 0.0 {
                acc += f(l)? * size;
            }
            if g.has_density() {
                let (c, h) = (0.5 * (l + r), 0.5 * (r - l));
                for i in 0..2 {
                    for s in [c - h * GL4_X[i], c + h * GL4_X[i]] {
                        acc += GL4_W[i] * h * f(s)? * g.density_at(s);
                    }
                }
            }
            cell += 1;
        }
        let residual = (sol.value_at(t)? - p.u0 - acc).abs();
        if residual > report.max_residual {
            report.max_residual = residual;
            report.worst_point = t;
        }
    }
    Ok(report)
}

/// `u'_W(x) + h(x) = 0`, `u'_W(a) = 0`, `u(b) = C` for the work gauge `W`.
#[derive(Clone)]
pub struct SurfaceProblem {
    pub work_gauge: Gauge,
    pub source: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub terminal_value: f64,
}

impl SurfaceProblem {
    pub fn new(work_gauge: Gauge, source: impl Fn(f64) -> f64 + Send + Sync + 'static, terminal_value: f64) -> Self {
        SurfaceProblem {
            work_gauge,
            source: Arc::new(source),
            terminal_value,
        }
    }
}

impl fmt::Debug for SurfaceProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SurfaceProblem")
            .field("work_gauge", &self.work_gauge)
            .field("terminal_value", &self.terminal_value)
            .finish_non_exhaustive()
    }
}

/// Solves the surface problem through `u(x) = C + ∫_{[x, b)} H dμ_W` with
/// `H(x) = ∫_a^x h`, accumulating from `b` backwards so that `u(b) = C`
/// exactly. At an atom `τ` the record holds `u(τ)` and `u(τ⁺)`, which differ
/// by `H(τ)·μ({τ})`.
pub fn solve_surface(p: &SurfaceProblem, step: f64) -> Result<IvpSolution> {
    let g = &p.work_gauge;
    let dom = g.domain();
    if !p.terminal_value.is_finite() {
        return Err(Error::InvalidArgument(format!("terminal value {}", p.terminal_value)));
    }
    let mesh = build_mesh(g, dom, step)?;
    let tol = g.quad_tol();
    let h = |t: f64| (p.source)(t);
    let table = CumulativeTable::build(&h, dom.a, dom.b, &[], tol)?;
    let big_h = |t: f64| table.eval(&h, t).unwrap_or(f64::NAN);

    let n = mesh.len();
    let mut u = vec![0.0; n];
    let mut records = Vec::new();
    u[n - 1] = p.terminal_value;
    for k in (0..n - 1).rev() {
        let (l, r) = (mesh[k], mesh[k + 1]);
        let continuous = if g.has_density() {
            quad::integrate(&|s| big_h(s) * g.density_at(s), l, r, &[], tol)?
        } else {
            0.0
        };
        let right = u[k + 1] + continuous;
        let size = g.jump_at(l);
        let left = if size > 0.0 { right + big_h(l) * size } else { right };
        if !left.is_finite() {
            return Err(blow_up(l, (r, u[k + 1])));
        }
        if size > 0.0 {
            records.push(JumpRecord {
                tau: l,
                u_before: left,
                u_after: right,
            });
        }
        u[k] = left;
    }
    records.reverse();
    Ok(IvpSolution {
        nodes: mesh.iter().copied().zip(u).collect(),
        jump_records: records,
        method: "terminal-reconstruction".into(),
        step_stat: max_step(&mesh),
    })
}
