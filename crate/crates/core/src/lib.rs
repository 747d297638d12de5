//! Displacement calculus on a compact interval.
//!
//! A displacement `Δ(x, y)` generalises the signed difference `y - x`. Under
//! mild hypotheses it induces a Lebesgue–Stieltjes measure with a
//! left-continuous gauge `g`, and with it a derivative
//! `f^Δ(x) = lim (f(y) - f(x)) / Δ(x, y)` that satisfies a fundamental theorem
//! of calculus against `∫_{[a, x)} · dμ`.
//!
//! The crate provides:
//!
//! - [`expr`]: a small expression language for user-supplied formulas;
//! - [`displacement`] and [`axioms`]: displacement specs, built-ins and sampled
//!   hypothesis checks;
//! - [`gauge`]: gauges, their measures and the excluded sets;
//! - [`calculus`]: Δ-derivatives, Stieltjes integrals and FTC harnesses;
//! - [`solver`]: Stieltjes initial-value problems and the stationary surface
//!   boundary-value problem.

// `!(x > y)` is used on purpose so that NaN fails the comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod axioms;
pub mod calculus;
pub mod displacement;
pub mod error;
pub mod expr;
pub mod gauge;
pub mod quad;
pub mod registry;
pub mod solver;

pub use displacement::{DisplacementSpec, Domain};
pub use error::{Error, Result};
pub use expr::Expr;
pub use gauge::{Gauge, Interval};
