use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("point {value} is outside the domain {domain}")]
    OutOfDomain { value: f64, domain: String },

    #[error("operation `{op}` does not support {kind} displacements")]
    UnsupportedVariant { op: &'static str, kind: &'static str },

    #[error("unknown built-in `{0}`")]
    UnknownBuiltin(String),

    #[error("unknown check `{0}`")]
    UnknownCheck(String),

    #[error("invalid gauge: {0}")]
    InvalidGauge(String),

    #[error("invalid displacement spec: {0}")]
    InvalidSpec(String),

    #[error("malformed interval: {0}")]
    MalformedInterval(String),

    #[error("D2 delta is not positive at ({x}, {y}): {value}")]
    NonPositiveD2 { x: f64, y: f64, value: f64 },

    #[error("difference quotients at {x} do not converge: {sequence:?}")]
    NonConvergent { x: f64, sequence: Vec<f64> },

    #[error("non-finite value {value} at t = {t}")]
    NonFinite { t: f64, value: f64 },

    #[error("quadrature on [{a}, {b}] did not reach tolerance (error estimate {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("state blew up at t = {t}; last good node ({last_t}, {last_u})")]
    BlowUp { t: f64, last_t: f64, last_u: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("serialization: {0}")]
    Serialization(String),
}
