//! Exact truncated power-series arithmetic over Q(ξ).
//!
//! Series are immutable values carrying their own truncation order and the
//! formal variable they are expanded in. Binary operations return the smaller
//! order of their operands and refuse to mix variables.

mod poly;
mod power;
mod rational;

pub use poly::{LPoly, XLPoly};
pub use power::{PowerSeries, Var};
pub use rational::{fmt_rational, int, parse_rational, rat, CycRational, Rational};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("series in {left} cannot be combined with a series in {right}")]
    VarMismatch { left: Var, right: Var },
    #[error("constant term is not invertible")]
    NonInvertible,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("cannot parse {0:?} as an exact number")]
    Parse(String),
}

/// Builds a rational q-series from integer coefficients.
pub fn qseries(coeffs: &[i64]) -> PowerSeries {
    PowerSeries::from_ints(Var::SmallQ, coeffs)
}
