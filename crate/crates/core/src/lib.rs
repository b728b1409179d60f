//! Nonparametric quantile inference built on fractional order statistics.
//!
//! The centerpiece is a confidence interval for an unconditional quantile
//! that interpolates adjacent order statistics and picks the interpolation
//! point so the interval's coverage error vanishes at a polynomial rate.
//! On top of that sit an analytic coverage calibration, a kernel-windowed
//! conditional variant with plug-in bandwidths, an exact small-sample
//! coverage oracle, and a Monte Carlo harness for coverage experiments.

// `!(x > 0.0)` guards are deliberate so NaN fails validation, and reference
// constants keep every digit of the value they were frozen from.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bandwidth;
pub mod conditional;
pub mod error;
pub mod fractional;
pub mod nuisance;
pub mod oracle;
mod quadrature;
pub mod sim;
pub mod special;
pub mod unconditional;

pub use error::{Error, Result, Tail};
pub use fractional::{FractionalIndex, SortedSample};
pub use special::{BetaParams, Probability};
pub use unconditional::{
    confidence_interval, ConfidenceInterval, QuantileRequest, Side, SupportBounds,
};
