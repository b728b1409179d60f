//! Error taxonomy shared by every module in the crate.

use thiserror::Error;

/// Which tail of a confidence interval an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    Low,
    High,
}

impl std::fmt::Display for Tail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tail::Low => write!(f, "low"),
            Tail::High => write!(f, "high"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested (n, p, alpha) combination needs an order statistic the
    /// sample cannot provide. `min_n` is the smallest sample size for which
    /// the same request becomes evaluable.
    #[error("extreme quantile: {tail} tail needs an order statistic outside the sample (n = {n}, smallest evaluable n = {min_n})")]
    ExtremeQuantile { tail: Tail, n: usize, min_n: usize },

    /// An iterative routine failed to converge.
    #[error("numerical failure in {context}: residual {residual:e} after {iterations} iterations")]
    Numerical {
        context: &'static str,
        residual: f64,
        iterations: usize,
    },

    /// The calibrated per-tail level left (0, 1).
    #[error("calibration overflow: adjusted per-tail level {alpha_tilde} is not a probability")]
    CalibrationOverflow { alpha_tilde: f64 },

    /// Data whose spread is degenerate (e.g. zero variance) where a scale is required.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Too few observations for the requested estimate.
    #[error("insufficient data: have {have} observations, need at least {need}")]
    InsufficientData { have: usize, need: usize },

    /// The local regression design matrix is rank deficient.
    #[error("collinear design: local polynomial system is singular")]
    CollinearDesign,

    /// No observation falls in the requested window.
    #[error("empty window: no observations within h = {h} of the evaluation point")]
    EmptyWindow { h: f64 },

    /// Joint-interval mode assumptions are violated.
    #[error("mode violation: {0}")]
    ModeViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
