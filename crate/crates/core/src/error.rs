//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("series did not reach tol = {tol:e} after {terms} terms (tail bound {err_bound:e}); argument too large for the configured threshold or term budget")]
    NonConvergence {
        terms: usize,
        err_bound: f64,
        tol: f64,
    },

    #[error("series cancellation: rounding estimate {rounding:e} against a result of size {value:e}")]
    PrecisionLoss { rounding: f64, value: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("invalid fractional order {0}")]
    InvalidOrder(f64),

    #[error("psi is not strictly increasing at node {node}")]
    NonMonotonePsi { node: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("delay maps s = {s} to {sigma}, outside the horizon")]
    DelayOutOfRange { s: f64, sigma: f64 },

    #[error("value at t0 is singular for gamma = {gamma} < 1")]
    SingularEndpoint { gamma: f64 },

    #[error("fixed-point iteration stopped after {iterations} sweeps with residual {residual:e}")]
    MaxIterExceeded { iterations: usize, residual: f64 },

    #[error("h = {h} is not a multiple of the grid step {step}")]
    HNotAligned { h: f64, step: f64 },

    #[error("sampling budget {requested} is below the minimum {minimum}")]
    BudgetTooSmall { requested: usize, minimum: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },

    #[error("validation failed for `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl Error {
    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::PrecisionLoss { .. } => "PrecisionLoss",
            Error::NonSquare { .. } => "NonSquare",
            Error::InvalidOrder(_) => "InvalidOrder",
            Error::NonMonotonePsi { .. } => "NonMonotonePsi",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::DelayOutOfRange { .. } => "DelayOutOfRange",
            Error::SingularEndpoint { .. } => "SingularEndpoint",
            Error::MaxIterExceeded { .. } => "MaxIterExceeded",
            Error::HNotAligned { .. } => "HNotAligned",
            Error::BudgetTooSmall { .. } => "BudgetTooSmall",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::Parse { .. } => "ParseError",
            Error::Validation { .. } => "ValidationError",
        }
    }

    /// Numerical failures (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::PrecisionLoss { .. }
                | Error::MaxIterExceeded { .. } | Error::SingularEndpoint { .. }
        )
    }
}
