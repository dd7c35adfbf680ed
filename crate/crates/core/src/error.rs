//! Error type shared by every module of the solver.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} must be even and at least 16")]
    InvalidGrid(usize),

    #[error("field has {got} samples but the grid has {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids ({0} vs {1} points)")]
    GridMismatch(usize, usize),

    #[error("non-finite value at sample {0}")]
    NonFinite(usize),

    #[error("derivative of order {order} overflows the Fourier multiplier on a {n}-point grid")]
    Underresolved { order: u32, n: usize },

    #[error("closure defect {0:.3e} is too large to project (limit 0.1)")]
    ClosureDefect(f64),

    #[error("chord-arc ratio {ratio:.4e} below floor {floor}")]
    ChordArc { ratio: f64, floor: f64 },

    #[error("second-kind solve did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("Taylor sign condition violated: min a = {min:.6e} at node {node}")]
    TaylorSign { min: f64, node: usize },

    #[error("{what} cross-check failed: discrepancy {discrepancy:.3e}")]
    CrossCheck { what: &'static str, discrepancy: f64 },

    #[error("time step {dt:.3e} exceeds the explicit stability limit {limit:.3e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("run aborted at t = {t:.6}: {source}")]
    Aborted {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for problems with the inputs rather than with the computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::LengthMismatch { .. }
                | Error::GridMismatch(..)
                | Error::InvalidParameter(_)
                | Error::Format(_)
                | Error::Config(_)
                | Error::Json(_)
                | Error::Io(_)
        )
    }

    /// Short machine-readable label for the abort reason.
    pub fn label(&self) -> &'static str {
        match self {
            Error::Aborted { source, .. } => source.label(),
            Error::ChordArc { .. } => "chord-arc",
            Error::TaylorSign { .. } => "taylor-sign",
            Error::NonConvergence { .. } => "non-convergence",
            Error::Cfl { .. } => "cfl",
            Error::NonFinite(_) => "nan",
            Error::ClosureDefect(_) => "closure",
            Error::CrossCheck { .. } => "cross-check",
            Error::Underresolved { .. } => "under-resolved",
            Error::InvalidGrid(_)
            | Error::LengthMismatch { .. }
            | Error::GridMismatch(..)
            | Error::InvalidParameter(_) => "invalid-input",
            Error::Format(_) | Error::Json(_) => "format",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}
