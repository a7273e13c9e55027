//! Error type shared by all solvers and the experiment harness.

use thiserror::Error;

/// Toolkit-wide error type.
///
/// The two variants that carry semantic weight for callers are
/// [`Error::Precondition`] (bad inputs, violated invariants, CFL failures)
/// and [`Error::NonConvergence`] (an iterative solver exhausted its budget).
/// The CLI maps them to exit codes 2 and 3 respectively.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A fixed-point iteration ran out of iterations. Carries the residual
    /// history so the caller can judge whether more damping would help.
    #[error("no convergence after {iterations} iterations (last residual {last:.3e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("{0}")]
    Format(String),
}

impl Error {
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// Exit code contract: 2 for precondition-class failures, 3 for
    /// non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
