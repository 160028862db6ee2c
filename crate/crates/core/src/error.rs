use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by set arithmetic, the observer bank, the design solvers and
/// the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate zonotope: generator matrix has zero Frobenius norm")]
    DegenerateSet,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("problem is unbounded: {0}")]
    Unbounded(String),

    #[error("invalid gamma bracket [{lo}, {hi}]: M(lo) = {m_lo}, M(hi) = {m_hi}")]
    InvalidBracket { lo: f64, hi: f64, m_lo: f64, m_hi: f64 },

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("branch-and-bound node limit of {0} exceeded")]
    NodeLimit(usize),

    #[error("degenerate fractional program: {0}")]
    DegenerateDenominator(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("soundness audit violation: {0}")]
    Soundness(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    /// True for numerical failures of a design step, which the harness
    /// absorbs by reusing the previous gain or input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::Unbounded(_)
                | Error::InvalidBracket { .. }
                | Error::NoConvergence(_)
                | Error::Infeasible(_)
                | Error::NodeLimit(_)
                | Error::DegenerateDenominator(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
