use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// A value outside the domain of an operation. `action` names the
    /// offending entry when there is one.
    #[error("domain error{}: {reason}", .action.map(|a| format!(" at action {a}")).unwrap_or_default())]
    Domain {
        action: Option<usize>,
        reason: String,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("bisection did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("logic error: {0}")]
    Logic(String),

    #[error("simulation {simulation}: {source}")]
    Simulation {
        simulation: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(reason: impl Into<String>) -> Self {
        Error::Domain {
            action: None,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain_at(action: usize, reason: impl Into<String>) -> Self {
        Error::Domain {
            action: Some(action),
            reason: reason.into(),
        }
    }
}
