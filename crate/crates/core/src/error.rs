use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator and the analysis toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("supply and demand curves do not cross inside the quantity domain")]
    NoEquilibrium,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate series: {0}")]
    Degenerate(String),

    #[error("power-law fit needs at least 3 nonempty bins in range, found {found}")]
    Fit { found: usize },

    #[error("modularity is undefined for a graph without edges")]
    UndefinedModularity,

    #[error(
        "eigen-solver did not converge after {iterations} iterations (last change {last_change:e})"
    )]
    Solver { iterations: usize, last_change: f64 },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Io { .. } | Error::Format { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
