use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the factorization toolkit.
#[derive(Debug, Error)]
pub enum NmfError {
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("matrix is not positive definite after {retries} regularization retries")]
    Singular { retries: usize },

    #[error("non-finite objective at iteration {iteration}")]
    NumericalFailure { iteration: usize },

    #[error("column {column}: {source}")]
    Column {
        column: usize,
        #[source]
        source: Box<NmfError>,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("oracle refuses problems with {dim} variables (cap is {cap})")]
    OracleCap { dim: usize, cap: usize },

    #[error("{path}: parse error at {location}: {message}")]
    Format {
        path: PathBuf,
        location: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = NmfError> = std::result::Result<T, E>;

impl NmfError {
    pub(crate) fn shape(op: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        NmfError::Shape {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NmfError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 1 validation, 2 numerical failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            NmfError::Shape { .. }
            | NmfError::Validation(_)
            | NmfError::Domain(_)
            | NmfError::OracleCap { .. } => 1,
            NmfError::Singular { .. } | NmfError::NumericalFailure { .. } => 2,
            NmfError::Column { source, .. } => source.exit_code(),
            NmfError::Format { .. } | NmfError::Io { .. } => 3,
        }
    }
}
