use std::path::PathBuf;

use thiserror::Error;

use crate::constraints::Violation;
use crate::rootfind::RootError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("domain error at entry ({row}, {col}): {msg}")]
    DomainAt { row: usize, col: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("constraint violation: {0}")]
    Constraint(#[from] Violation),

    #[error("multiplier solve failed for {context}: {source}")]
    Root {
        context: String,
        #[source]
        source: RootError,
    },

    #[error("parse error in {path}:{line}:{col}: {msg}")]
    Parse {
        path: String,
        line: usize,
        col: usize,
        msg: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn root(context: impl Into<String>, source: RootError) -> Self {
        Error::Root {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) | Error::DomainAt { .. } => "domain",
            Error::Dimension(_) => "dimension",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Unsupported(_) => "unsupported",
            Error::Constraint(_) => "constraint",
            Error::Root { .. } => "solver",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Json(_) => "io",
        }
    }

    /// Process exit code used by the command-line front end:
    /// 2 for validation problems, 3 for solver failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Root { .. } => 3,
            Error::Io { .. } | Error::Json(_) | Error::Parse { .. } => 4,
            _ => 2,
        }
    }
}
