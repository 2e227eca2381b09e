use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("grid mismatch: expected {expected} values, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("zero variance{}", .id.as_deref().map(|id| format!(" in record `{id}`")).unwrap_or_default())]
    ZeroVariance { id: Option<String> },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate class: {0}")]
    DegenerateClass(String),

    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", .path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateClass(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// Name of the error variant, unwrapping fold/trial context. Used by the
    /// command-line front end as a stable, typed failure name.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Error::EmptyDataset => "EmptyDataset",
            Error::GridMismatch { .. } => "GridMismatch",
            Error::ZeroVariance { .. } => "ZeroVariance",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::DegenerateClass(_) => "DegenerateClass",
            Error::ConvergenceFailure(_) => "ConvergenceFailure",
            Error::Fold { source, .. } | Error::Trial { source, .. } => source.kind_name(),
            Error::Io { .. } => "IoError",
            Error::Json { .. } => "InvalidConfig",
        }
    }
}
