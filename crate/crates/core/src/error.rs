use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} = {value} outside domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("activation {0} is saturated, no unique preimage")]
    Saturated(f64),

    #[error("activation {value} outside reliable band [{lo}, {hi}]")]
    Unreliable { value: f64, lo: f64, hi: f64 },

    #[error("no curve activation passes the floor {floor}")]
    Undecodable { floor: f64 },

    #[error("degree of freedom {dof} ({name}): {source}")]
    Dof {
        dof: usize,
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("row {row}, column {column} ({name}): value {value} outside [{min}, {max}]")]
    OutOfRange {
        row: usize,
        column: usize,
        name: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("width mismatch: expected {expected}, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("no reachable target after {attempts} attempts")]
    Unreachable { attempts: usize },

    #[error("degenerate metric: {0}")]
    Degenerate(&'static str),

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn in_dof(self, dof: usize, name: &str) -> Self {
        Error::Dof {
            dof,
            name: name.to_owned(),
            source: Box::new(self),
        }
    }

    pub(crate) fn in_row(self, row: usize) -> Self {
        Error::Row {
            row,
            source: Box::new(self),
        }
    }
}
