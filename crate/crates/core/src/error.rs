use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigError;

/// Errors raised by modeling, inversion and their file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: expected {expected} bytes, found {actual}", path.display())]
    SizeMismatch {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("{}: non-finite value at element {index}", path.display())]
    NonFinite { path: PathBuf, index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("coordinate ({x}, {y}, {z}) lies outside the model")]
    OutsideGrid { x: f64, y: f64, z: f64 },

    #[error("wavefield became non-finite at step {step}; check the CFL condition")]
    Unstable { step: usize },

    #[error("{0} is not implemented")]
    NotImplemented(&'static str),

    #[error("wavefield store: {0}")]
    Store(String),

    #[error("preconditioner did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("shot {shot}: {source}")]
    Shot {
        shot: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
