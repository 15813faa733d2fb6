use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The film profile came within the degeneracy band of `-1` or `+1`.
    #[error("degenerate coefficients at node {node} (z = {z}): u = {value}")]
    Degenerate { node: usize, z: f64, value: f64 },

    #[error("linear solver failed after {iterations} iterations (relative residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("no catenoid exists for sigma = {sigma} (minimum is {sigma_min})")]
    NoCatenoid { sigma: f64, sigma_min: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
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
