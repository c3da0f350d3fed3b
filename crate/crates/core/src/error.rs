use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the formula being evaluated.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A mean-field neighbour had no coherence supplied.
    #[error("missing coherence for neighbour site {neighbor} of site {site}")]
    MissingCoherence { site: usize, neighbor: usize },

    /// An integration step produced an unphysical state.
    #[error("step rejected at t = {time_us} us (dt = {dt_us} us): {reason}")]
    StepRejected { time_us: f64, dt_us: f64, reason: String },

    /// Fit input with no information about the model parameters.
    #[error("degenerate fit input: {0}")]
    Degenerate(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
