use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulation pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("internal state norm {norm} is not within 1e-6 of unity")]
    NotNormalized { norm: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("term already expressed in the detector basis")]
    AlreadyInDetectorBasis,

    #[error("grid too coarse: norm drift {drift:.3e} exceeds {tolerance:.0e}")]
    GridTooCoarse { drift: f64, tolerance: f64 },

    #[error("grid does not contain the wavepacket: {0}")]
    GridTooSmall(String),

    #[error("pattern spans {span:.4} but one fringe period is {period:.4}")]
    TooFewFringes { span: f64, period: f64 },

    #[error("empty pattern")]
    EmptyPattern,

    #[error("rejection sampler acceptance rate {rate:.4} below 1%")]
    PoorAcceptance { rate: f64 },

    #[error("need at least {needed} events, got {got}")]
    TooFewEvents { needed: usize, got: usize },

    #[error("least-squares fringe fit failed: {0}")]
    FitFailed(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
