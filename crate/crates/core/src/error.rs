use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid transition: lower level {lower:?} must lie below upper level {upper:?}")]
    InvalidTransition {
        lower: crate::qspace::Level,
        upper: crate::qspace::Level,
    },

    #[error("operands live in different Hilbert spaces")]
    SpaceMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("truncation too small: {0}")]
    Truncation(String),

    #[error("integration blew up in segment {segment}: {detail}")]
    IntegrationBlowUp { segment: usize, detail: String },

    #[error("matrix-exponential oracle unavailable: {0}")]
    Oracle(String),

    #[error("checkpoint {checkpoint:?} is not defined for N = {n}")]
    Checkpoint {
        checkpoint: crate::protocol::Checkpoint,
        n: usize,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
