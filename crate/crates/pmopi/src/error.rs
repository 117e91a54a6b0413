use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("subcarrier index {index} out of range (num_subcarriers = {count})")]
    SubcarrierOutOfRange { index: usize, count: usize },

    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot assemble a key from an empty PMI list")]
    EmptyKey,

    #[error("malformed transcript: {0}")]
    MalformedTranscript(String),

    #[error("calibration failed: {0}")]
    CalibrationFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
