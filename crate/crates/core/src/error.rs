use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed payload: {0}")]
    MalformedPayload(String),

    #[error("wrong size: expected {expected} bytes, got {actual}")]
    Size { expected: usize, actual: usize },

    #[error("reed-solomon decode failed in rows {rows:?}")]
    DecodeRows { rows: Vec<usize> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("address error: {0}")]
    Address(String),

    #[error("patch too large: {0} insert bytes (max 252)")]
    PatchTooLarge(usize),

    #[error("patch application failed: {0}")]
    PatchApply(String),

    #[error("patch for version {version} failed: {source}")]
    Chain {
        version: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("decode failure: {0}")]
    DecodeFailure(String),

    #[error("insufficient coverage for block {block}: missing addresses {missing:?}")]
    InsufficientCoverage {
        block: usize,
        /// (version, column) pairs never recovered
        missing: Vec<(u8, u8)>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
