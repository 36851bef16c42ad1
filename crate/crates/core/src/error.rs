use thiserror::Error;

/// Errors produced by scheme construction, decoding, enumeration and the optimizers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),

    #[error("invalid pattern distribution: {0}")]
    InvalidDistribution(String),

    #[error("malformed answers: {0}")]
    MalformedAnswers(String),

    /// The key space is too large for exhaustive enumeration.
    #[error("key space too large to enumerate: N^K = {size} exceeds the limit of {limit}")]
    TooLarge { size: u128, limit: u64 },

    #[error("x sequence out of range: {0}")]
    OutOfRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
