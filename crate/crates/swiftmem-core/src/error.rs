//! Error type shared by every index and the engine.

use alloc::string::String;

/// Errors produced by stores, indexes, providers, and the engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("embedding has {got} dimensions, store is configured for {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid tag `{0}`: tags are lowercase [a-z0-9] words joined by `_`, at most 3 words")]
    InvalidTag(String),
    #[error("invalid timestamp {0}: epoch milliseconds must be >= 0")]
    InvalidTimestamp(i64),
    #[error("episode {0} not found")]
    NotFound(u64),
    #[error("episode {0} is already indexed")]
    DuplicateEpisode(u64),
    #[error("unknown tag `{0}`")]
    UnknownTag(String),
    #[error("tag `{0}` cannot relate to itself")]
    SelfLoop(String),
    #[error("time interval start {start} must be before end {end}")]
    InvalidInterval { start: i64, end: i64 },
    #[error("vector has zero norm, cosine similarity is undefined")]
    ZeroNorm,
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("cannot tag empty content")]
    EmptyContent,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("embedding provider failed: {0}")]
    EmbedderFailure(String),
    #[error("remote provider unavailable: {0}")]
    RemoteUnavailable(String),
}

pub type Result<T> = core::result::Result<T, CoreError>;
