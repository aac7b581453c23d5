use thiserror::Error;

use crate::model::SessionId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("not a session id: {0:?} (expected 6 characters from A-Z, 0-9)")]
    SessionId(String),
    #[error("unknown reaction type: {0:?}")]
    ReactionType(String),
    #[error("unknown escalation policy: {0:?}")]
    Escalation(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum HapticError {
    #[error("aggregated count must be at least 1")]
    ZeroCount,
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BordaError {
    #[error("weights must be positive and strictly decreasing: {0:?}")]
    InvalidWeights(Vec<u64>),
    #[error("ballot from {voter:?} ranks {len} candidates but only {max} weights are defined")]
    BallotTooLong { voter: String, len: usize, max: usize },
    #[error("ballot from {voter:?} lists {candidate:?} more than once")]
    DuplicateCandidate { voter: String, candidate: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AggregationError {
    #[error("session {0} not found or already ended")]
    SessionNotFound(SessionId),
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("session {0} not found")]
    SessionNotFound(String),
    #[error("session {0} has ended")]
    SessionEnded(SessionId),
    #[error("unauthorized")]
    Unauthorized,
    #[error("could not allocate a free session id after {0} attempts")]
    Unavailable(usize),
    #[error("too many joins for session {0}, retry later")]
    JoinThrottled(SessionId),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record line {line}: {source}")]
    Malformed {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("record is missing its header line")]
    MissingHeader,
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("dominance threshold {0} outside (0, 1]")]
    Threshold(f64),
}
