use thiserror::Error;

/// Errors raised by the engine.
///
/// `Contract` marks a caller bug (stepping a finished episode, querying an
/// empty subgoal set, ...). The trainer aborts on it and records where it
/// happened.
#[derive(Debug, Error)]
pub enum HrlError {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("not ready: {0}")]
    NotReady(String),

    #[error("invalid format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HrlError>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(HrlError::Contract(msg.into()))
}
