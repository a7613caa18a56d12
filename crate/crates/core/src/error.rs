use thiserror::Error;

use crate::window::Window;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient halo: requires width >= {required}, have {available}")]
    InsufficientHalo { required: u64, available: u64 },

    #[error("window mismatch: {requested} is not available in {available}")]
    WindowMismatch {
        requested: Window,
        available: Window,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("alphabet overflow: {0}")]
    AlphabetOverflow(String),

    #[error("word is not a member of the enumerated list")]
    NotAMember,

    #[error("enumeration guard exceeded: {words} words requested, limit is {limit}")]
    EnumerationGuard { words: u128, limit: u128 },

    #[error("inadmissible sequence: {condition} violated at k = {k}")]
    Inadmissible { condition: &'static str, k: u64 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("external compressor failed: {0}")]
    External(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures caused by runtime guards (enumeration size, halo
    /// exhaustion) rather than bad input.
    pub fn is_runtime_guard(&self) -> bool {
        matches!(
            self,
            Error::InsufficientHalo { .. } | Error::EnumerationGuard { .. }
        )
    }
}
