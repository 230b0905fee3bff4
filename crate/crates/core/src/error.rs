use thiserror::Error;

use crate::frequency::Key;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element with key {key} has invalid value {value} (values must be finite and >= 0)")]
    NegativeValue { key: Key, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("the weighted norm is zero; nothing to sample or normalize")]
    ZeroNorm,

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("key {0} was already processed by this sketch; batches must be key-disjoint")]
    DuplicateKey(Key),

    #[error("sample record for key {0} has inclusion probability 0")]
    ZeroProbability(Key),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported sketch blob: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NegativeValue { .. } => "negative_value",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::ZeroNorm => "zero_norm",
            Error::ConfigMismatch(_) => "config_mismatch",
            Error::DuplicateKey(_) => "duplicate_key",
            Error::ZeroProbability(_) => "zero_probability",
            Error::Parse { .. } => "parse",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
