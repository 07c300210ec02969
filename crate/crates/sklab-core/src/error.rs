use thiserror::Error;

/// Errors surfaced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated an API precondition (wrong dimension, unknown label,
    /// out-of-order window, answering a dead question, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// Input data is malformed (non-finite feature, coordinate out of range,
    /// unparseable record, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A numeric routine failed beyond recovery (Cholesky factorization kept
    /// failing after jitter escalation).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Bad run/study configuration, reported before any compute.
    #[error("config error: {0}")]
    Config(String),

    /// Snapshot/container problems: unknown version, corrupt payload.
    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable kind tag, used by the CLI error record.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::Data(_) => "data",
            Error::Numeric(_) => "numeric",
            Error::Config(_) => "config",
            Error::Snapshot(_) => "snapshot",
            Error::Io(_) => "io",
            Error::Serde(_) => "serde",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
