use thiserror::Error;

/// Transport- and protocol-level failures of a model client.
#[derive(Debug, Clone, Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(String),

    #[error("protocol: {0}")]
    Protocol(String),

    #[error("bad prompt: {0}")]
    BadPrompt(String),

    #[error("request timed out")]
    Timeout,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Client(#[from] ClientError),

    #[error(transparent)]
    Core(#[from] nonhalt_core::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
