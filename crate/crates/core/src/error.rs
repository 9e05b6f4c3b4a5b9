use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwarmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl SwarmError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SwarmError::InvalidArgument(msg.into())
    }
}

impl From<std::io::Error> for SwarmError {
    fn from(e: std::io::Error) -> Self {
        SwarmError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SwarmError>;
