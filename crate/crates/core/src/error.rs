use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("query point outside the sampling window: {0}")]
    OutOfWindow(String),

    #[error("unsafe construction: {0}")]
    ConstructionUnsafe(String),

    #[error("result censored by the window boundary: {0}")]
    Censored(String),

    #[error("degenerate limit shape: {0}")]
    DegenerateShape(String),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by bad inputs rather than numerics or I/O.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::Parse(_) | Error::WindowTooSmall(_) | Error::ConstructionUnsafe(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
