use thiserror::Error;

/// Errors returned by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("condition not met: {0}")]
    ConditionNotMet(String),

    /// The eigenvalue gap separating the leading subspace is too small for
    /// the spectral projector to be well defined.
    #[error("degenerate eigenvalue gap ({gap:e})")]
    DegenerateGap { gap: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
