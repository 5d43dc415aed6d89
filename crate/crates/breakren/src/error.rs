use thiserror::Error;

/// Failure classes shared by every module.
///
/// The CLI maps `Precision` to exit code 2 and everything else to 1.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("numeric domain: {0}")]
    Domain(String),
    #[error("numeric precision: {0}")]
    Precision(String),
    #[error("capability: {0}")]
    Capability(String),
    #[error("degenerate Moebius map: {0}")]
    Degenerate(String),
}

impl Error {
    pub fn is_precision(&self) -> bool {
        matches!(self, Error::Precision(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
