//! Error taxonomy shared across the crate.

use thiserror::Error;

/// Unified error type.
///
/// The variant encodes who is at fault: `Config`, `Usage`, `Resolution` and
/// `Validation` indicate bad inputs (a CLI maps them to exit code 2), while
/// `Numerical` indicates a runtime failure of the computation itself (exit
/// code 1).
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its documented domain.
    #[error("config: {0}")]
    Config(String),
    /// Operands that do not belong together, e.g. functions on different grids.
    #[error("usage: {0}")]
    Usage(String),
    /// A requested spectral feature is too fine for the active grid.
    #[error("resolution: {0}")]
    Resolution(String),
    /// An input object violates a physical precondition.
    #[error("validation: {0}")]
    Validation(String),
    /// A decomposition or iteration failed to converge.
    #[error("numerical: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
    pub(crate) fn resolution(msg: impl Into<String>) -> Self {
        Error::Resolution(msg.into())
    }
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for the variants caused by bad input rather than a failed run.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Numerical(_))
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Numerical(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
