use thiserror::Error;

/// Errors raised by the algebraic operations of this crate.
///
/// Well-formedness problems of a wiring diagram are not errors: they are
/// reported as data by [`crate::wiring::validate_diagram`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("interface mismatch: {0}")]
    InterfaceMismatch(String),

    #[error("type error: {0}")]
    Type(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed value: {0}")]
    Value(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn mismatch(msg: impl Into<String>) -> Error {
    Error::InterfaceMismatch(msg.into())
}
