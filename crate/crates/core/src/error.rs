use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed structurally invalid arguments (length mismatch,
    /// index out of range, incompatible bases, ...).
    #[error("argument error: {0}")]
    Argument(String),

    /// Input data failed a mathematical validation (a planted identity
    /// does not hold). Carries a human-readable witness.
    #[error("validation error: {0}")]
    Validation(String),

    /// A configured cap (partition size, series order, degree window)
    /// would be exceeded.
    #[error("resource cap exceeded: {0}")]
    Resource(String),

    /// A truncated computation cannot decide the requested quantity
    /// inside its validity window.
    #[error("validity boundary too low: {0}")]
    Boundary(String),

    /// Malformed input file.
    #[error("schema error: {0}")]
    Schema(String),
}

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
    pub fn boundary(msg: impl Into<String>) -> Self {
        Error::Boundary(msg.into())
    }
    pub fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }
}
