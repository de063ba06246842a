use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// The variants follow the failure classes of the public operations: bad
/// input values, unsupported representations, and numerical breakdowns.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid construction: {0}")]
    Construction(String),
    #[error("integrability: {0}")]
    Integrability(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("unsupported representation: {0}")]
    Representation(String),
    #[error("point outside the upper half-plane: {0}")]
    Domain(String),
    #[error("indeterminate ratio: {0}")]
    IndeterminateRatio(String),
    #[error("pole proximity: {0}")]
    PoleProximity(String),
    #[error("normalization: {0}")]
    Normalization(String),
    #[error("accuracy: {0}")]
    Accuracy(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
