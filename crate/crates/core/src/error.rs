use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("operands belong to different prime fields")]
    MismatchedField,
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("{0} is not a prime")]
    InvalidPrime(String),
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("Alice and Bob derived different keys")]
    KeyMismatch,
    #[error("solution vector is zero")]
    ZeroSolution,
    #[error("solution space of the linear system is empty")]
    EmptyKernel,
    #[error("g(H) is not invertible")]
    SingularG,
    #[error("no invertible g(H) found after {0} samples")]
    RetriesExceeded(usize),
    #[error("malformed input: {0}")]
    Malformed(String),
}
