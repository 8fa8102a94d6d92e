//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("line {line}: syntax error: {message}")]
    SyntaxError { line: usize, message: String },

    #[error("line {line}: gate g{id} is not defined at this point")]
    UndefinedGate { line: usize, id: u64 },

    #[error("line {line}: multiplication must have a linear-form operand (use `mullin`)")]
    NonSkewMul { line: usize },

    #[error("line {line}: gate g{id} is already defined")]
    DuplicateGateId { line: usize, id: u64 },

    #[error("circuit contains a general multiplication gate; this engine requires a skew circuit")]
    NonSkew,

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("bad partition: {0}")]
    BadPartition(String),

    #[error("bad dimensions: {0}")]
    BadDims(String),

    #[error("path endpoints must be distinct")]
    SameEndpoints,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("n must be even, got {0}")]
    OddN(usize),

    #[error("not a decomposition: {0}")]
    NotADecomposition(String),

    #[error("verification failure: {0}")]
    VerificationFailure(String),

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("modular arithmetic error: {0}")]
    Modular(String),
}
