use thiserror::Error;

/// Errors raised by tensor, hashing and sketching operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape {shape:?} holds {expected} values but {actual} were given")]
    ShapeMismatch {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mode {mode} out of range for an order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("index {index:?} out of range for shape {shape:?}")]
    IndexOutOfRange { index: Vec<usize>, shape: Vec<usize> },

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid contraction: {0}")]
    InvalidContraction(String),

    #[error("contracted mode {mode} of operand {operand} is not identity-hashed")]
    NotIdentityMode { operand: char, mode: usize },

    #[error("incompatible sketches: {0}")]
    Incompatible(String),

    #[error("median of an empty set")]
    EmptyInput,

    #[error("relative error is undefined against an all-zero reference")]
    ZeroReference,

    #[error("imaginary residue {residue:e} exceeds tolerance {tolerance:e}")]
    ImaginaryResidue { residue: f64, tolerance: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
