//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {n} exceeds the exhaustive-scan cap of {cap}")]
    DimensionOverCap { n: usize, cap: usize },

    #[error("dimension must satisfy 1 <= n <= {cap}, got {n}")]
    DimensionOutOfRange { n: usize, cap: usize },

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("hyperplane coefficient vector is all zero")]
    ZeroHyperplane,

    #[error("cover must contain at least one hyperplane")]
    EmptyCover,

    #[error("magnitude of zero is undefined")]
    MagnitudeOfZero,

    #[error("subset-sum size guard exceeded: {what}")]
    SizeGuard { what: String },

    #[error("input does not satisfy E1 (vertex {missed:?} is uncovered)")]
    NotCovering { missed: crate::cube::Vertex },

    #[error("cover is not verified essential")]
    NotEssential,

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("K1 covers every row: no plane outside K1 to take a witness from")]
    KOneIsAllRows,

    #[error("no private vertex exists for plane {plane}")]
    NoWitness { plane: usize },

    #[error("no valid rounding plan: {0}")]
    NoPlan(String),

    #[error("comparison undecidable at precision cap {cap} bits: {what}")]
    PrecisionExhausted { cap: u32, what: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
