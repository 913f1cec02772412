//! Hyperplane covers of the hypercube `{±1}^n`, in exact arithmetic.
//!
//! This crate provides:
//!
//! * a data model for hyperplanes, covers, vertices and coefficient matrices
//!   over exact rationals ([`Scalar`]),
//! * exhaustive verification of the essential-cover axioms (E1)–(E3) and of
//!   skew covers, plus greedy minimalization ([`verify`]),
//! * generators for the textbook covers and seeded random instances
//!   ([`constructions`]),
//! * magnitude machinery and an exact biased-subset-sum distribution used to
//!   check anti-concentration bounds ([`anticoncentration`]),
//! * a constructive solver for Bang's lemma and the derived rounding point
//!   ([`bang`]),
//! * the iterative coefficient-matrix decomposition with its weight audit
//!   ([`decompose`]),
//! * the uncovered-vertex pipeline: deterministic fixing, rounding plan,
//!   exact probability accounting and seeded sampling ([`find_vertex`]).
//!
//! Everything that decides set membership (`⟨v, x⟩ = μ`) runs in exact
//! rational arithmetic. Quantities that are genuinely irrational — square
//! roots, natural logarithms, exponentials — are handled by certified
//! interval arithmetic with rational endpoints ([`interval`]), so every
//! threshold comparison is either decided exactly or reported as undecidable
//! at the configured precision.

pub mod anticoncentration;
pub mod bang;
pub mod bounds;
pub mod constructions;
pub mod cover;
pub mod cube;
pub mod decompose;
pub mod error;
pub mod find_vertex;
pub mod interval;
pub mod matrix;
pub mod scalar;
pub mod verify;

pub use cover::{Cover, Hyperplane};
pub use cube::Vertex;
pub use error::Error;
pub use interval::{Interval, Precision};
pub use matrix::Matrix;
pub use scalar::Scalar;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Largest dimension for which exhaustive `2^n` vertex scans are permitted.
pub const EXHAUSTIVE_DIM_CAP: usize = 30;
