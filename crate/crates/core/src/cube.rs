//! Vertices of the hypercube `{±1}^n` and their deterministic enumeration.
//!
//! A vertex is an `n`-bit mask: bit `j-1` set means coordinate `j` equals
//! `+1`, clear means `-1`. Masks give the canonical enumeration order
//! (increasing mask value), and "first" always means first in that order.

use crate::error::Error;
use crate::{Result, EXHAUSTIVE_DIM_CAP};

/// A vertex of `{±1}^n`, encoded as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex {
    mask: u32,
    dim: u32,
}

impl Vertex {
    /// Builds a vertex from its mask. `n` must be at most
    /// [`EXHAUSTIVE_DIM_CAP`] and the mask must fit in `n` bits.
    pub fn from_mask(mask: u32, n: usize) -> Result<Self> {
        if n == 0 || n > EXHAUSTIVE_DIM_CAP {
            return Err(Error::DimensionOutOfRange {
                n,
                cap: EXHAUSTIVE_DIM_CAP,
            });
        }
        if n < 32 && mask >> n != 0 {
            return Err(Error::Invalid(format!(
                "mask {mask:#x} does not fit in {n} bits"
            )));
        }
        Ok(Vertex {
            mask,
            dim: n as u32,
        })
    }

    /// Builds a vertex from explicit `±1` coordinates.
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let mut mask = 0u32;
        for (j, &s) in signs.iter().enumerate() {
            match s {
                1 => mask |= 1 << j,
                -1 => {}
                other => {
                    return Err(Error::Invalid(format!(
                        "coordinate {} is {other}, expected ±1",
                        j + 1
                    )))
                }
            }
        }
        Vertex::from_mask(mask, signs.len())
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Coordinate `j` (1-based) as `+1` or `-1`.
    pub fn coordinate(&self, j: usize) -> i8 {
        debug_assert!(j >= 1 && j <= self.dim());
        if self.mask >> (j - 1) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// All coordinates as a `±1` vector.
    pub fn signs(&self) -> Vec<i8> {
        (1..=self.dim()).map(|j| self.coordinate(j)).collect()
    }

    /// The antipodal vertex (every coordinate negated).
    pub fn complement(&self) -> Vertex {
        let full = if self.dim == 32 {
            u32::MAX
        } else {
            (1u32 << self.dim) - 1
        };
        Vertex {
            mask: self.mask ^ full,
            dim: self.dim,
        }
    }
}

impl std::fmt::Display for Vertex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for j in 1..=self.dim() {
            if j > 1 {
                write!(f, ",")?;
            }
            write!(f, "{}", if self.coordinate(j) == 1 { "+1" } else { "-1" })?;
        }
        write!(f, ")")
    }
}

/// Iterates over all `2^n` vertices in increasing mask order.
pub fn enumerate_vertices(n: usize) -> Result<impl Iterator<Item = Vertex>> {
    if n == 0 || n > EXHAUSTIVE_DIM_CAP {
        return Err(Error::DimensionOutOfRange {
            n,
            cap: EXHAUSTIVE_DIM_CAP,
        });
    }
    let count: u64 = 1u64 << n;
    Ok((0..count).map(move |m| Vertex {
        mask: m as u32,
        dim: n as u32,
    }))
}
