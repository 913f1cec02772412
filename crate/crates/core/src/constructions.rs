//! Generators: the textbook covers, plus seeded random matrices and covers
//! for property testing.

use num::bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::cover::{Cover, Hyperplane};
use crate::error::Error;
use crate::matrix::Matrix;
use crate::scalar::{pow10, Scalar};
use crate::Result;

fn int(v: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(v))
}

/// The skew cover by level sets: planes `x_1 + … + x_n = n - 2t` for
/// `t = 0, …, n`. Has `n+1` planes, covers every vertex, and every plane has
/// full support.
pub fn skew_cover(n: usize) -> Result<Cover> {
    if n == 0 {
        return Err(Error::DimensionOutOfRange { n: 0, cap: usize::MAX });
    }
    let planes = (0..=n)
        .map(|t| Hyperplane::new(vec![int(1); n], int(n as i64 - 2 * t as i64)))
        .collect::<Result<Vec<_>>>()?;
    Cover::new(n, planes)
}

/// The two-plane cover `x_1 = 1`, `x_1 = -1`. Covers every vertex but is not
/// truly n-dimensional for `n ≥ 2` (fails E2).
pub fn trivial_cover(n: usize) -> Result<Cover> {
    if n == 0 {
        return Err(Error::DimensionOutOfRange { n: 0, cap: usize::MAX });
    }
    let mut coeffs = vec![int(0); n];
    coeffs[0] = int(1);
    Cover::new(
        n,
        vec![
            Hyperplane::new(coeffs.clone(), int(1))?,
            Hyperplane::new(coeffs, int(-1))?,
        ],
    )
}

/// The trivial cover padded with `x_1 + … + x_n = 0`: passes E1 and E2 but
/// the appended plane has no private vertex, so E3 fails exactly there.
pub fn padded_nonessential(n: usize) -> Result<Cover> {
    if n < 2 {
        return Err(Error::DimensionOutOfRange { n, cap: usize::MAX });
    }
    let mut planes = trivial_cover(n)?.planes().to_vec();
    planes.push(Hyperplane::new(vec![int(1); n], int(0))?);
    Cover::new(n, planes)
}

/// Bound on random mantissa denominators, keeping exact arithmetic fast.
pub const MAX_RANDOM_DENOMINATOR: i64 = 100;

fn random_nonzero_entry(
    rng: &mut ChaCha12Rng,
    magnitudes: std::ops::RangeInclusive<i32>,
) -> Scalar {
    let m = rng.gen_range(*magnitudes.start()..=*magnitudes.end());
    // Mantissa in [1, 10) with denominator ≤ MAX_RANDOM_DENOMINATOR.
    let den = rng.gen_range(1..=MAX_RANDOM_DENOMINATOR);
    let num = rng.gen_range(den..10 * den);
    let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
    Scalar::new(BigInt::from(sign * num), BigInt::from(den)) * pow10(m)
}

/// Seeded random `k×n` matrix. Each entry is zero with probability
/// `1 - density`, otherwise `±10^m · r` with `m` uniform in `magnitudes` and
/// `r ∈ [1, 10)` a rational with bounded denominator. Deterministic in
/// `seed`.
pub fn random_matrix(
    k: usize,
    n: usize,
    magnitudes: std::ops::RangeInclusive<i32>,
    density: f64,
    seed: u64,
) -> Result<Matrix> {
    if k == 0 || n == 0 {
        return Err(Error::Invalid("matrix dimensions must be positive".into()));
    }
    if magnitudes.is_empty() {
        return Err(Error::Invalid("empty magnitude range".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Invalid(format!(
            "density must satisfy 0 < density <= 1, got {density}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(k);
    for _ in 0..k {
        let mut row = Vec::with_capacity(n);
        for _ in 0..n {
            if rng.gen_bool(density) {
                row.push(random_nonzero_entry(&mut rng, magnitudes.clone()));
            } else {
                row.push(Scalar::from_integer(BigInt::from(0)));
            }
        }
        rows.push(row);
    }
    Matrix::from_rows(rows)
}

/// Seeded random skew cover: `extra` random full-support integer planes plus
/// the skew construction as a backstop, so E1 always holds and every plane
/// has full support. Deterministic in `seed`.
pub fn random_skew_cover(n: usize, extra: usize, seed: u64) -> Result<Cover> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut planes = Vec::with_capacity(extra + n + 1);
    for _ in 0..extra {
        let coeffs: Vec<Scalar> = (0..n)
            .map(|_| {
                let v = rng.gen_range(1..=9i64);
                let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
                int(sign * v)
            })
            .collect();
        // Offsets stay within the achievable sum range so some of these
        // planes really cut the cube.
        let bound = 9 * n as i64;
        let offset = int(rng.gen_range(-bound..=bound));
        planes.push(Hyperplane::new(coeffs, offset)?);
    }
    planes.extend(skew_cover(n)?.planes().iter().cloned());
    Cover::new(n, planes)
}
