//! Exact rational scalars.
//!
//! Every coefficient, offset and probability in this crate is a [`Scalar`]:
//! an arbitrary-precision rational kept in canonical reduced form (positive
//! denominator, `gcd(|numerator|, denominator) = 1`). Arithmetic and
//! comparison are exact; nothing in the crate ever rounds a `Scalar`.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, Zero};

use crate::error::Error;
use crate::Result;

/// Exact rational number. `num::BigRational` maintains exactly the canonical
/// form this crate relies on: reduced fraction with positive denominator.
pub type Scalar = BigRational;

/// Shorthand for an integer-valued scalar.
pub fn int(value: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(value))
}

/// Shorthand for `p/q`. Panics on `q = 0`.
pub fn ratio(p: i64, q: i64) -> Scalar {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// `10^e` as an exact rational, for any sign of `e`.
pub fn pow10(e: i32) -> Scalar {
    let base = BigInt::from(10).pow(e.unsigned_abs());
    if e >= 0 {
        BigRational::from_integer(base)
    } else {
        BigRational::new(BigInt::one(), base)
    }
}

/// Parses a scalar written as `p` or `p/q` (optional leading sign).
///
/// This is the exact on-disk format used by cover and matrix files; no
/// decimal notation is accepted, so parsing never rounds.
pub fn parse_scalar(token: &str) -> std::result::Result<Scalar, String> {
    let parse_int = |s: &str| -> std::result::Result<BigInt, String> {
        if s.is_empty() {
            return Err("empty integer".to_string());
        }
        let body = s.strip_prefix('-').or_else(|| s.strip_prefix('+')).unwrap_or(s);
        if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("invalid integer `{s}`"));
        }
        s.parse::<BigInt>().map_err(|e| e.to_string())
    };
    match token.split_once('/') {
        None => Ok(BigRational::from_integer(parse_int(token)?)),
        Some((p, q)) => {
            let num = parse_int(p)?;
            let den = parse_int(q)?;
            if den.is_zero() {
                return Err(format!("zero denominator in `{token}`"));
            }
            Ok(BigRational::new(num, den))
        }
    }
}

/// Formats a scalar in the on-disk format: `p` for integers, `p/q` otherwise.
/// `BigRational`'s own `Display` already does exactly this; the wrapper
/// exists so call sites do not depend on that detail.
pub fn format_scalar(x: &Scalar) -> String {
    x.to_string()
}

/// Interprets a scalar as `f64`, for display only.
pub fn to_f64(x: &Scalar) -> f64 {
    use num::ToPrimitive;
    x.to_f64().unwrap_or_else(|| {
        // Out-of-range values only appear in diagnostics; saturate.
        if x.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact inner product of a coefficient vector with a `±1` sign slice.
pub fn signed_sum(coeffs: &[Scalar], signs: &[i8]) -> Result<Scalar> {
    if coeffs.len() != signs.len() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.len(),
            got: signs.len(),
        });
    }
    let mut acc = Scalar::zero();
    for (c, &s) in coeffs.iter().zip(signs) {
        if s >= 0 {
            acc += c;
        } else {
            acc -= c;
        }
    }
    Ok(acc)
}
