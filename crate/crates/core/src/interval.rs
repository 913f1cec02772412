//! Certified real arithmetic: intervals with exact rational endpoints.
//!
//! The irrational quantities in this crate — `√N`, `log n`, `exp(·)` and
//! their combinations — are never represented by floating point. Each is
//! computed as an enclosing interval `[lo, hi]` of exact rationals whose
//! width is controlled by a [`Precision`] (number of fractional bits).
//! A comparison against a rational threshold is then either decided
//! (the interval lies strictly on one side) or reported as [`Cmp::Undecided`],
//! in which case callers re-run at doubled precision via [`refine_until`].
//!
//! `ln` uses the `atanh` series after reduction by powers of two, `exp` uses
//! the Taylor series after range reduction and repeated squaring, and square
//! roots come from integer square roots of scaled numerators. All series
//! tails are bounded explicitly, so the returned intervals are true
//! enclosures, not estimates.

use num::bigint::BigInt;
use num::traits::{One, Signed, Zero};

use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;

/// Number of fractional bits the enclosure must resolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precision(pub u32);

impl Precision {
    /// Default working precision (fractional bits).
    pub const DEFAULT: Precision = Precision(128);
    /// Hard ceiling for automatic refinement.
    pub const CAP: u32 = 8192;

    pub fn doubled(self) -> Precision {
        Precision((self.0 * 2).min(Self::CAP))
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::DEFAULT
    }
}

/// Outcome of a certified comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Less,
    Greater,
    Undecided,
}

/// A closed interval `[lo, hi]` with exact rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    lo: Scalar,
    hi: Scalar,
}

impl Interval {
    pub fn new(lo: Scalar, hi: Scalar) -> Self {
        debug_assert!(lo <= hi, "inverted interval");
        Interval { lo, hi }
    }

    pub fn point(x: Scalar) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    pub fn lo(&self) -> &Scalar {
        &self.lo
    }

    pub fn hi(&self) -> &Scalar {
        &self.hi
    }

    pub fn width(&self) -> Scalar {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Scalar {
        (&self.lo + &self.hi) / Scalar::from_integer(BigInt::from(2))
    }

    pub fn contains(&self, x: &Scalar) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval::new(&self.lo + &other.lo, &self.hi + &other.hi)
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        Interval::new(&self.lo - &other.hi, &self.hi - &other.lo)
    }

    pub fn neg(&self) -> Interval {
        Interval::new(-self.hi.clone(), -self.lo.clone())
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let candidates = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = candidates.iter().min().unwrap().clone();
        let hi = candidates.iter().max().unwrap().clone();
        Interval::new(lo, hi)
    }

    pub fn add_scalar(&self, x: &Scalar) -> Interval {
        Interval::new(&self.lo + x, &self.hi + x)
    }

    pub fn mul_scalar(&self, x: &Scalar) -> Interval {
        if x.is_negative() {
            Interval::new(&self.hi * x, &self.lo * x)
        } else {
            Interval::new(&self.lo * x, &self.hi * x)
        }
    }

    /// Reciprocal; requires the interval to be sign-definite.
    pub fn recip(&self) -> Result<Interval> {
        if self.lo.is_positive() || self.hi.is_negative() {
            Ok(Interval::new(self.hi.recip(), self.lo.recip()))
        } else {
            Err(Error::Invalid("reciprocal of an interval containing zero".into()))
        }
    }

    /// Square of a non-negative interval.
    pub fn square_nonneg(&self) -> Interval {
        debug_assert!(!self.lo.is_negative());
        Interval::new(&self.lo * &self.lo, &self.hi * &self.hi)
    }

    /// Certified three-way comparison against an exact rational.
    pub fn cmp_scalar(&self, x: &Scalar) -> Cmp {
        if self.hi < *x {
            Cmp::Less
        } else if self.lo > *x {
            Cmp::Greater
        } else {
            Cmp::Undecided
        }
    }

    /// Certified three-way comparison against another interval.
    pub fn cmp_interval(&self, other: &Interval) -> Cmp {
        if self.hi < other.lo {
            Cmp::Less
        } else if self.lo > other.hi {
            Cmp::Greater
        } else {
            Cmp::Undecided
        }
    }

    /// Rounds the endpoints outward to denominators `2^bits`, keeping the
    /// enclosure property while capping rational size.
    pub fn round_out(&self, bits: u32) -> Interval {
        let scale = BigInt::one() << bits;
        let scale_r = Scalar::from_integer(scale.clone());
        let lo = (&self.lo * &scale_r).floor() / scale_r.clone();
        let hi = (&self.hi * &scale_r).ceil() / scale_r;
        Interval::new(lo, hi)
    }

    /// Midpoint as `f64`, for display.
    pub fn to_f64(&self) -> f64 {
        crate::scalar::to_f64(&self.midpoint())
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.*}", f.precision().unwrap_or(12), self.to_f64())
    }
}

fn two() -> Scalar {
    Scalar::from_integer(BigInt::from(2))
}

fn pow2(bits: u32) -> Scalar {
    Scalar::from_integer(BigInt::one() << bits)
}

fn pow2_inv(bits: u32) -> Scalar {
    Scalar::new(BigInt::one(), BigInt::one() << bits)
}

/// Enclosure of `√x` for a non-negative rational `x`, with absolute width at
/// most `2^-p` (up to the denominator scaling). Computed from the integer
/// square root of `num·den·4^p`.
pub fn sqrt_of(x: &Scalar, p: Precision) -> Result<Interval> {
    if x.is_negative() {
        return Err(Error::Invalid("square root of a negative rational".into()));
    }
    if x.is_zero() {
        return Ok(Interval::point(Scalar::zero()));
    }
    let num = x.numer();
    let den = x.denom();
    // √(a/b) = √(ab)/b; scale by 4^p for p fractional bits.
    let scaled: BigInt = (num * den) << (2 * p.0);
    let root = scaled.sqrt();
    let denom = Scalar::from_integer(den * (BigInt::one() << p.0));
    let lo = Scalar::from_integer(root.clone()) / denom.clone();
    if &root * &root == scaled {
        Ok(Interval::point(lo))
    } else {
        let hi = Scalar::from_integer(root + BigInt::one()) / denom;
        Ok(Interval::new(lo, hi))
    }
}

/// Enclosure of `√I` for a non-negative interval.
pub fn sqrt_interval(i: &Interval, p: Precision) -> Result<Interval> {
    let lo = sqrt_of(i.lo(), p)?;
    let hi = sqrt_of(i.hi(), p)?;
    Ok(Interval::new(lo.lo.clone(), hi.hi.clone()))
}

/// `atanh(z) = Σ z^{2k+1}/(2k+1)` for `0 ≤ z ≤ 1/3`, as an enclosure with
/// tail bound `z^{2K+1} / ((2K+1)(1−z²))`.
fn atanh_small(z: &Scalar, p: Precision) -> Interval {
    debug_assert!(!z.is_negative() && *z <= Scalar::new(BigInt::one(), BigInt::from(3)));
    if z.is_zero() {
        return Interval::point(Scalar::zero());
    }
    let z2 = z * z;
    let tol = pow2_inv(p.0 + 2);
    let mut sum = Scalar::zero();
    let mut power = z.clone(); // z^{2k+1}
    let mut k = 0u32;
    loop {
        sum += &power / Scalar::from_integer(BigInt::from(2 * k + 1));
        power *= &z2;
        k += 1;
        // Tail after k terms: Σ_{j>=k} z^{2j+1}/(2j+1) <= z^{2k+1}/((2k+1)(1-z^2)).
        let tail = &power
            / (Scalar::from_integer(BigInt::from(2 * k + 1)) * (Scalar::one() - &z2));
        if tail < tol {
            return Interval::new(sum.clone(), sum + tail).round_out(p.0 + 8);
        }
    }
}

/// Enclosure of `ln 2`. Cached per precision; every logarithm reduces
/// through it.
pub fn ln2(p: Precision) -> Interval {
    use std::collections::HashMap;
    use std::sync::{Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<u32, Interval>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&p.0) {
        return hit.clone();
    }
    // ln 2 = 2·atanh(1/3).
    let value = atanh_small(&Scalar::new(BigInt::one(), BigInt::from(3)), Precision(p.0 + 4))
        .mul_scalar(&two());
    cache.lock().unwrap().insert(p.0, value.clone());
    value
}

/// Floor of `log2(x)` for a positive rational, by exact comparison.
fn floor_log2(x: &Scalar) -> i64 {
    debug_assert!(x.is_positive());
    let mut m = x.numer().bits() as i64 - x.denom().bits() as i64;
    // The bit-length estimate is off by at most one; fix up exactly.
    let pow = |e: i64| -> Scalar {
        if e >= 0 {
            Scalar::from_integer(BigInt::one() << e as u64)
        } else {
            Scalar::new(BigInt::one(), BigInt::one() << (-e) as u64)
        }
    };
    while *x < pow(m) {
        m -= 1;
    }
    while *x >= pow(m + 1) {
        m += 1;
    }
    m
}

/// Enclosure of the natural logarithm of a positive rational.
pub fn ln_of(x: &Scalar, p: Precision) -> Result<Interval> {
    if !x.is_positive() {
        return Err(Error::Invalid("logarithm of a non-positive rational".into()));
    }
    if x.is_one() {
        return Ok(Interval::point(Scalar::zero()));
    }
    let inner = Precision(p.0 + 8);
    let m = floor_log2(x);
    // t = x / 2^m ∈ [1, 2); ln x = m·ln2 + 2·atanh((t−1)/(t+1)).
    let t = if m >= 0 {
        x / Scalar::from_integer(BigInt::one() << m as u64)
    } else {
        x * Scalar::from_integer(BigInt::one() << (-m) as u64)
    };
    let z = (&t - Scalar::one()) / (&t + Scalar::one());
    let ln_t = atanh_small(&z, inner).mul_scalar(&two());
    let result = if m == 0 {
        ln_t
    } else {
        ln_t.add(&ln2(inner).mul_scalar(&Scalar::from_integer(BigInt::from(m))))
    };
    Ok(result.round_out(p.0 + 4))
}

/// Enclosure of `ln` over a positive interval (monotone).
pub fn ln_interval(i: &Interval, p: Precision) -> Result<Interval> {
    let lo = ln_of(i.lo(), p)?;
    let hi = ln_of(i.hi(), p)?;
    Ok(Interval::new(lo.lo.clone(), hi.hi.clone()))
}

/// Enclosure of `exp(x)` for a rational `x`.
pub fn exp_of(x: &Scalar, p: Precision) -> Interval {
    if x.is_zero() {
        return Interval::point(Scalar::one());
    }
    // Range-reduce so |u| ≤ 1/2, exp(x) = exp(u)^(2^s).
    let abs = x.abs();
    let s: u32 = if abs <= Scalar::new(BigInt::one(), BigInt::from(2)) {
        0
    } else {
        (floor_log2(&abs) + 2).max(1) as u32
    };
    let u = x / pow2(s);
    debug_assert!(u.abs() <= Scalar::new(BigInt::one(), BigInt::from(2)));

    // Squaring s times compounds relative error ~2^s-fold; demand more bits.
    let target_bits = p.0 + 2 * s + 8;
    let tol = pow2_inv(target_bits);

    let mut sum = Scalar::one();
    let mut term = Scalar::one(); // u^k / k!
    let mut k: u32 = 0;
    let tail = loop {
        k += 1;
        term = term * &u / Scalar::from_integer(BigInt::from(k));
        sum += &term;
        // |R| ≤ |u|^{k+1}/(k+1)! · 1/(1−|u|) ≤ 2·|term|·|u|.
        let bound = term.abs() * u.abs() * two();
        if bound < tol {
            break bound;
        }
    };
    let mut enc = Interval::new(&sum - &tail, &sum + &tail).round_out(target_bits + 8);
    debug_assert!(enc.lo.is_positive());
    for _ in 0..s {
        enc = enc.square_nonneg().round_out(target_bits + 8);
    }
    enc.round_out(p.0 + 4)
}

/// Enclosure of `exp` over an interval (monotone).
pub fn exp_interval(i: &Interval, p: Precision) -> Interval {
    let lo = exp_of(i.lo(), p);
    let hi = exp_of(i.hi(), p);
    Interval::new(lo.lo.clone(), hi.hi.clone())
}

/// Runs `f` at increasing precision until it reports a decision, doubling up
/// to [`Precision::CAP`]. `None` from `f` means "undecided, refine".
pub fn refine_until<T>(
    start: Precision,
    what: &str,
    mut f: impl FnMut(Precision) -> Result<Option<T>>,
) -> Result<T> {
    let mut p = start;
    loop {
        if let Some(value) = f(p)? {
            return Ok(value);
        }
        if p.0 >= Precision::CAP {
            return Err(Error::PrecisionExhausted {
                cap: Precision::CAP,
                what: what.to_string(),
            });
        }
        p = p.doubled();
    }
}

/// Certified `⌈c·ln n⌉` for rational `c > 0` and integer `n ≥ 2`. Refines
/// until the enclosure of `c·ln n` pins a single ceiling value (always
/// terminates: `c·ln n` is irrational for integer `n ≥ 2`).
pub fn ceil_of_log_multiple(c: &Scalar, n: usize, p: Precision) -> Result<u32> {
    let n_scalar = Scalar::from_integer(BigInt::from(n));
    refine_until(p, &format!("ceil({c}·ln {n})"), |prec| {
        let enc = ln_of(&n_scalar, prec)?.mul_scalar(c);
        let lo_ceil = enc.lo().ceil();
        let hi_ceil = enc.hi().ceil();
        if lo_ceil == hi_ceil {
            use num::ToPrimitive;
            Ok(Some(lo_ceil.to_integer().to_u32().ok_or_else(|| {
                Error::Invalid("ceiling does not fit in u32".into())
            })?))
        } else {
            Ok(None)
        }
    })
}
