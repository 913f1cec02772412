//! Cover-size bounds: the `10^{-2}·n^{2/3}/(ln n)^{2/3}` essential-cover
//! lower bound and the `n/2` skew-cover lower bound.

use crate::error::Error;
use crate::interval::{exp_interval, ln_interval, ln_of, Interval, Precision};
use crate::scalar::{int, ratio, Scalar};
use crate::Result;

/// Enclosure of `10^{-2}·n^{2/3}/(ln n)^{2/3}` for `n ≥ 2`.
///
/// This bound is asymptotic: it stays below 1 for every `n ≤ 10^6`, so no
/// desk-scale cover can exhibit it. The calculator exists to evaluate and
/// print it, not to test covers against it.
pub fn essential_cover_bound(n: u64, prec: Precision) -> Result<Interval> {
    if n < 2 {
        return Err(Error::Invalid("the bound is defined for n ≥ 2".into()));
    }
    let two_thirds = ratio(2, 3);
    let ln_n = ln_of(&int(n as i64), prec)?;
    // n^{2/3} = exp((2/3)·ln n), (ln n)^{2/3} = exp((2/3)·ln ln n).
    let n_pow = exp_interval(&ln_n.mul_scalar(&two_thirds), prec);
    let ln_ln = ln_interval(&ln_n, prec)?;
    let log_pow = exp_interval(&ln_ln.mul_scalar(&two_thirds), prec);
    Ok(n_pow
        .mul(&log_pow.recip()?)
        .mul_scalar(&ratio(1, 100)))
}

/// The skew-cover lower bound `n/2`, exact.
pub fn skew_cover_bound(n: u64) -> Scalar {
    ratio(n as i64, 2)
}

/// Formats the midpoint of an enclosure to the given number of significant
/// digits, for display.
pub fn format_sig_digits(value: &Interval, digits: usize) -> String {
    let x = value.to_f64();
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - exponent).clamp(0, 18) as usize;
    format!("{x:.decimals$}")
}
