//! Magnitude machinery, the exact biased-subset-sum oracle, the
//! anti-concentration bound checker, and the Hoeffding bound evaluator.
//!
//! The central object is the exact law of `⟨v, w⟩` for a product-distributed
//! random sign vector `w` with biases `p ∈ [1/3, 2/3]^n`: a finite map from
//! achievable sums to exact rational probabilities, computed by convolution
//! over partial-sum supports. Anti-concentration says such a sum hits any
//! single value with probability at most `(2/3)^⌈S/2⌉` when `v` has at least
//! `S` non-zero entries of pairwise distinct magnitudes; the checker computes
//! both sides exactly.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::integer::Integer;
use num::traits::{One, Signed, Zero};

use crate::error::Error;
use crate::interval::{exp_of, Interval, Precision};
use crate::scalar::{pow10, ratio, Scalar};
use crate::Result;

/// Size guard: largest vector length for the exact distribution.
pub const SUBSET_SUM_DIM_CAP: usize = 40;
/// Size guard: largest number of distinct partial sums held at once.
pub const SUBSET_SUM_SUPPORT_CAP: usize = 1 << 20;

/// The unique integer `j` with `10^j ≤ |x| < 10^{j+1}`, by exact rational
/// comparison. Errors on `x = 0`.
pub fn magnitude(x: &Scalar) -> Result<i64> {
    if x.is_zero() {
        return Err(Error::MagnitudeOfZero);
    }
    let abs = x.abs();
    // First guess from bit lengths, then correct by exact comparison; the
    // guess is off by at most a couple of steps.
    let bits = abs.numer().bits() as i64 - abs.denom().bits() as i64;
    let mut j = (bits as f64 * std::f64::consts::LOG10_2).floor() as i64;
    let p10 = |e: i64| pow10(e.clamp(i32::MIN as i64, i32::MAX as i64) as i32);
    while abs < p10(j) {
        j -= 1;
    }
    while abs >= p10(j + 1) {
        j += 1;
    }
    Ok(j)
}

/// Number of distinct magnitudes among the non-zero entries of `v`.
pub fn count_magnitudes(v: &[Scalar]) -> usize {
    let mut seen = std::collections::BTreeSet::new();
    for x in v {
        if !x.is_zero() {
            seen.insert(magnitude(x).expect("non-zero entry"));
        }
    }
    seen.len()
}

/// The anti-concentration bound `(2/3)^⌈s/2⌉`.
pub fn magnitude_bound(s: usize) -> Scalar {
    let e = s.div_ceil(2) as u32;
    let two_thirds = ratio(2, 3);
    num::pow::pow(two_thirds, e as usize)
}

/// A bias vector `p ∈ [1/3, 2/3]^n`: coordinate `j` of the random sign
/// vector is `+1` with probability `p_j`, independently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiasVector(Vec<Scalar>);

impl BiasVector {
    pub fn new(p: Vec<Scalar>) -> Result<Self> {
        let lo = ratio(1, 3);
        let hi = ratio(2, 3);
        for (j, q) in p.iter().enumerate() {
            if *q < lo || *q > hi {
                return Err(Error::Invalid(format!(
                    "bias p_{} = {q} outside [1/3, 2/3]",
                    j + 1
                )));
            }
        }
        Ok(BiasVector(p))
    }

    /// The uniform vector `p_j = 1/2`.
    pub fn uniform(n: usize) -> Self {
        BiasVector(vec![ratio(1, 2); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.0
    }
}

/// The exact law of `⟨v, w⟩`: a finite map from values to probabilities,
/// all rational, summing to one.
#[derive(Debug, Clone)]
pub struct SumDistribution {
    support: BTreeMap<Scalar, Scalar>,
}

impl SumDistribution {
    pub fn support(&self) -> &BTreeMap<Scalar, Scalar> {
        &self.support
    }

    pub fn probability_of(&self, value: &Scalar) -> Scalar {
        self.support.get(value).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn total(&self) -> Scalar {
        let mut acc = Scalar::zero();
        for p in self.support.values() {
            acc += p;
        }
        acc
    }
}

fn guard_len(n: usize, p_len: usize) -> Result<()> {
    if n != p_len {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p_len,
        });
    }
    if n > SUBSET_SUM_DIM_CAP {
        return Err(Error::SizeGuard {
            what: format!("vector length {n} exceeds cap {SUBSET_SUM_DIM_CAP}"),
        });
    }
    Ok(())
}

/// Common denominator of `v` (and optionally `alpha`), with the scaled
/// integer values. Integer keys keep the convolution maps cheap.
fn integerize(v: &[Scalar], alpha: Option<&Scalar>) -> (Vec<BigInt>, Option<BigInt>, BigInt) {
    let mut lcm = BigInt::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    if let Some(a) = alpha {
        lcm = lcm.lcm(a.denom());
    }
    let scaled: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let alpha_scaled = alpha.map(|a| a.numer() * (&lcm / a.denom()));
    (scaled, alpha_scaled, lcm)
}

/// The full exact law of `⟨v, w⟩` under the product distribution `p`.
pub fn sum_distribution(v: &[Scalar], p: &BiasVector) -> Result<SumDistribution> {
    guard_len(v.len(), p.len())?;
    let (scaled, _, lcm) = integerize(v, None);
    let mut states: BTreeMap<BigInt, Scalar> = BTreeMap::new();
    states.insert(BigInt::zero(), Scalar::one());
    for (value, bias) in scaled.iter().zip(p.entries()) {
        let q = Scalar::one() - bias;
        let mut next: BTreeMap<BigInt, Scalar> = BTreeMap::new();
        for (s, prob) in &states {
            if !bias.is_zero() {
                *next.entry(s + value).or_insert_with(Scalar::zero) += prob * bias;
            }
            if !q.is_zero() {
                *next.entry(s - value).or_insert_with(Scalar::zero) += prob * &q;
            }
        }
        if next.len() > SUBSET_SUM_SUPPORT_CAP {
            return Err(Error::SizeGuard {
                what: format!(
                    "partial-sum support {} exceeds cap {SUBSET_SUM_SUPPORT_CAP}",
                    next.len()
                ),
            });
        }
        states = next;
    }
    let denom = Scalar::from_integer(lcm);
    let support = states
        .into_iter()
        .map(|(s, prob)| (Scalar::from_integer(s) / &denom, prob))
        .collect();
    Ok(SumDistribution { support })
}

/// Exact probability that `⟨v, w⟩ = α`. Prunes partial sums that can no
/// longer reach `α`, so point queries stay cheap even when the full support
/// would not.
pub fn exact_hit_probability(v: &[Scalar], p: &BiasVector, alpha: &Scalar) -> Result<Scalar> {
    guard_len(v.len(), p.len())?;
    let (scaled, target, _) = integerize(v, Some(alpha));
    let target = target.expect("alpha provided");

    // Suffix reach: after placing j entries, a state s is alive only if
    // |s - target| ≤ Σ_{t>j} |v_t|.
    let mut reach: Vec<BigInt> = vec![BigInt::zero(); v.len() + 1];
    for j in (0..v.len()).rev() {
        reach[j] = &reach[j + 1] + scaled[j].abs();
    }

    let mut states: BTreeMap<BigInt, Scalar> = BTreeMap::new();
    states.insert(BigInt::zero(), Scalar::one());
    for (j, (value, bias)) in scaled.iter().zip(p.entries()).enumerate() {
        let q = Scalar::one() - bias;
        let mut next: BTreeMap<BigInt, Scalar> = BTreeMap::new();
        for (s, prob) in &states {
            for (delta_sign, weight) in [(1i8, bias), (-1i8, &q)] {
                if weight.is_zero() {
                    continue;
                }
                let ns = if delta_sign == 1 { s + value } else { s - value };
                if (&ns - &target).abs() > reach[j + 1] {
                    continue;
                }
                *next.entry(ns).or_insert_with(Scalar::zero) += prob * weight;
            }
        }
        if next.len() > SUBSET_SUM_SUPPORT_CAP {
            return Err(Error::SizeGuard {
                what: format!(
                    "partial-sum support {} exceeds cap {SUBSET_SUM_SUPPORT_CAP}",
                    next.len()
                ),
            });
        }
        states = next;
    }
    Ok(states.remove(&target).unwrap_or_else(Scalar::zero))
}

/// Result of checking the anti-concentration bound on one instance.
#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub probability: Scalar,
    pub bound: Scalar,
    pub magnitudes: usize,
    pub ok: bool,
}

/// Computes the exact hit probability and the bound `(2/3)^⌈S/2⌉` with
/// `S = count_magnitudes(v)`, and compares them exactly. `ok` must always be
/// true; a false value would contradict the anti-concentration lemma.
pub fn check_hit_probability_bound(
    v: &[Scalar],
    p: &BiasVector,
    alpha: &Scalar,
) -> Result<BoundCheck> {
    let probability = exact_hit_probability(v, p, alpha)?;
    let magnitudes = count_magnitudes(v);
    let bound = magnitude_bound(magnitudes);
    let ok = probability <= bound;
    Ok(BoundCheck {
        probability,
        bound,
        magnitudes,
        ok,
    })
}

/// Hoeffding tail bound `2·exp(-2t² / Σ (2c_j)²)` for independent summands
/// bounded by `|z_j| ≤ c_j`, as a certified enclosure. This is an analytic
/// upper-bound utility; it is never used in exact assertions.
pub fn hoeffding_bound(half_widths: &[Scalar], t: &Scalar, prec: Precision) -> Result<Interval> {
    if !t.is_positive() {
        return Err(Error::Invalid("Hoeffding bound requires t > 0".into()));
    }
    let sum_sq = sum_of_squares(half_widths)?;
    // -2t² / (4·Σc²) = -t² / (2·Σc²), an exact rational exponent.
    let exponent = -(t * t) / (Scalar::from_integer(BigInt::from(2)) * sum_sq);
    Ok(exp_of(&exponent, prec).mul_scalar(&Scalar::from_integer(BigInt::from(2))))
}

/// Same bound with `t²` given as an enclosure, for irrational thresholds.
pub fn hoeffding_bound_t_squared(
    half_widths: &[Scalar],
    t_squared: &Interval,
    prec: Precision,
) -> Result<Interval> {
    if t_squared.lo().is_negative() {
        return Err(Error::Invalid("Hoeffding bound requires t² ≥ 0".into()));
    }
    let sum_sq = sum_of_squares(half_widths)?;
    let factor = -(Scalar::from_integer(BigInt::from(2)) * sum_sq).recip();
    let exponent = t_squared.mul_scalar(&factor);
    Ok(crate::interval::exp_interval(&exponent, prec)
        .mul_scalar(&Scalar::from_integer(BigInt::from(2))))
}

fn sum_of_squares(half_widths: &[Scalar]) -> Result<Scalar> {
    let mut acc = Scalar::zero();
    for c in half_widths {
        acc += c * c;
    }
    if acc.is_zero() {
        return Err(Error::Invalid(
            "Hoeffding bound is degenerate with all-zero widths".into(),
        ));
    }
    Ok(acc)
}
