//! The uncovered-vertex pipeline: fix the coordinates in `N2`
//! deterministically from a private vertex, build a rounding plan on `N1`
//! from the Bang rounding point, account for every plane's hit probability
//! exactly, and sample until a vertex misses all planes.
//!
//! The pipeline accepts any decomposition whose zero-block condition holds
//! (checked exactly); the stronger column-norm and magnitude conditions are
//! only needed for the analytic per-plane bounds, and the accounting reports
//! per plane which of those bounds applied. At desk scale no decomposition
//! has a non-empty `K2` or `K3` satisfying them — the thresholds exceed the
//! dimension — so the exact accounting is the operative check and the
//! analytic bounds only bind on large synthetic instances.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::traits::{One, Signed, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::anticoncentration::{
    count_magnitudes, exact_hit_probability, magnitude_bound, BiasVector,
};
use crate::bang::{rounding_point, RowNormMode};
use crate::cover::Cover;
use crate::cube::Vertex;
use crate::decompose::{check_decomposition, decompose, Decomposition, DecompositionReport};
use crate::error::Error;
use crate::interval::{ln_of, refine_until, sqrt_interval, sqrt_of, Cmp, Interval, Precision};
use crate::matrix::Matrix;
use crate::scalar::{int, ratio, Scalar};
use crate::verify::{check_e3, scale_plane, ScaledPlane};
use crate::{Result, EXHAUSTIVE_DIM_CAP};

/// Default number of sampling attempts; with miss probability at least 1/2
/// the chance of exhausting them is at most `2^-64`.
pub const DEFAULT_MAX_TRIES: u32 = 64;

/// Exhaustive re-verification of the fixed assignment is performed when
/// `|N1|` is at most this.
const EXHAUSTIVE_EXTENSION_CAP: usize = 20;

/// The deterministic `±1` assignment on `N2`.
#[derive(Debug, Clone)]
pub struct FixedAssignment {
    /// Signs parallel to the decomposition's sorted `N2`.
    pub w_tilde: Vec<i8>,
    /// The private vertex the assignment was restricted from.
    pub witness: Vertex,
    /// The plane (smallest index outside `K1`) whose private vertex was used.
    pub source_plane: usize,
}

/// Validates what the pipeline actually relies on: matching dimensions, a
/// genuine partition, and the zero block `V[K1×N1] = 0` (exact).
fn validate_for_pipeline(cover: &Cover, d: &Decomposition) -> Result<()> {
    let k = cover.len();
    let n = cover.dim();
    let mut seen_rows = vec![false; k];
    for &i in d.k1.iter().chain(&d.k2).chain(&d.k3) {
        if i == 0 || i > k || seen_rows[i - 1] {
            return Err(Error::InvalidDecomposition(format!(
                "row indices do not partition [{k}]"
            )));
        }
        seen_rows[i - 1] = true;
    }
    if !seen_rows.iter().all(|&s| s) {
        return Err(Error::InvalidDecomposition(format!(
            "row indices do not partition [{k}]"
        )));
    }
    let mut seen_cols = vec![false; n];
    for &j in d.n1.iter().chain(&d.n2) {
        if j == 0 || j > n || seen_cols[j - 1] {
            return Err(Error::InvalidDecomposition(format!(
                "column indices do not partition [{n}]"
            )));
        }
        seen_cols[j - 1] = true;
    }
    if !seen_cols.iter().all(|&s| s) {
        return Err(Error::InvalidDecomposition(format!(
            "column indices do not partition [{n}]"
        )));
    }
    for &i in &d.k1 {
        for &j in &d.n1 {
            if !cover.plane(i).coeffs()[j - 1].is_zero() {
                return Err(Error::InvalidDecomposition(format!(
                    "V[{i},{j}] ≠ 0 inside the K1×N1 block"
                )));
            }
        }
    }
    Ok(())
}

/// Restriction of `⟨v_i, ·⟩` to the `N2` coordinates of a fixed assignment.
fn n2_inner_product(cover: &Cover, d: &Decomposition, w_tilde: &[i8], i: usize) -> Scalar {
    let mut acc = Scalar::zero();
    for (&j, &s) in d.n2.iter().zip(w_tilde) {
        let c = &cover.plane(i).coeffs()[j - 1];
        if s >= 0 {
            acc += c;
        } else {
            acc -= c;
        }
    }
    acc
}

/// Fixes `w` on `N2` from a private vertex of the smallest-index plane
/// outside `K1`. Every extension onto `N1` then misses all `K1` planes,
/// because those rows vanish on `N1`; this is re-verified exactly, and
/// exhaustively when `|N1|` is small enough.
pub fn fix_n2(cover: &Cover, d: &Decomposition) -> Result<FixedAssignment> {
    if cover.dim() > EXHAUSTIVE_DIM_CAP {
        return Err(Error::DimensionOverCap {
            n: cover.dim(),
            cap: EXHAUSTIVE_DIM_CAP,
        });
    }
    validate_for_pipeline(cover, d)?;
    let source_plane = (1..=cover.len())
        .find(|i| !d.k1.contains(i))
        .ok_or(Error::KOneIsAllRows)?;
    let (_, witnesses) = check_e3(cover)?;
    let witness = witnesses[source_plane - 1].ok_or(Error::NoWitness {
        plane: source_plane,
    })?;
    let w_tilde: Vec<i8> = d.n2.iter().map(|&j| witness.coordinate(j)).collect();

    // Guarantee: for i ∈ K1, ⟨v_i, w⟩ = ⟨v_i|N2, w̃⟩ ≠ μ_i independently of
    // the N1 coordinates.
    for &i in &d.k1 {
        if &n2_inner_product(cover, d, &w_tilde, i) == cover.plane(i).offset() {
            return Err(Error::Invalid(format!(
                "fixed assignment lands on plane {i} despite the private vertex"
            )));
        }
    }
    if d.n1.len() <= EXHAUSTIVE_EXTENSION_CAP && !d.k1.is_empty() {
        let scaled: Vec<ScaledPlane> = d.k1.iter().map(|&i| scale_plane(cover.plane(i))).collect();
        let base = assemble_mask(d, &w_tilde, 0);
        for ext in 0..(1u64 << d.n1.len()) {
            let mask = extend_mask(base, d, ext as u32);
            for (idx, plane) in scaled.iter().enumerate() {
                if plane.hits_mask(mask) {
                    return Err(Error::Invalid(format!(
                        "extension {ext:#x} lands on K1 plane {}",
                        d.k1[idx]
                    )));
                }
            }
        }
    }

    Ok(FixedAssignment {
        w_tilde,
        witness,
        source_plane,
    })
}

/// Mask with the `N2` bits set from `w_tilde` and the `N1` bits zeroed.
fn assemble_mask(d: &Decomposition, w_tilde: &[i8], _n1_bits: u32) -> u32 {
    let mut mask = 0u32;
    for (&j, &s) in d.n2.iter().zip(w_tilde) {
        if s >= 0 {
            mask |= 1 << (j - 1);
        }
    }
    mask
}

/// Scatter the `ext` bits onto the `N1` coordinate positions.
fn extend_mask(base: u32, d: &Decomposition, ext: u32) -> u32 {
    let mut mask = base;
    for (pos, &j) in d.n1.iter().enumerate() {
        if ext >> pos & 1 == 1 {
            mask |= 1 << (j - 1);
        }
    }
    mask
}

/// The rounding plan: fixed `N2` signs, rational rounding point `y` on `N1`
/// with `‖y‖∞ ≤ 1/3`, biases `p_j = (1+y_j)/2`, and the certified threshold
/// data.
#[derive(Debug, Clone)]
pub struct RoundingPlan {
    /// Sorted `N2` columns with their fixed signs.
    pub n2: Vec<usize>,
    pub w_tilde: Vec<i8>,
    /// Sorted `N1` columns carrying the product distribution.
    pub n1: Vec<usize>,
    /// Rounding point, exact rationals, indexed parallel to `n1`.
    pub y: Vec<Scalar>,
    pub p: BiasVector,
    /// Enclosure of `θ = √(6·ln n)`.
    pub theta: Interval,
    /// The rational `θ̂ > θ` the Bang solve actually used (equals zero when
    /// `K2` is empty and no solve ran).
    pub theta_hat: Scalar,
    /// Adjusted offsets `μ′_i = μ_i − ⟨v_i|N2, w̃⟩` for `i ∈ K2`.
    pub mu_prime: BTreeMap<usize, Scalar>,
}

/// Builds the rounding plan. With `K2` empty the point is the origin and
/// every bias is `1/2`. Otherwise the Bang rounding point is computed on a
/// rational surrogate — rows under-normalized by rational scales
/// `s_i ≤ 1/√q_i` and a rational `θ̂` strictly above `√(6·ln n)` — and the
/// plan's distance guarantee `|⟨v_i|N1, y⟩ − μ′_i| ≥ θ·√q_i` is then
/// re-certified exactly (squared comparison against the enclosure of
/// `6·ln n`), so the invariants hold by verification, not by trust in any
/// approximate step.
pub fn build_plan(
    cover: &Cover,
    d: &Decomposition,
    fixed: &FixedAssignment,
    prec: Precision,
) -> Result<RoundingPlan> {
    let n = cover.dim();
    if n < 2 {
        return Err(Error::Invalid("the rounding plan needs n ≥ 2".into()));
    }
    validate_for_pipeline(cover, d)?;
    let theta = theta_interval(n, prec)?;

    let mu_prime: BTreeMap<usize, Scalar> = d
        .k2
        .iter()
        .map(|&i| {
            let adj = cover.plane(i).offset() - n2_inner_product(cover, d, &fixed.w_tilde, i);
            (i, adj)
        })
        .collect();

    if d.k2.is_empty() {
        let y = vec![Scalar::zero(); d.n1.len()];
        let p = BiasVector::uniform(d.n1.len());
        return Ok(RoundingPlan {
            n2: d.n2.clone(),
            w_tilde: fixed.w_tilde.clone(),
            n1: d.n1.clone(),
            y,
            p,
            theta,
            theta_hat: Scalar::zero(),
            mu_prime,
        });
    }

    for &i in &d.k2 {
        let q = d.row_norm_sq.get(&i).ok_or_else(|| {
            Error::InvalidDecomposition(format!("missing row norm for K2 row {i}"))
        })?;
        let mut actual = Scalar::zero();
        for &j in &d.n1 {
            let x = &cover.plane(i).coeffs()[j - 1];
            actual += x * x;
        }
        if &actual != q || !q.is_positive() {
            return Err(Error::InvalidDecomposition(format!(
                "stored squared norm for row {i} does not match the matrix"
            )));
        }
    }

    // Certify the column condition θ·Σ_{i∈K2} |v_ij|/√q_i ≤ 1/3 for every
    // j ∈ N1; a certified violation means no plan exists for this
    // decomposition.
    let third = ratio(1, 3);
    for &j in &d.n1 {
        let ok = refine_until(prec, "rounding-plan column condition", |p| {
            let theta = theta_interval(n, p)?;
            let mut total = Interval::point(Scalar::zero());
            for &i in &d.k2 {
                let inv = sqrt_of(&d.row_norm_sq[&i], p)?.recip()?;
                total = total.add(&inv.mul_scalar(&cover.plane(i).coeffs()[j - 1].abs()));
            }
            Ok(match theta.mul(&total).cmp_scalar(&third) {
                Cmp::Less => Some(true),
                Cmp::Greater => Some(false),
                Cmp::Undecided => None,
            })
        })?;
        if !ok {
            return Err(Error::NoPlan(format!(
                "θ·‖v_*{j}|K2‖₁ exceeds 1/3; the column-norm condition fails"
            )));
        }
    }

    // Rational surrogate solve with exact final certification, refining the
    // surrogate tightness if the certificates do not resolve.
    refine_until(prec, "rounding-plan construction", |p| {
        build_plan_at(cover, d, fixed, &mu_prime, n, p)
    })
}

fn theta_interval(n: usize, prec: Precision) -> Result<Interval> {
    let six_log = ln_of(&int(n as i64), prec)?.mul_scalar(&int(6));
    sqrt_interval(&six_log, prec)
}

fn build_plan_at(
    cover: &Cover,
    d: &Decomposition,
    fixed: &FixedAssignment,
    mu_prime: &BTreeMap<usize, Scalar>,
    n: usize,
    prec: Precision,
) -> Result<Option<RoundingPlan>> {
    let theta = theta_interval(n, prec)?;
    // θ̂ strictly above θ; the excess shrinks as precision refines.
    let excess = Scalar::new(BigInt::one(), BigInt::one() << (prec.0 / 4).max(16));
    let theta_hat = theta.hi() + &excess;

    // Under-normalized rational rows: s_i ≤ 1/√q_i.
    let inner = Precision(prec.0 + 64);
    let mut rows: Vec<Vec<Scalar>> = Vec::with_capacity(d.k2.len());
    let mut mu_tilde: Vec<Scalar> = Vec::with_capacity(d.k2.len());
    for &i in &d.k2 {
        let s = sqrt_of(&d.row_norm_sq[&i], inner)?.hi().recip();
        let row: Vec<Scalar> = d
            .n1
            .iter()
            .map(|&j| &cover.plane(i).coeffs()[j - 1] * &s)
            .collect();
        rows.push(row);
        mu_tilde.push(&mu_prime[&i] * &s);
    }
    let v_tilde = Matrix::from_rows(rows)?;

    // The surrogate must satisfy the rounding-point preconditions exactly;
    // if not, the excess is still too large for this input — refine.
    for j in 1..=v_tilde.cols() {
        let mut l1 = Scalar::zero();
        for x in v_tilde.column(j) {
            l1 += x.abs();
        }
        if &theta_hat * &l1 > ratio(1, 3) {
            return Ok(None);
        }
    }

    let rp = rounding_point(&v_tilde, &mu_tilde, &theta_hat)?;
    if let RowNormMode::Tolerance { max_defect } = &rp.mode {
        // Guaranteed tiny by construction of s_i.
        debug_assert!(max_defect < &ratio(1, 1 << 30));
    }

    // Exact final certification against the true θ: for each i ∈ K2,
    // (⟨v_i|N1, y⟩ − μ′_i)² ≥ q_i·(6 ln n).
    let six_log = ln_of(&int(n as i64), prec)?.mul_scalar(&int(6));
    for (pos, &i) in d.k2.iter().enumerate() {
        let mut dot = Scalar::zero();
        for (&j, yj) in d.n1.iter().zip(&rp.y) {
            dot += &cover.plane(i).coeffs()[j - 1] * yj;
        }
        let dist_sq = {
            let r = dot - &mu_prime[&i];
            &r * &r
        };
        let rhs = six_log.mul_scalar(&d.row_norm_sq[&i]);
        match rhs.cmp_scalar(&dist_sq) {
            Cmp::Less => {}
            Cmp::Greater => {
                return Err(Error::Invalid(format!(
                    "certified distance violation at K2 row {i}; surrogate margin failed"
                )));
            }
            Cmp::Undecided => return Ok(None),
        }
        let _ = pos;
    }

    let p = BiasVector::new(
        rp.y.iter()
            .map(|yj| (Scalar::one() + yj) / int(2))
            .collect(),
    )?;
    Ok(Some(RoundingPlan {
        n2: d.n2.clone(),
        w_tilde: fixed.w_tilde.clone(),
        n1: d.n1.clone(),
        y: rp.y,
        p,
        theta,
        theta_hat,
        mu_prime: mu_prime.clone(),
    }))
}

/// Which block a plane belongs to in the accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    K2,
    K3,
}

/// Exact and analytic accounting for one plane.
#[derive(Debug, Clone)]
pub struct PlaneAccount {
    pub plane: usize,
    pub block: Block,
    /// `μ_i − ⟨v_i|N2, w̃⟩`, the value `⟨v_i|N1, w|N1⟩` must avoid.
    pub target: Scalar,
    /// Exact hit probability under the plan's product distribution.
    pub exact: Scalar,
    /// Distinct magnitudes of `v_i|N1`.
    pub magnitudes: usize,
    /// `(2/3)^⌈S/2⌉` with `S = magnitudes` — valid for every plane.
    pub generic_bound: Scalar,
    pub generic_ok: bool,
    /// The sharper analytic bound, when its decomposition condition held:
    /// `2/n³` for K2 (concentration around the rounding point), or
    /// `(2/3)^⌈T/2⌉` with `T = ⌈10 ln n⌉` for K3 rows with at least `T`
    /// magnitudes.
    pub strong_bound: Option<Scalar>,
    pub strong_ok: Option<bool>,
}

/// The full accounting report for a plan.
#[derive(Debug, Clone)]
pub struct PlanAccounting {
    pub per_plane: Vec<PlaneAccount>,
    /// Σ of exact hit probabilities over `K2 ∪ K3`.
    pub union_total: Scalar,
    /// `union_total ≤ 1/2`, the success criterion for sampling.
    pub union_within_half: bool,
    /// `max(0, 1 − union_total)`: certified lower bound on the probability
    /// that a sample misses every plane.
    pub miss_lower_bound: Scalar,
    /// Re-verification that every `K1` plane is avoided by construction.
    pub k1_verified: bool,
}

/// Computes the exact hit probability of every `K2 ∪ K3` plane under the
/// plan, together with the applicable analytic bounds.
pub fn account(cover: &Cover, d: &Decomposition, plan: &RoundingPlan) -> Result<PlanAccounting> {
    validate_for_pipeline(cover, d)?;
    let n = cover.dim();
    let threshold = crate::decompose::inactive_threshold(n, Precision::DEFAULT)?;
    let strong_k2 = ratio(2, 1) / int((n * n * n) as i64);

    let mut per_plane = Vec::new();
    let mut union_total = Scalar::zero();
    for (block, rows) in [(Block::K2, &d.k2), (Block::K3, &d.k3)] {
        for &i in rows.iter() {
            let restricted: Vec<Scalar> = d
                .n1
                .iter()
                .map(|&j| cover.plane(i).coeffs()[j - 1].clone())
                .collect();
            let target = cover.plane(i).offset() - n2_inner_product(cover, d, &plan.w_tilde, i);
            let exact = exact_hit_probability(&restricted, &plan.p, &target)?;
            let magnitudes = count_magnitudes(&restricted);
            let generic_bound = magnitude_bound(magnitudes);
            let generic_ok = exact <= generic_bound;
            let (strong_bound, strong_ok) = match block {
                Block::K2 => {
                    // The plan certifies the rounding-point distance, so the
                    // concentration bound 2/n³ applies to rescaled rows.
                    let ok = exact <= strong_k2;
                    (Some(strong_k2.clone()), Some(ok))
                }
                Block::K3 => {
                    if magnitudes as u32 >= threshold {
                        let b = magnitude_bound(threshold as usize);
                        let ok = exact <= b;
                        (Some(b), Some(ok))
                    } else {
                        (None, None)
                    }
                }
            };
            union_total += &exact;
            per_plane.push(PlaneAccount {
                plane: i,
                block,
                target,
                exact,
                magnitudes,
                generic_bound,
                generic_ok,
                strong_bound,
                strong_ok,
            });
        }
    }
    per_plane.sort_by_key(|a| a.plane);

    let k1_verified = d.k1.iter().all(|&i| {
        &n2_inner_product(cover, d, &plan.w_tilde, i) != cover.plane(i).offset()
            && d.n1
                .iter()
                .all(|&j| cover.plane(i).coeffs()[j - 1].is_zero())
    });

    let union_within_half = union_total <= ratio(1, 2);
    let miss_lower_bound = if union_total >= Scalar::one() {
        Scalar::zero()
    } else {
        Scalar::one() - &union_total
    };
    Ok(PlanAccounting {
        per_plane,
        union_total,
        union_within_half,
        miss_lower_bound,
        k1_verified,
    })
}

/// Result of randomized sampling.
#[derive(Debug, Clone)]
pub struct SampleResult {
    pub vertex: Option<Vertex>,
    /// Attempts consumed (equals the successful try's 1-based index, or
    /// `max_tries` on failure).
    pub tries_used: u32,
}

/// Draws an exact Bernoulli(p) sign from the stream: compares the uniform
/// bit expansion against `p` word by word, so the probability is exactly
/// `p`, not a 64-bit truncation.
fn draw_sign(rng: &mut ChaCha12Rng, p: &Scalar) -> i8 {
    let mut rem = p.clone();
    let scale = Scalar::from_integer(BigInt::one() << 64);
    loop {
        let scaled = &rem * &scale;
        let hi = scaled.floor();
        let frac = &scaled - &hi;
        let hi = hi.to_integer();
        let x = BigInt::from(rng.next_u64());
        if x < hi {
            return 1;
        }
        if x > hi || frac.is_zero() {
            return -1;
        }
        rem = frac;
    }
}

/// Samples `w|N1` from the plan's product distribution with `w|N2 = w̃`,
/// testing all planes exactly; returns the first vertex missing every plane
/// within `max_tries`. Tries are keyed by `(seed, try index)` on separate
/// stream counters, so the sequence is reproducible and order-independent.
pub fn sample_vertex(
    cover: &Cover,
    d: &Decomposition,
    plan: &RoundingPlan,
    seed: u64,
    max_tries: u32,
) -> Result<SampleResult> {
    let n = cover.dim();
    if n > EXHAUSTIVE_DIM_CAP {
        return Err(Error::DimensionOverCap {
            n,
            cap: EXHAUSTIVE_DIM_CAP,
        });
    }
    validate_for_pipeline(cover, d)?;
    let scaled: Vec<ScaledPlane> = cover.planes().iter().map(scale_plane).collect();
    let base = assemble_mask(d, &plan.w_tilde, 0);

    for t in 0..max_tries {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(t as u64 + 1);
        let mut mask = base;
        for (pos, &j) in plan.n1.iter().enumerate() {
            if draw_sign(&mut rng, &plan.p.entries()[pos]) > 0 {
                mask |= 1 << (j - 1);
            }
        }
        if scaled.iter().all(|plane| !plane.hits_mask(mask)) {
            return Ok(SampleResult {
                vertex: Some(Vertex::from_mask(mask, n)?),
                tries_used: t + 1,
            });
        }
    }
    Ok(SampleResult {
        vertex: None,
        tries_used: max_tries,
    })
}

/// Outcome of the full pipeline on one cover.
#[derive(Debug)]
#[allow(clippy::large_enum_variant)]
pub enum PipelineOutcome {
    /// The pipeline could not produce a plan; the stage and reason say why.
    NoPlan { stage: &'static str, reason: String },
    Planned {
        fixed: FixedAssignment,
        plan: RoundingPlan,
        accounting: PlanAccounting,
        sample: SampleResult,
    },
}

#[derive(Debug)]
pub struct PipelineReport {
    pub decomposition: Decomposition,
    pub check: DecompositionReport,
    pub outcome: PipelineOutcome,
}

/// Decompose → fix `N2` → build plan → account → sample, reporting a
/// structured "no plan" outcome where the paper's hypotheses have no
/// desk-scale counterpart instead of failing.
pub fn run_pipeline(
    cover: &Cover,
    seed: u64,
    max_tries: u32,
    prec: Precision,
) -> Result<PipelineReport> {
    let v = cover.coefficient_matrix();
    let decomposition = decompose(&v, prec)?;
    run_pipeline_with(cover, decomposition, seed, max_tries, prec)
}

/// The pipeline from an explicitly supplied decomposition (any partition
/// whose zero block verifies), decoupling the rounding machinery from the
/// decomposition hypothesis.
pub fn run_pipeline_with(
    cover: &Cover,
    decomposition: Decomposition,
    seed: u64,
    max_tries: u32,
    prec: Precision,
) -> Result<PipelineReport> {
    let v = cover.coefficient_matrix();
    let check = check_decomposition(&v, &decomposition, prec)?;

    let no_plan = |stage: &'static str, e: &Error| PipelineOutcome::NoPlan {
        stage,
        reason: e.to_string(),
    };

    let outcome = match fix_n2(cover, &decomposition) {
        Err(e @ (Error::KOneIsAllRows | Error::NoWitness { .. })) => no_plan("fix-n2", &e),
        Err(e) => return Err(e),
        Ok(fixed) => match build_plan(cover, &decomposition, &fixed, prec) {
            Err(e @ Error::NoPlan(_)) => no_plan("build-plan", &e),
            Err(e) => return Err(e),
            Ok(plan) => {
                let accounting = account(cover, &decomposition, &plan)?;
                let sample = sample_vertex(cover, &decomposition, &plan, seed, max_tries)?;
                PipelineOutcome::Planned {
                    fixed,
                    plan,
                    accounting,
                    sample,
                }
            }
        },
    };
    Ok(PipelineReport {
        decomposition,
        check,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::trivial_cover;
    use crate::cover::Hyperplane;
    use crate::decompose::DecomposeAudit;
    use crate::scalar::parse_scalar;

    fn plane(coeffs: Vec<Scalar>, offset: Scalar) -> Hyperplane {
        Hyperplane::new(coeffs, offset).unwrap()
    }

    /// Hand-built decomposition with empty audit, for pipeline tests that
    /// construct the partition directly.
    fn manual_decomposition(
        k1: Vec<usize>,
        k2: Vec<usize>,
        k3: Vec<usize>,
        n1: Vec<usize>,
        n2: Vec<usize>,
        row_norm_sq: BTreeMap<usize, Scalar>,
    ) -> Decomposition {
        Decomposition {
            k1,
            k2,
            k3,
            n1,
            n2,
            row_norm_sq,
            audit: DecomposeAudit {
                inactive_threshold: 0,
                iterations: 0,
                evictions: vec![],
                activations: vec![],
                guard_flags: 0,
            },
        }
    }

    /// n = 4: plane 1 lives on N2 = {1,2}, planes 2 and 3 on N1 = {3,4}.
    fn split_cover() -> (Cover, Decomposition) {
        let cover = Cover::new(
            4,
            vec![
                plane(vec![int(1), int(1), int(0), int(0)], int(2)),
                plane(vec![int(0), int(0), int(1), int(2)], int(3)),
                plane(vec![int(0), int(0), int(3), int(1)], int(2)),
            ],
        )
        .unwrap();
        let d = manual_decomposition(
            vec![1],
            vec![],
            vec![2, 3],
            vec![3, 4],
            vec![1, 2],
            BTreeMap::new(),
        );
        (cover, d)
    }

    #[test]
    fn fix_n2_with_empty_k1() {
        let cover = trivial_cover(2).unwrap();
        let d = manual_decomposition(
            vec![],
            vec![],
            vec![1, 2],
            vec![1, 2],
            vec![],
            BTreeMap::new(),
        );
        let fixed = fix_n2(&cover, &d).unwrap();
        assert_eq!(fixed.source_plane, 1);
        assert!(fixed.w_tilde.is_empty());
    }

    #[test]
    fn fix_n2_rejects_k1_covering_all_rows() {
        // trivial_cover(2) rows vanish on column 2, so K1 = {1,2} with
        // N1 = {2} is a legal zero block but leaves no witness plane.
        let cover = trivial_cover(2).unwrap();
        let d = manual_decomposition(
            vec![1, 2],
            vec![],
            vec![],
            vec![2],
            vec![1],
            BTreeMap::new(),
        );
        assert!(matches!(fix_n2(&cover, &d), Err(Error::KOneIsAllRows)));
    }

    #[test]
    fn fix_n2_guarantee_over_all_extensions() {
        let (cover, d) = split_cover();
        let fixed = fix_n2(&cover, &d).unwrap();
        // Plane 2's private vertex fixes N2; every extension must miss
        // plane 1 (checked again here, and inside fix_n2 exhaustively).
        assert_eq!(fixed.source_plane, 2);
        let base = assemble_mask(&d, &fixed.w_tilde, 0);
        for ext in 0..4u32 {
            let mask = extend_mask(base, &d, ext);
            let v = Vertex::from_mask(mask, 4).unwrap();
            assert!(!cover.plane(1).contains(&v).unwrap());
        }
    }

    #[test]
    fn fix_n2_rejects_bad_zero_block() {
        let cover = trivial_cover(2).unwrap();
        // Claiming K1 = {1} with N1 = {1} is wrong: v_1 = (1, 0) does not
        // vanish on column 1.
        let d = manual_decomposition(
            vec![1],
            vec![],
            vec![2],
            vec![1],
            vec![2],
            BTreeMap::new(),
        );
        assert!(matches!(
            fix_n2(&cover, &d),
            Err(Error::InvalidDecomposition(_))
        ));
    }

    #[test]
    fn build_plan_with_empty_k2_is_uniform() {
        let (cover, d) = split_cover();
        let fixed = fix_n2(&cover, &d).unwrap();
        let plan = build_plan(&cover, &d, &fixed, Precision::DEFAULT).unwrap();
        assert_eq!(plan.n1, vec![3, 4]);
        assert!(plan.y.iter().all(|y| y.is_zero()));
        assert!(plan.p.entries().iter().all(|p| p == &ratio(1, 2)));
        assert!(plan.theta_hat.is_zero());
    }

    #[test]
    fn build_plan_single_unit_row() {
        // One row of 1024 entries 1/32 has squared norm exactly 1; with
        // θ = √(6·ln 1024) ≈ 6.449 the column condition θ/32 ≤ 1/3 holds.
        let n = 1024usize;
        let coeffs: Vec<Scalar> = vec![ratio(1, 32); n];
        let cover = Cover::new(n, vec![plane(coeffs, int(0))]).unwrap();
        let d = manual_decomposition(
            vec![],
            vec![1],
            vec![],
            (1..=n).collect(),
            vec![],
            [(1usize, int(1))].into_iter().collect(),
        );
        let fixed = FixedAssignment {
            w_tilde: vec![],
            witness: Vertex::from_mask(0, 30).unwrap(),
            source_plane: 1,
        };
        let plan = build_plan(&cover, &d, &fixed, Precision::DEFAULT).unwrap();
        assert_eq!(plan.y.len(), n);
        // y_j = ±θ̂/32, all equal signs from the 1×1 Bang solve.
        let third = ratio(1, 3);
        for yj in &plan.y {
            assert!(yj.abs() <= third);
            assert_eq!(yj.abs(), &plan.theta_hat / int(32));
        }
        // p stays inside [1/3, 2/3] (checked by construction) and the
        // certified distance (⟨v,y⟩)² ≥ 6·ln n held inside build_plan.
        let dot: Scalar = plan.y.iter().map(|yj| yj * ratio(1, 32)).sum();
        let dist_sq = &dot * &dot;
        let six_log = ln_of(&int(n as i64), Precision::DEFAULT)
            .unwrap()
            .mul_scalar(&int(6));
        assert_eq!(six_log.cmp_scalar(&dist_sq), Cmp::Less);
    }

    #[test]
    fn build_plan_reports_no_plan_when_column_condition_fails() {
        // A K2 row with a single unit entry: θ·1 > 1/3 for any n ≥ 2.
        let cover = Cover::new(
            2,
            vec![plane(vec![int(1), int(0)], int(0))],
        )
        .unwrap();
        let d = manual_decomposition(
            vec![],
            vec![1],
            vec![],
            vec![1],
            vec![2],
            [(1usize, int(1))].into_iter().collect(),
        );
        let fixed = FixedAssignment {
            w_tilde: vec![1],
            witness: Vertex::from_mask(1, 2).unwrap(),
            source_plane: 1,
        };
        assert!(matches!(
            build_plan(&cover, &d, &fixed, Precision::DEFAULT),
            Err(Error::NoPlan(_))
        ));
    }

    #[test]
    fn accounting_empty_blocks_has_unit_miss_bound() {
        let cover = trivial_cover(2).unwrap();
        let d = manual_decomposition(
            vec![],
            vec![],
            vec![1, 2],
            vec![1, 2],
            vec![],
            BTreeMap::new(),
        );
        // Move both rows into K1? Not legal (they do not vanish on N1), so
        // instead take a cover whose planes live entirely on N2.
        let cover2 = Cover::new(
            3,
            vec![plane(vec![int(1), int(0), int(0)], int(1))],
        )
        .unwrap();
        let d2 = manual_decomposition(
            vec![1],
            vec![],
            vec![],
            vec![2, 3],
            vec![1],
            BTreeMap::new(),
        );
        let fixed2 = fix_n2(&cover2, &d2).err();
        // Plane 1 is the only plane and sits in K1: no witness plane exists.
        assert!(fixed2.is_some());

        // The two-plane case: both planes in K3 over full N1.
        let fixed = fix_n2(&cover, &d).unwrap();
        let plan = build_plan(&cover, &d, &fixed, Precision::DEFAULT).unwrap();
        let acct = account(&cover, &d, &plan).unwrap();
        // Planes x1=±1 under uniform sampling are each hit with
        // probability 1/2; union total is 1, miss bound 0.
        assert_eq!(acct.union_total, int(1));
        assert_eq!(acct.miss_lower_bound, int(0));
        assert!(!acct.union_within_half);
    }

    #[test]
    fn accounting_matches_enumeration_union() {
        let (cover, d) = split_cover();
        let fixed = fix_n2(&cover, &d).unwrap();
        let plan = build_plan(&cover, &d, &fixed, Precision::DEFAULT).unwrap();
        let acct = account(&cover, &d, &plan).unwrap();
        assert!(acct.k1_verified);

        // Exact probability that SOME plane is hit, by enumerating the
        // 2^|N1| extensions (uniform plan ⇒ each extension has weight 1/4).
        let base = assemble_mask(&d, &fixed.w_tilde, 0);
        let mut hit_weight = Scalar::zero();
        for ext in 0..4u32 {
            let mask = extend_mask(base, &d, ext);
            let v = Vertex::from_mask(mask, 4).unwrap();
            let hits = cover
                .planes()
                .iter()
                .any(|p| p.contains(&v).unwrap());
            if hits {
                hit_weight += ratio(1, 4);
            }
        }
        assert!(hit_weight <= acct.union_total);

        // Each per-plane exact value agrees with its own enumeration.
        for pa in &acct.per_plane {
            let mut w = Scalar::zero();
            for ext in 0..4u32 {
                let mask = extend_mask(base, &d, ext);
                let v = Vertex::from_mask(mask, 4).unwrap();
                if cover.plane(pa.plane).contains(&v).unwrap() {
                    w += ratio(1, 4);
                }
            }
            assert_eq!(w, pa.exact, "plane {}", pa.plane);
            assert!(pa.generic_ok);
        }
    }

    #[test]
    fn sample_vertex_finds_and_verifies() {
        let (cover, d) = split_cover();
        let fixed = fix_n2(&cover, &d).unwrap();
        let plan = build_plan(&cover, &d, &fixed, Precision::DEFAULT).unwrap();
        let result = sample_vertex(&cover, &d, &plan, 42, 64).unwrap();
        let v = result.vertex.expect("misses exist with positive probability");
        for p in cover.planes() {
            assert!(!p.contains(&v).unwrap());
        }
        // Determinism.
        let again = sample_vertex(&cover, &d, &plan, 42, 64).unwrap();
        assert_eq!(again.vertex, result.vertex);
        assert_eq!(again.tries_used, result.tries_used);
    }

    #[test]
    fn sample_vertex_none_on_full_cover() {
        let cover = trivial_cover(2).unwrap();
        let d = manual_decomposition(
            vec![],
            vec![],
            vec![1, 2],
            vec![1, 2],
            vec![],
            BTreeMap::new(),
        );
        let fixed = fix_n2(&cover, &d).unwrap();
        let plan = build_plan(&cover, &d, &fixed, Precision::DEFAULT).unwrap();
        let result = sample_vertex(&cover, &d, &plan, 7, 64).unwrap();
        assert!(result.vertex.is_none());
        assert_eq!(result.tries_used, 64);
    }

    #[test]
    fn sample_first_try_when_planes_unreachable() {
        // Offsets outside any achievable signed sum: every draw succeeds.
        // Such a plane is empty on the cube (so fix_n2 would rightly refuse
        // — no private vertex exists); build the fixed assignment directly.
        let cover = Cover::new(
            3,
            vec![plane(vec![int(1), int(1), int(1)], int(100))],
        )
        .unwrap();
        let d = manual_decomposition(
            vec![],
            vec![],
            vec![1],
            vec![1, 2, 3],
            vec![],
            BTreeMap::new(),
        );
        assert!(matches!(
            fix_n2(&cover, &d),
            Err(Error::NoWitness { plane: 1 })
        ));
        let fixed = FixedAssignment {
            w_tilde: vec![],
            witness: Vertex::from_mask(0, 3).unwrap(),
            source_plane: 1,
        };
        let plan = build_plan(&cover, &d, &fixed, Precision::DEFAULT).unwrap();
        let result = sample_vertex(&cover, &d, &plan, 0, 64).unwrap();
        assert!(result.vertex.is_some());
        assert_eq!(result.tries_used, 1);
    }

    #[test]
    fn draw_sign_exact_bernoulli_statistics() {
        // Frequency over many draws stays near p for a non-dyadic bias.
        let p = parse_scalar("5/7").unwrap();
        // 5/7 > 2/3; fine for the raw sampler even though plans clamp to
        // [1/3, 2/3].
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let trials = 20_000;
        let mut plus = 0u32;
        for _ in 0..trials {
            if draw_sign(&mut rng, &p) > 0 {
                plus += 1;
            }
        }
        let freq = plus as f64 / trials as f64;
        assert!((freq - 5.0 / 7.0).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn pipeline_reports_no_plan_on_desk_scale_cover() {
        // Every decomposition of an E2 cover at small n ends with K1 = [k];
        // the pipeline reports that instead of failing.
        let cover = crate::constructions::skew_cover(4).unwrap();
        let report = run_pipeline(&cover, 1, 8, Precision::DEFAULT).unwrap();
        match report.outcome {
            PipelineOutcome::NoPlan { stage, .. } => assert_eq!(stage, "fix-n2"),
            PipelineOutcome::Planned { .. } => panic!("expected no plan at n=4"),
        }
    }

    #[test]
    fn pipeline_with_explicit_decomposition_plans_and_samples() {
        // The self-computed decomposition always ends with K1 = [k] at desk
        // scale; supplying the partition explicitly exercises the full
        // planned path end to end.
        let (cover, d) = split_cover();
        let report = run_pipeline_with(&cover, d, 5, 64, Precision::DEFAULT).unwrap();
        match report.outcome {
            PipelineOutcome::Planned {
                accounting, sample, ..
            } => {
                assert!(accounting.k1_verified);
                assert!(accounting.union_within_half);
                let v = sample.vertex.expect("uncovered vertices exist");
                for p in cover.planes() {
                    assert!(!p.contains(&v).unwrap());
                }
            }
            PipelineOutcome::NoPlan { stage, reason } => {
                panic!("expected a plan, got no-plan at {stage}: {reason}")
            }
        }
    }
}
