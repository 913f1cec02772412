//! Iterative decomposition of a coefficient matrix into the block structure
//! used by the uncovered-vertex pipeline.
//!
//! Starting from `N1 = [n]`, the loop: moves rows that vanish on `N1` into
//! `K1`; classifies the remaining rows inactive when they have at least
//! `⌈10·ln n⌉` magnitudes on `N1` (active otherwise); assigns each non-zero
//! active entry the weight `10/√(N_m(i))`, where `N_m(i)` counts entries of
//! the row's `N1`-restriction sharing its magnitude; and evicts the
//! smallest-indexed column whose active-weight total certifiably exceeds
//! `(60·ln n)^{-1/2}`. Termination is guaranteed because every eviction
//! shrinks `N1`. The final partition has `K2` = active, `K3` = inactive.
//!
//! Weights are algebraic (`10/√N`) and the threshold is transcendental, so
//! every comparison is decidable; each is certified by interval refinement,
//! and decisions closer to the threshold than the guard band are flagged in
//! the audit and re-certified at doubled precision.

use std::collections::{BTreeMap, HashMap};

use num::traits::{Signed, Zero};

use crate::anticoncentration::magnitude;
use crate::error::Error;
use crate::interval::{
    ceil_of_log_multiple, ln_of, refine_until, sqrt_interval, sqrt_of, Cmp, Interval, Precision,
};
use crate::matrix::Matrix;
use crate::scalar::{int, ratio, Scalar};
use crate::Result;

/// Comparisons separated from the threshold by less than `2^-GUARD_BAND_BITS`
/// are flagged in the audit and re-certified at doubled precision.
pub const GUARD_BAND_BITS: u32 = 40;

/// Certified `⌈10·ln n⌉`, the magnitude count at which a row goes inactive.
pub fn inactive_threshold(n: usize, prec: Precision) -> Result<u32> {
    ceil_of_log_multiple(&int(10), n, prec)
}

/// Enclosure of the eviction threshold `(60·ln n)^{-1/2}`.
pub fn eviction_threshold(n: usize, prec: Precision) -> Result<Interval> {
    let sixty_log = ln_of(&int(n as i64), prec)?.mul_scalar(&int(60));
    sqrt_interval(&sixty_log, prec)?.recip()
}

/// The output partition, with the audit trail of how it was reached.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Rows whose `N1`-restriction is zero (1-based, sorted).
    pub k1: Vec<usize>,
    /// Active rows (1-based, sorted).
    pub k2: Vec<usize>,
    /// Inactive rows: at least `⌈10·ln n⌉` magnitudes on `N1`.
    pub k3: Vec<usize>,
    /// Surviving columns (1-based, sorted).
    pub n1: Vec<usize>,
    /// Evicted columns (1-based, sorted; eviction order is in the audit).
    pub n2: Vec<usize>,
    /// Exact squared ℓ2-norm of each K2 row's `N1`-restriction. The row
    /// rescaling factor is `1/√q` with the square root deferred, so the
    /// normalized rows have squared norm exactly one by construction.
    pub row_norm_sq: BTreeMap<usize, Scalar>,
    pub audit: DecomposeAudit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeAudit {
    /// Certified `⌈10·ln n⌉`.
    pub inactive_threshold: u32,
    /// Loop passes executed (evictions + the final pass).
    pub iterations: u32,
    pub evictions: Vec<EvictionRecord>,
    pub activations: Vec<ActivationRecord>,
    /// Threshold comparisons that landed inside the guard band.
    pub guard_flags: u32,
}

/// One evicted column with the exact symbolic weight total that evicted it:
/// the sum of `10/√N` over the recorded contributors.
#[derive(Debug, Clone, PartialEq)]
pub struct EvictionRecord {
    pub iteration: u32,
    /// 1-based original column index.
    pub column: usize,
    /// `(row, magnitude, N_m(row))` for each active row with a non-zero
    /// entry in this column at eviction time.
    pub contributors: Vec<(usize, i64, u32)>,
    /// Fractional bits at which the exceedance was certified.
    pub certified_at_bits: u32,
    pub within_guard_band: bool,
}

/// A row becoming active, with its per-magnitude entry counts at that
/// moment (`N*_m`).
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationRecord {
    pub row: usize,
    pub iteration: u32,
    pub magnitude_counts: BTreeMap<i64, u32>,
    /// `|supp(v_row)|` of the full row, for the accounting hypothesis.
    pub full_support: usize,
}

/// Per-row magnitude counts over the current `N1`: the weight state. The
/// weight of a non-zero entry with magnitude `m` is `10/√(counts[m])`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct WeightState {
    counts: BTreeMap<i64, u32>,
}

impl WeightState {
    fn magnitudes(&self) -> usize {
        self.counts.len()
    }
}

/// Shared cache of `10/√N` and threshold enclosures, keyed by precision.
#[derive(Default)]
struct WeightCache {
    cache: HashMap<(u32, u32), Interval>,
    thresholds: HashMap<(usize, u32), Interval>,
}

impl WeightCache {
    fn ten_over_sqrt(&mut self, n: u32, prec: Precision) -> Result<Interval> {
        if let Some(i) = self.cache.get(&(n, prec.0)) {
            return Ok(i.clone());
        }
        let value = sqrt_of(&int(n as i64), prec)?.recip()?.mul_scalar(&int(10));
        self.cache.insert((n, prec.0), value.clone());
        Ok(value)
    }

    fn threshold(&mut self, n: usize, prec: Precision) -> Result<Interval> {
        if let Some(i) = self.thresholds.get(&(n, prec.0)) {
            return Ok(i.clone());
        }
        let value = eviction_threshold(n, prec)?;
        self.thresholds.insert((n, prec.0), value.clone());
        Ok(value)
    }

    fn total(&mut self, contributors: &[(usize, i64, u32)], prec: Precision) -> Result<Interval> {
        let mut acc = Interval::point(Scalar::zero());
        for &(_, _, n) in contributors {
            acc = acc.add(&self.ten_over_sqrt(n, prec)?);
        }
        Ok(acc)
    }
}

/// Outcome of one certified threshold comparison.
struct ThresholdDecision {
    exceeds: bool,
    certified_at_bits: u32,
    within_guard_band: bool,
}

/// Certifies `Σ 10/√N ≷ (60 ln n)^{-1/2}`, refining until decided, then
/// checks the guard band (re-certifying once at doubled precision when
/// inside it).
fn certify_column(
    contributors: &[(usize, i64, u32)],
    n: usize,
    start: Precision,
    cache: &mut WeightCache,
) -> Result<ThresholdDecision> {
    if contributors.is_empty() {
        return Ok(ThresholdDecision {
            exceeds: false,
            certified_at_bits: start.0,
            within_guard_band: false,
        });
    }
    let decide = |prec: Precision, cache: &mut WeightCache| -> Result<Option<(bool, u32, bool)>> {
        let total = cache.total(contributors, prec)?;
        let tau = cache.threshold(n, prec)?;
        let (exceeds, separation) = match total.cmp_interval(&tau) {
            Cmp::Greater => (true, total.lo() - tau.hi()),
            Cmp::Less => (false, tau.lo() - total.hi()),
            Cmp::Undecided => return Ok(None),
        };
        let band = ratio(1, 1i64 << GUARD_BAND_BITS);
        Ok(Some((exceeds, prec.0, separation < band)))
    };
    let (exceeds, bits, flagged) =
        refine_until(start, "column weight total vs eviction threshold", |p| {
            decide(p, cache)
        })?;
    if flagged {
        // Guard-band hit: re-certify at doubled precision and record it.
        let (exceeds2, bits2, _) = refine_until(
            Precision(bits).doubled(),
            "guard-band re-certification",
            |p| decide(p, cache),
        )?;
        debug_assert_eq!(exceeds, exceeds2);
        return Ok(ThresholdDecision {
            exceeds: exceeds2,
            certified_at_bits: bits2,
            within_guard_band: true,
        });
    }
    Ok(ThresholdDecision {
        exceeds,
        certified_at_bits: bits,
        within_guard_band: false,
    })
}

fn weight_state(n1: &[usize], mags: &[Vec<Option<i64>>], i: usize) -> WeightState {
    let mut counts: BTreeMap<i64, u32> = BTreeMap::new();
    for &j in n1 {
        if let Some(m) = mags[i - 1][j - 1] {
            *counts.entry(m).or_insert(0) += 1;
        }
    }
    WeightState { counts }
}

/// Runs the decomposition loop. `N1` may come out empty (reported in the
/// result, not an error); that happens whenever the matrix is too dense for
/// its dimension, which is every interesting input at desk scale.
pub fn decompose(v: &Matrix, prec: Precision) -> Result<Decomposition> {
    let k = v.rows();
    let n = v.cols();
    if k == 0 || n < 2 {
        return Err(Error::Invalid(format!(
            "decomposition needs a non-empty matrix with n ≥ 2, got {k}×{n}"
        )));
    }
    let threshold_count = inactive_threshold(n, prec)?;

    // Magnitudes never change; compute them once.
    let mags: Vec<Vec<Option<i64>>> = (1..=k)
        .map(|i| {
            v.row(i)
                .iter()
                .map(|x| if x.is_zero() { None } else { Some(magnitude(x).expect("non-zero")) })
                .collect()
        })
        .collect();

    let mut in_n1 = vec![true; n];
    let mut in_k1 = vec![false; k];
    let mut was_active = vec![false; k];
    let mut ledger_counts: Vec<Option<BTreeMap<i64, u32>>> = vec![None; k];

    let mut evictions: Vec<EvictionRecord> = Vec::new();
    let mut activations: Vec<ActivationRecord> = Vec::new();
    let mut guard_flags = 0u32;
    let mut iterations = 0u32;
    let mut cache = WeightCache::default();

    loop {
        iterations += 1;
        let n1: Vec<usize> = (1..=n).filter(|&j| in_n1[j - 1]).collect();

        // Step 2: absorb rows that vanish on N1.
        for i in 1..=k {
            if !in_k1[i - 1] && n1.iter().all(|&j| v.entry(i, j).is_zero()) {
                in_k1[i - 1] = true;
            }
        }

        // Step 3: classify the remaining rows.
        let mut active_rows: Vec<(usize, WeightState)> = Vec::new();
        for i in 1..=k {
            if in_k1[i - 1] {
                continue;
            }
            let state = weight_state(&n1, &mags, i);
            let active = (state.magnitudes() as u32) < threshold_count;
            if was_active[i - 1] && !active {
                // Shrinking N1 can only lose magnitudes, so this cannot
                // happen; surface it instead of continuing.
                return Err(Error::Invalid(format!(
                    "row {i} transitioned active → inactive; monotonicity violated"
                )));
            }
            if active {
                if !was_active[i - 1] {
                    was_active[i - 1] = true;
                    let full_support = v.row(i).iter().filter(|x| !x.is_zero()).count();
                    activations.push(ActivationRecord {
                        row: i,
                        iteration: iterations,
                        magnitude_counts: state.counts.clone(),
                        full_support,
                    });
                    ledger_counts[i - 1] = Some(state.counts.clone());
                }
                // The incremental ledger must agree with the from-scratch
                // recomputation at every iteration.
                if ledger_counts[i - 1].as_ref() != Some(&state.counts) {
                    return Err(Error::Invalid(format!(
                        "row {i}: incremental weight ledger disagrees with recomputation"
                    )));
                }
                active_rows.push((i, state));
            }
        }

        // Steps 4 + 5: first column whose active-weight total exceeds the
        // threshold, scanning in increasing index order.
        let mut evicted = None;
        for &j in &n1 {
            let contributors: Vec<(usize, i64, u32)> = active_rows
                .iter()
                .filter_map(|(i, state)| {
                    mags[i - 1][j - 1].map(|m| (*i, m, state.counts[&m]))
                })
                .collect();
            let decision = certify_column(&contributors, n, prec, &mut cache)?;
            if decision.within_guard_band {
                guard_flags += 1;
            }
            if decision.exceeds {
                evictions.push(EvictionRecord {
                    iteration: iterations,
                    column: j,
                    contributors: contributors.clone(),
                    certified_at_bits: decision.certified_at_bits,
                    within_guard_band: decision.within_guard_band,
                });
                in_n1[j - 1] = false;
                // Keep the incremental ledger in step: each contributor
                // loses one entry of its magnitude.
                for (i, m, _) in &contributors {
                    let counts = ledger_counts[*i - 1]
                        .as_mut()
                        .expect("contributor is active");
                    let c = counts.get_mut(m).expect("magnitude present");
                    *c -= 1;
                    if *c == 0 {
                        counts.remove(m);
                    }
                }
                evicted = Some(j);
                break;
            }
        }

        if evicted.is_none() {
            // Step 6: output.
            let n1_final: Vec<usize> = (1..=n).filter(|&j| in_n1[j - 1]).collect();
            let n2_final: Vec<usize> = (1..=n).filter(|&j| !in_n1[j - 1]).collect();
            let mut k1 = Vec::new();
            let mut k2 = Vec::new();
            let mut k3 = Vec::new();
            let mut row_norm_sq = BTreeMap::new();
            for i in 1..=k {
                if in_k1[i - 1] {
                    k1.push(i);
                } else {
                    let state = weight_state(&n1_final, &mags, i);
                    if (state.magnitudes() as u32) < threshold_count {
                        k2.push(i);
                        let mut q = Scalar::zero();
                        for &j in &n1_final {
                            let x = v.entry(i, j);
                            q += x * x;
                        }
                        row_norm_sq.insert(i, q);
                    } else {
                        k3.push(i);
                    }
                }
            }
            return Ok(Decomposition {
                k1,
                k2,
                k3,
                n1: n1_final,
                n2: n2_final,
                row_norm_sq,
                audit: DecomposeAudit {
                    inactive_threshold: threshold_count,
                    iterations,
                    evictions,
                    activations,
                    guard_flags,
                },
            });
        }
    }
}

/// Independent re-verification of the three block conditions plus
/// `N1 ≠ ∅`. Conditions on zero blocks and magnitude counts are exact;
/// the column-norm condition is certified by interval refinement.
#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub partition_ok: bool,
    pub n1_nonempty: bool,
    /// `V[K1×N1] = 0`, exact.
    pub zero_block_ok: bool,
    /// Rescaled K2 rows have unit norm (exact, by the deferred square root)
    /// and every `N1`-column of the rescaled block has ℓ1-norm at most
    /// `(60·ln n)^{-1/2}` (certified). Vacuously true when K2 is empty.
    pub column_norm_ok: bool,
    /// Every K3 row has at least `⌈10·ln n⌉` magnitudes on `N1`, exact.
    pub magnitude_ok: bool,
}

impl DecompositionReport {
    pub fn all_ok(&self) -> bool {
        self.partition_ok
            && self.n1_nonempty
            && self.zero_block_ok
            && self.column_norm_ok
            && self.magnitude_ok
    }
}

fn is_partition(parts: &[&[usize]], total: usize) -> bool {
    let mut seen = vec![false; total];
    for part in parts {
        for &x in *part {
            if x == 0 || x > total || seen[x - 1] {
                return false;
            }
            seen[x - 1] = true;
        }
    }
    seen.iter().all(|&s| s)
}

/// Checks a decomposition against the matrix it claims to decompose.
pub fn check_decomposition(
    v: &Matrix,
    d: &Decomposition,
    prec: Precision,
) -> Result<DecompositionReport> {
    let k = v.rows();
    let n = v.cols();
    let partition_ok = is_partition(&[&d.k1, &d.k2, &d.k3], k) && is_partition(&[&d.n1, &d.n2], n)
        && d.k2.iter().all(|i| d.row_norm_sq.contains_key(i));
    let n1_nonempty = !d.n1.is_empty();

    let zero_block_ok = d
        .k1
        .iter()
        .all(|&i| d.n1.iter().all(|&j| v.entry(i, j).is_zero()));

    let threshold_count = inactive_threshold(n, prec)?;
    let magnitude_ok = d.k3.iter().all(|&i| {
        let restricted = v.row_restricted(i, &d.n1);
        crate::anticoncentration::count_magnitudes(&restricted) as u32 >= threshold_count
    });

    let column_norm_ok = if partition_ok {
        check_column_norms(v, d, prec)?
    } else {
        false
    };

    Ok(DecompositionReport {
        partition_ok,
        n1_nonempty,
        zero_block_ok,
        column_norm_ok,
        magnitude_ok,
    })
}

/// Certifies, for every `j ∈ N1`, that `Σ_{i∈K2} |v_ij| / √(q_i)` is at most
/// `(60·ln n)^{-1/2}`, where `q_i` is the stored squared row norm. Also
/// re-checks each stored `q_i` exactly.
fn check_column_norms(v: &Matrix, d: &Decomposition, prec: Precision) -> Result<bool> {
    if d.k2.is_empty() {
        return Ok(true);
    }
    let n = v.cols();
    // Stored squared norms must match the rows exactly.
    for &i in &d.k2 {
        let mut q = Scalar::zero();
        for &j in &d.n1 {
            let x = v.entry(i, j);
            q += x * x;
        }
        if q != d.row_norm_sq[&i] {
            return Ok(false);
        }
        if !q.is_positive() {
            return Ok(false);
        }
    }
    for &j in &d.n1 {
        let decided = refine_until(prec, "rescaled column ℓ1-norm vs threshold", |p| {
            let mut total = Interval::point(Scalar::zero());
            for &i in &d.k2 {
                let inv_norm = sqrt_of(&d.row_norm_sq[&i], p)?.recip()?;
                total = total.add(&inv_norm.mul_scalar(&v.entry(i, j).abs()));
            }
            let tau = eviction_threshold(n, p)?;
            Ok(match total.cmp_interval(&tau) {
                Cmp::Less => Some(true),
                Cmp::Greater => Some(false),
                Cmp::Undecided => None,
            })
        })?;
        if !decided {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Accounting over the audit: eviction count against `750·k^{3/2}·ln n`,
/// the per-row added-weight cap `30·√(k·S)` with `S = ⌈10·ln n⌉ − 1`, and
/// whether the row-support hypothesis held at every activation.
#[derive(Debug, Clone)]
pub struct AccountingReport {
    pub evictions: usize,
    /// Enclosure of `750·k^{3/2}·ln n`.
    pub bound: Interval,
    /// Certified `evictions ≤ bound`.
    pub bound_holds: bool,
    /// `|supp(v_i)| ≤ 2k` for every row that ever became active.
    pub support_hypothesis: bool,
    pub per_row: Vec<RowWeightReport>,
}

#[derive(Debug, Clone)]
pub struct RowWeightReport {
    pub row: usize,
    /// Enclosure of the total weight ever added to this row's entries.
    pub added: Interval,
    /// Enclosure of the cap `30·√(k·S)`.
    pub cap: Interval,
    /// Certified `added ≤ cap` (`None` when undecided at the precision cap,
    /// which only a measure-zero tie could cause).
    pub within_cap: Option<bool>,
    pub support_at_activation: usize,
}

pub fn accounting_bound(v: &Matrix, d: &Decomposition, prec: Precision) -> Result<AccountingReport> {
    let k = v.rows();
    let n = v.cols();
    let evictions = d.n2.len();

    let ln_n = ln_of(&int(n as i64), prec)?;
    let k_sqrt = sqrt_of(&int(k as i64), prec)?;
    let bound = ln_n
        .mul(&k_sqrt)
        .mul_scalar(&(int(750) * int(k as i64)));
    let bound_holds = refine_until(prec, "eviction count vs 750·k^{3/2}·ln n", |p| {
        let ln_n = ln_of(&int(n as i64), p)?;
        let k_sqrt = sqrt_of(&int(k as i64), p)?;
        let b = ln_n.mul(&k_sqrt).mul_scalar(&(int(750) * int(k as i64)));
        Ok(match b.cmp_scalar(&int(evictions as i64)) {
            Cmp::Greater => Some(true),
            Cmp::Less => Some(false),
            Cmp::Undecided => None,
        })
    })?;

    let support_hypothesis = d
        .audit
        .activations
        .iter()
        .all(|a| a.full_support <= 2 * k);

    // Replay the added-weight ledger per row. Activation contributes
    // Σ_m N*_m · 10/√(N*_m); each later eviction of one of the row's
    // magnitude-m entries raises the weight of the N-1 survivors from
    // 10/√N to 10/√(N-1).
    let s_cap = d.audit.inactive_threshold.saturating_sub(1);
    let cap = sqrt_of(&(int(k as i64) * int(s_cap as i64)), prec)?.mul_scalar(&int(30));
    let mut added: BTreeMap<usize, Interval> = BTreeMap::new();
    for act in &d.audit.activations {
        let mut total = Interval::point(Scalar::zero());
        for &count in act.magnitude_counts.values() {
            let sqrt_n = sqrt_of(&int(count as i64), prec)?;
            total = total.add(&sqrt_n.mul_scalar(&int(10)));
        }
        added.insert(act.row, total);
    }
    for ev in &d.audit.evictions {
        for &(i, _, count) in &ev.contributors {
            if count >= 2 {
                let survivors = int((count - 1) as i64);
                let w_new = sqrt_of(&int((count - 1) as i64), prec)?.recip()?.mul_scalar(&int(10));
                let w_old = sqrt_of(&int(count as i64), prec)?.recip()?.mul_scalar(&int(10));
                let delta = w_new.sub(&w_old).mul_scalar(&survivors);
                let entry = added.get_mut(&i).expect("contributor was activated");
                *entry = entry.add(&delta);
            }
        }
    }

    let per_row = added
        .into_iter()
        .map(|(row, added)| {
            let within_cap = match added.cmp_interval(&cap) {
                Cmp::Less => Some(true),
                Cmp::Greater => Some(false),
                Cmp::Undecided => None,
            };
            let support_at_activation = d
                .audit
                .activations
                .iter()
                .find(|a| a.row == row)
                .map(|a| a.full_support)
                .unwrap_or(0);
            RowWeightReport {
                row,
                added,
                cap: cap.clone(),
                within_cap,
                support_at_activation,
            }
        })
        .collect();

    Ok(AccountingReport {
        evictions,
        bound,
        bound_holds,
        support_hypothesis,
        per_row,
    })
}

/// Replays the audit independently: re-runs the algorithm and demands the
/// identical decomposition (determinism), re-certifies every recorded
/// eviction total from its contributors, and checks that no row activated
/// twice.
pub fn replay_audit(v: &Matrix, d: &Decomposition, prec: Precision) -> Result<bool> {
    let rerun = decompose(v, prec)?;
    if &rerun != d {
        return Ok(false);
    }
    let mut cache = WeightCache::default();
    for ev in &d.audit.evictions {
        let decision = certify_column(&ev.contributors, v.cols(), prec, &mut cache)?;
        if !decision.exceeds {
            return Ok(false);
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for act in &d.audit.activations {
        if !seen.insert(act.row) {
            return Ok(false);
        }
    }
    Ok(true)
}
