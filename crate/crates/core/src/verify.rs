//! Exhaustive verification of the essential-cover axioms (E1)–(E3), skew
//! covers, greedy minimalization, and the row-support observation.
//!
//! All membership tests are exact. Scans integerize each plane (multiply by
//! the least common denominator) and walk the cube in Gray-code order so a
//! step costs one addition; coefficients that fit comfortably in `i64` take
//! a machine-word fast path, everything else falls back to `BigInt`.

use num::bigint::BigInt;
use num::integer::Integer;
use num::traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::cover::{Cover, Hyperplane};
use crate::cube::Vertex;
use crate::error::Error;
use crate::{Result, EXHAUSTIVE_DIM_CAP};

/// Dimensions up to this use per-plane coverage bitsets (`2^n` bits each);
/// larger dimensions stream.
const BITSET_DIM_CAP: usize = 24;

/// Report of all essential-cover checks on one cover.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub dim: usize,
    pub planes: usize,
    pub e1_ok: bool,
    pub e1_missed: Option<Vertex>,
    pub e2_ok: bool,
    pub e2_uncovered_vars: Vec<usize>,
    pub e3_ok: bool,
    pub e3_witnesses: Vec<Option<Vertex>>,
    pub is_skew: bool,
}

impl VerificationReport {
    /// E1 ∧ E2 ∧ E3.
    pub fn is_essential(&self) -> bool {
        self.e1_ok && self.e2_ok && self.e3_ok
    }
}

impl std::fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "n: {}", self.dim)?;
        writeln!(f, "k: {}", self.planes)?;
        writeln!(f, "e1: {}", self.e1_ok)?;
        if let Some(v) = &self.e1_missed {
            writeln!(f, "e1_missed: {v}")?;
        }
        writeln!(f, "e2: {}", self.e2_ok)?;
        if !self.e2_uncovered_vars.is_empty() {
            let vars: Vec<String> = self.e2_uncovered_vars.iter().map(|v| v.to_string()).collect();
            writeln!(f, "e2_uncovered_vars: {}", vars.join(","))?;
        }
        writeln!(f, "e3: {}", self.e3_ok)?;
        for (i, w) in self.e3_witnesses.iter().enumerate() {
            match w {
                Some(v) => writeln!(f, "e3_witness[{}]: {v}", i + 1)?,
                None => writeln!(f, "e3_witness[{}]: none", i + 1)?,
            }
        }
        writeln!(f, "skew: {}", self.is_skew)?;
        write!(f, "essential: {}", self.is_essential())
    }
}

/// Row-support observation on a verified essential cover: max_i |supp(v_i)|
/// against `2k`.
#[derive(Debug, Clone)]
pub struct RowSupportObservation {
    pub ok: bool,
    pub max_support: usize,
    pub bound: usize,
}

// ---------------------------------------------------------------------------
// Integerized planes and Gray-code scanning.

pub(crate) enum ScaledPlane {
    Small { coeffs: Vec<i64>, target: i64 },
    Big { coeffs: Vec<BigInt>, target: BigInt },
}

impl ScaledPlane {
    /// Direct membership test of the vertex with the given mask.
    pub(crate) fn hits_mask(&self, mask: u32) -> bool {
        match self {
            ScaledPlane::Small { coeffs, target } => {
                let mut sum = 0i64;
                for (j, &c) in coeffs.iter().enumerate() {
                    if mask >> j & 1 == 1 {
                        sum += c;
                    } else {
                        sum -= c;
                    }
                }
                sum == *target
            }
            ScaledPlane::Big { coeffs, target } => {
                let mut sum = BigInt::zero();
                for (j, c) in coeffs.iter().enumerate() {
                    if mask >> j & 1 == 1 {
                        sum += c;
                    } else {
                        sum -= c;
                    }
                }
                sum == *target
            }
        }
    }
}

pub(crate) fn scale_plane(plane: &Hyperplane) -> ScaledPlane {
    let mut lcm = BigInt::one();
    for c in plane.coeffs().iter().chain(std::iter::once(plane.offset())) {
        lcm = lcm.lcm(c.denom());
    }
    let coeffs: Vec<BigInt> = plane
        .coeffs()
        .iter()
        .map(|c| c.numer() * (&lcm / c.denom()))
        .collect();
    let target = plane.offset().numer() * (&lcm / plane.offset().denom());

    let mut magnitude: BigInt = target.abs();
    for c in &coeffs {
        magnitude += c.abs();
    }
    if magnitude < BigInt::one() << 60 {
        ScaledPlane::Small {
            coeffs: coeffs.iter().map(|c| c.to_i64().unwrap()).collect(),
            target: target.to_i64().unwrap(),
        }
    } else {
        ScaledPlane::Big { coeffs, target }
    }
}

/// Walks masks `gray(i)` for `i ∈ [start, end)` and reports each vertex on
/// the plane. Gray order makes each step a single coefficient update.
fn scan_range(plane: &ScaledPlane, start: u64, end: u64, mut on_hit: impl FnMut(u32)) {
    if start >= end {
        return;
    }
    match plane {
        ScaledPlane::Small { coeffs, target } => {
            let mut g = (start ^ (start >> 1)) as u32;
            let mut sum: i64 = 0;
            for (j, &c) in coeffs.iter().enumerate() {
                if g >> j & 1 == 1 {
                    sum += c;
                } else {
                    sum -= c;
                }
            }
            let mut i = start;
            loop {
                if sum == *target {
                    on_hit(g);
                }
                i += 1;
                if i == end {
                    break;
                }
                let tz = i.trailing_zeros();
                g ^= 1 << tz;
                if g >> tz & 1 == 1 {
                    sum += 2 * coeffs[tz as usize];
                } else {
                    sum -= 2 * coeffs[tz as usize];
                }
            }
        }
        ScaledPlane::Big { coeffs, target } => {
            let mut g = (start ^ (start >> 1)) as u32;
            let mut sum = BigInt::zero();
            for (j, c) in coeffs.iter().enumerate() {
                if g >> j & 1 == 1 {
                    sum += c;
                } else {
                    sum -= c;
                }
            }
            let doubled: Vec<BigInt> = coeffs.iter().map(|c| c * 2).collect();
            let mut i = start;
            loop {
                if sum == *target {
                    on_hit(g);
                }
                i += 1;
                if i == end {
                    break;
                }
                let tz = i.trailing_zeros();
                g ^= 1 << tz;
                if g >> tz & 1 == 1 {
                    sum += &doubled[tz as usize];
                } else {
                    sum -= &doubled[tz as usize];
                }
            }
        }
    }
}

fn check_dim_cap(n: usize) -> Result<()> {
    if n > EXHAUSTIVE_DIM_CAP {
        Err(Error::DimensionOverCap {
            n,
            cap: EXHAUSTIVE_DIM_CAP,
        })
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Coverage bitsets (n ≤ BITSET_DIM_CAP).

/// Per-plane bitsets of covered vertices, plus set algebra for the checks.
pub struct CoverageIndex {
    n: usize,
    words: usize,
    sets: Vec<Vec<u64>>,
}

impl CoverageIndex {
    pub fn build(cover: &Cover) -> Result<CoverageIndex> {
        let n = cover.dim();
        check_dim_cap(n)?;
        debug_assert!(n <= BITSET_DIM_CAP);
        let words = (1usize << n).div_ceil(64);
        let total: u64 = 1 << n;
        let sets: Vec<Vec<u64>> = cover
            .planes()
            .par_iter()
            .map(|plane| {
                let scaled = scale_plane(plane);
                let mut bits = vec![0u64; words];
                scan_range(&scaled, 0, total, |g| {
                    bits[(g >> 6) as usize] |= 1 << (g & 63);
                });
                bits
            })
            .collect();
        Ok(CoverageIndex { n, words, sets })
    }

    fn or_into(acc: &mut [u64], set: &[u64]) {
        for (a, s) in acc.iter_mut().zip(set) {
            *a |= s;
        }
    }

    fn union_all(&self, keep: &[bool]) -> Vec<u64> {
        let mut acc = vec![0u64; self.words];
        for (set, &k) in self.sets.iter().zip(keep) {
            if k {
                Self::or_into(&mut acc, set);
            }
        }
        acc
    }

    fn first_unset(&self, acc: &[u64]) -> Option<u32> {
        let total = 1u64 << self.n;
        for (w, &word) in acc.iter().enumerate() {
            if word != u64::MAX {
                let bit = (!word).trailing_zeros();
                let mask = (w as u64) * 64 + bit as u64;
                if mask < total {
                    return Some(mask as u32);
                }
            }
        }
        None
    }

    /// Minimal-mask vertex not covered by any kept plane.
    fn first_miss(&self, keep: &[bool]) -> Option<u32> {
        self.first_unset(&self.union_all(keep))
    }

    /// Whether plane `i`'s vertex set is covered by the other kept planes.
    fn covered_without(&self, keep: &[bool], i: usize) -> bool {
        let mut acc = vec![0u64; self.words];
        for (j, (set, &k)) in self.sets.iter().zip(keep).enumerate() {
            if k && j != i {
                Self::or_into(&mut acc, set);
            }
        }
        self.sets[i].iter().zip(&acc).all(|(s, a)| s & !a == 0)
    }

    /// Minimal-mask vertex covered by plane `i` and by no other plane.
    fn private_vertex(&self, i: usize) -> Option<u32> {
        let mut others = vec![0u64; self.words];
        for (j, set) in self.sets.iter().enumerate() {
            if j != i {
                Self::or_into(&mut others, set);
            }
        }
        let total = 1u64 << self.n;
        for (w, (s, o)) in self.sets[i].iter().zip(&others).enumerate() {
            let private = s & !o;
            if private != 0 {
                let mask = (w as u64) * 64 + private.trailing_zeros() as u64;
                if mask < total {
                    return Some(mask as u32);
                }
            }
        }
        None
    }
}

// ---------------------------------------------------------------------------
// Streaming scan (any n ≤ EXHAUSTIVE_DIM_CAP), one pass for misses and
// private vertices.

struct StreamOutcome {
    first_miss: Option<u32>,
    /// Per plane, minimal mask covered by exactly that plane.
    witnesses: Vec<Option<u32>>,
}

fn merge_min(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Inverse of `g = i ^ (i >> 1)` on 32 bits.
fn gray_inverse(g: u32) -> u32 {
    let mut m = g;
    m ^= m >> 1;
    m ^= m >> 2;
    m ^= m >> 4;
    m ^= m >> 8;
    m ^= m >> 16;
    m
}

fn stream_scan(cover: &Cover, keep: &[bool]) -> StreamOutcome {
    let n = cover.dim();
    let k = cover.len();
    let total: u64 = 1 << n;
    let planes: Vec<Option<ScaledPlane>> = cover
        .planes()
        .iter()
        .zip(keep)
        .map(|(p, &kept)| kept.then(|| scale_plane(p)))
        .collect();

    let chunk: u64 = 1 << 18;
    let ranges: Vec<(u64, u64)> = (0..total.div_ceil(chunk))
        .map(|c| (c * chunk, ((c + 1) * chunk).min(total)))
        .collect();

    let outcomes: Vec<StreamOutcome> = ranges
        .into_par_iter()
        .map(|(start, end)| {
            // Hits are indexed by Gray mask; fold them into per-vertex
            // counters over the mask sub-range covered by this chunk.
            // Gray masks of an index range are not contiguous, so counters
            // are keyed by enumeration index instead.
            let len = (end - start) as usize;
            let mut hit_count = vec![0u8; len];
            let mut last_hit = vec![0u16; len];
            for (idx, plane) in planes.iter().enumerate() {
                let Some(plane) = plane else { continue };
                scan_range(plane, start, end, |g| {
                    let off = (gray_inverse(g) as u64 - start) as usize;
                    hit_count[off] = hit_count[off].saturating_add(1);
                    last_hit[off] = idx as u16;
                });
            }
            let mut first_miss = None;
            let mut witnesses = vec![None; k];
            for off in 0..len {
                // Counter slot `off` holds enumeration step `start + off`,
                // which visited vertex mask gray(start + off).
                let i = start + off as u64;
                let mask = (i ^ (i >> 1)) as u32;
                match hit_count[off] {
                    0 => first_miss = merge_min(first_miss, Some(mask)),
                    1 => {
                        let plane = last_hit[off] as usize;
                        witnesses[plane] = merge_min(witnesses[plane], Some(mask));
                    }
                    _ => {}
                }
            }
            StreamOutcome {
                first_miss,
                witnesses,
            }
        })
        .collect();

    outcomes
        .into_iter()
        .reduce(|a, b| StreamOutcome {
            first_miss: merge_min(a.first_miss, b.first_miss),
            witnesses: a
                .witnesses
                .iter()
                .zip(&b.witnesses)
                .map(|(&x, &y)| merge_min(x, y))
                .collect(),
        })
        .unwrap_or(StreamOutcome {
            first_miss: None,
            witnesses: vec![None; k],
        })
}

// ---------------------------------------------------------------------------
// Public checks.

/// (E1) every vertex lies on at least one plane. Returns the first missed
/// vertex in enumeration order otherwise.
pub fn check_e1(cover: &Cover) -> Result<(bool, Option<Vertex>)> {
    let missed = find_uncovered(cover)?;
    Ok((missed.is_none(), missed))
}

/// First vertex (in enumeration order) lying on no plane, if any.
pub fn find_uncovered(cover: &Cover) -> Result<Option<Vertex>> {
    let n = cover.dim();
    check_dim_cap(n)?;
    let keep = vec![true; cover.len()];
    let miss = if n <= BITSET_DIM_CAP {
        CoverageIndex::build(cover)?.first_miss(&keep)
    } else {
        stream_scan(cover, &keep).first_miss
    };
    miss.map(|m| Vertex::from_mask(m, n)).transpose()
}

/// (E2) every variable appears with a non-zero coefficient in some plane.
/// Returns the 1-based indices of uncovered variables.
pub fn check_e2(cover: &Cover) -> (bool, Vec<usize>) {
    let uncovered: Vec<usize> = (1..=cover.dim())
        .filter(|&j| cover.planes().iter().all(|p| p.coeffs()[j - 1].is_zero()))
        .collect();
    (uncovered.is_empty(), uncovered)
}

/// (E3) every plane covers some vertex privately. Returns per-plane
/// witnesses (first in enumeration order).
pub fn check_e3(cover: &Cover) -> Result<(bool, Vec<Option<Vertex>>)> {
    let n = cover.dim();
    check_dim_cap(n)?;
    let raw: Vec<Option<u32>> = if n <= BITSET_DIM_CAP {
        let index = CoverageIndex::build(cover)?;
        (0..cover.len()).map(|i| index.private_vertex(i)).collect()
    } else {
        stream_scan(cover, &vec![true; cover.len()]).witnesses
    };
    let witnesses: Vec<Option<Vertex>> = raw
        .into_iter()
        .map(|m| m.map(|m| Vertex::from_mask(m, n)).transpose())
        .collect::<Result<_>>()?;
    Ok((witnesses.iter().all(|w| w.is_some()), witnesses))
}

/// Skew test: every plane has full support.
pub fn check_skew(cover: &Cover) -> bool {
    cover.planes().iter().all(|p| p.has_full_support())
}

/// Runs every check and assembles the report.
pub fn verify_cover(cover: &Cover) -> Result<VerificationReport> {
    let (e1_ok, e1_missed) = check_e1(cover)?;
    let (e2_ok, e2_uncovered_vars) = check_e2(cover);
    let (e3_ok, e3_witnesses) = check_e3(cover)?;
    Ok(VerificationReport {
        dim: cover.dim(),
        planes: cover.len(),
        e1_ok,
        e1_missed,
        e2_ok,
        e2_uncovered_vars,
        e3_ok,
        e3_witnesses,
        is_skew: check_skew(cover),
    })
}

/// Greedy minimalization: repeatedly drops the lowest-indexed plane whose
/// removal preserves E1. The result satisfies E1 and E3. Errors if the input
/// fails E1.
pub fn essentialize(cover: &Cover) -> Result<Cover> {
    let n = cover.dim();
    check_dim_cap(n)?;
    let k = cover.len();
    let mut keep = vec![true; k];

    if n <= BITSET_DIM_CAP {
        let index = CoverageIndex::build(cover)?;
        if let Some(miss) = index.first_miss(&keep) {
            return Err(Error::NotCovering {
                missed: Vertex::from_mask(miss, n)?,
            });
        }
        'outer: loop {
            for i in 0..k {
                if keep[i] && index.covered_without(&keep, i) {
                    keep[i] = false;
                    continue 'outer;
                }
            }
            break;
        }
    } else {
        if let Some(miss) = stream_scan(cover, &keep).first_miss {
            return Err(Error::NotCovering {
                missed: Vertex::from_mask(miss, n)?,
            });
        }
        'outer_stream: loop {
            for i in 0..k {
                if !keep[i] {
                    continue;
                }
                keep[i] = false;
                if stream_scan(cover, &keep).first_miss.is_none() {
                    continue 'outer_stream;
                }
                keep[i] = true;
            }
            break;
        }
    }

    let kept: Vec<usize> = (0..k).filter(|&i| keep[i]).map(|i| i + 1).collect();
    cover.select(&kept)
}

/// Checks `max_i |supp(v_i)| ≤ 2k` on a verified essential cover. A false
/// result would contradict the row-support lemma and signals a bug upstream.
pub fn observe_row_support(
    cover: &Cover,
    report: &VerificationReport,
) -> Result<RowSupportObservation> {
    if !report.is_essential() {
        return Err(Error::NotEssential);
    }
    let max_support = cover
        .planes()
        .iter()
        .map(|p| crate::cover::support(p.coeffs()).len())
        .max()
        .unwrap_or(0);
    let bound = 2 * cover.len();
    Ok(RowSupportObservation {
        ok: max_support <= bound,
        max_support,
        bound,
    })
}
