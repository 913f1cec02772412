//! Constructive solver for Bang's lemma, and the rounding point it yields.
//!
//! Bang's lemma: for a symmetric `ℓ×ℓ` matrix `M` with unit diagonal, any
//! target `μ ∈ R^ℓ` and any `θ ≥ 0`, there are signs `ε ∈ {±1}^ℓ` with
//! `|(M(θε))_i − μ_i| ≥ θ` for every `i`. The solver runs flip ascent on the
//! potential `F(ε) = θ²·εᵀMε − 2θ·⟨ε, μ⟩`: flipping coordinate `i` changes
//! `F` by exactly `4θ(θ − ε_i·r_i)` where `r_i = (M(θε))_i − μ_i`, so at a
//! local maximum `ε_i·r_i ≥ θ` for all `i`, which is the guarantee. `F`
//! strictly increases with every flip over a finite domain, so exact
//! arithmetic terminates unconditionally.

use num::bigint::BigInt;
use num::integer::Integer;
use num::traits::{One, Signed, ToPrimitive, Zero};

use crate::cover::{meaningful_lines, parse_usize, tokenize};
use crate::error::Error;
use crate::matrix::Matrix;
use crate::scalar::{format_scalar, parse_scalar, ratio, Scalar};
use crate::Result;

/// Exhaustive enumeration cap for [`brute_force_bang`].
pub const BRUTE_FORCE_DIM_CAP: usize = 20;

/// Row squared norms may deviate from 1 by at most this much in tolerance
/// mode of [`rounding_point`].
pub fn row_norm_tolerance() -> Scalar {
    Scalar::new(BigInt::one(), BigInt::from(10).pow(12))
}

/// A Bang instance: symmetric unit-diagonal `M`, target `μ`, and `θ ≥ 0`.
#[derive(Debug, Clone)]
pub struct BangInstance {
    m: Matrix,
    mu: Vec<Scalar>,
    theta: Scalar,
}

impl BangInstance {
    pub fn new(m: Matrix, mu: Vec<Scalar>, theta: Scalar) -> Result<Self> {
        let l = m.rows();
        if m.cols() != l {
            return Err(Error::InvalidInstance(format!(
                "M must be square, got {}×{}",
                m.rows(),
                m.cols()
            )));
        }
        if mu.len() != l {
            return Err(Error::InvalidInstance(format!(
                "μ has length {}, expected {l}",
                mu.len()
            )));
        }
        if theta.is_negative() {
            return Err(Error::InvalidInstance("θ must be non-negative".into()));
        }
        for i in 1..=l {
            if !m.entry(i, i).is_one() {
                return Err(Error::InvalidInstance(format!(
                    "M[{i},{i}] = {} ≠ 1",
                    m.entry(i, i)
                )));
            }
            for j in (i + 1)..=l {
                if m.entry(i, j) != m.entry(j, i) {
                    return Err(Error::InvalidInstance(format!(
                        "M[{i},{j}] ≠ M[{j},{i}]"
                    )));
                }
            }
        }
        Ok(BangInstance { m, mu, theta })
    }

    pub fn len(&self) -> usize {
        self.m.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn mu(&self) -> &[Scalar] {
        &self.mu
    }

    pub fn theta(&self) -> &Scalar {
        &self.theta
    }

    /// Residual vector `(M(θε)) − μ` for a sign assignment.
    pub fn residuals(&self, epsilon: &[i8]) -> Result<Vec<Scalar>> {
        if epsilon.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: epsilon.len(),
            });
        }
        let theta_eps: Vec<Scalar> = epsilon
            .iter()
            .map(|&e| if e >= 0 { self.theta.clone() } else { -self.theta.clone() })
            .collect();
        let m_theta_eps = self.m.mul_vec(&theta_eps)?;
        Ok(m_theta_eps
            .into_iter()
            .zip(&self.mu)
            .map(|(v, mu)| v - mu)
            .collect())
    }

    /// Whether `ε` meets the guarantee `|r_i| ≥ θ` for all `i`.
    pub fn is_valid(&self, epsilon: &[i8]) -> Result<bool> {
        Ok(self
            .residuals(epsilon)?
            .iter()
            .all(|r| r.abs() >= self.theta))
    }

    /// Potential `F(ε) = θ²·εᵀMε − 2θ·⟨ε, μ⟩`.
    pub fn potential(&self, epsilon: &[i8]) -> Result<Scalar> {
        if epsilon.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: epsilon.len(),
            });
        }
        let signs: Vec<Scalar> = epsilon
            .iter()
            .map(|&e| if e >= 0 { Scalar::one() } else { -Scalar::one() })
            .collect();
        let m_eps = self.m.mul_vec(&signs)?;
        let mut quad = Scalar::zero();
        let mut lin = Scalar::zero();
        for ((s, me), mu) in signs.iter().zip(&m_eps).zip(&self.mu) {
            quad += s * me;
            lin += s * mu;
        }
        let theta_sq = &self.theta * &self.theta;
        Ok(theta_sq * quad - ratio(2, 1) * &self.theta * lin)
    }

    /// Serializes the instance file: `ℓ`, then `ℓ` rows of `M`, then `μ`,
    /// then `θ`, all exact rationals.
    pub fn to_text(&self) -> String {
        let l = self.len();
        let mut out = format!("{l}\n");
        for i in 1..=l {
            let fields: Vec<String> = self.m.row(i).iter().map(format_scalar).collect();
            out.push_str(&fields.join(" "));
            out.push('\n');
        }
        let mu: Vec<String> = self.mu.iter().map(format_scalar).collect();
        out.push_str(&mu.join(" "));
        out.push('\n');
        out.push_str(&format_scalar(&self.theta));
        out.push('\n');
        out
    }

    /// Parses the instance file format written by [`BangInstance::to_text`].
    pub fn parse(text: &str) -> Result<BangInstance> {
        let mut lines = meaningful_lines(text);
        let (header, line_no) = lines
            .next()
            .ok_or_else(|| Error::parse(1, 1, "missing dimension line"))?;
        let fields = tokenize(header, line_no);
        if fields.len() != 1 {
            return Err(Error::parse(line_no, 1, "first line must be the dimension ℓ"));
        }
        let l = parse_usize(&fields[0])?;
        if l == 0 {
            return Err(Error::parse(line_no, 1, "ℓ must be positive"));
        }
        let mut take_row = |expected: usize, what: &str| -> Result<Vec<Scalar>> {
            let (line, line_no) = lines
                .next()
                .ok_or_else(|| Error::parse(0, 1, format!("file ended early, expected {what}")))?;
            let fields = tokenize(line, line_no);
            if fields.len() != expected {
                return Err(Error::parse(
                    line_no,
                    1,
                    format!("expected {expected} fields for {what}, got {}", fields.len()),
                ));
            }
            fields
                .iter()
                .map(|f| parse_scalar(&f.text).map_err(|m| Error::parse(line_no, f.column, m)))
                .collect()
        };
        let mut rows = Vec::with_capacity(l);
        for i in 0..l {
            rows.push(take_row(l, &format!("row {} of M", i + 1))?);
        }
        let mu = take_row(l, "μ")?;
        let theta = take_row(1, "θ")?.pop().expect("one field");
        BangInstance::new(Matrix::from_rows(rows)?, mu, theta)
    }
}

/// A sign vector with its residuals and the guarantee `|r_i| ≥ θ`.
#[derive(Debug, Clone)]
pub struct BangCertificate {
    pub epsilon: Vec<i8>,
    pub residuals: Vec<Scalar>,
    /// Number of flips the ascent performed.
    pub steps: u64,
}

/// Flip ascent. Scans coordinates cyclically from index 1 and flips the
/// first coordinate that strictly increases the potential, until none does.
pub fn solve_bang(inst: &BangInstance) -> Result<BangCertificate> {
    let l = inst.len();
    let mut epsilon = vec![1i8; l];
    let theta = inst.theta();
    let mut steps = 0u64;

    if theta.is_positive() {
        // g = Mε, updated incrementally on flips.
        let signs: Vec<Scalar> = epsilon.iter().map(|_| Scalar::one()).collect();
        let mut g = inst.matrix().mul_vec(&signs)?;
        let mut since_last_flip = 0usize;
        let mut i = 0usize;
        while since_last_flip < l {
            // Flip improves iff ε_i·r_i < θ, where r_i = θ·g_i − μ_i.
            let r = theta * &g[i] - &inst.mu[i];
            let signed = if epsilon[i] >= 0 { r } else { -r };
            if signed < *theta {
                let old = epsilon[i];
                epsilon[i] = -old;
                let col = inst.matrix().column(i + 1);
                for (gt, mti) in g.iter_mut().zip(&col) {
                    if old >= 0 {
                        *gt -= mti + mti;
                    } else {
                        *gt += mti + mti;
                    }
                }
                steps += 1;
                since_last_flip = 0;
            } else {
                since_last_flip += 1;
            }
            i = (i + 1) % l;
        }
    }

    let residuals = inst.residuals(&epsilon)?;
    debug_assert!(residuals.iter().all(|r| r.abs() >= *theta));
    Ok(BangCertificate {
        epsilon,
        residuals,
        steps,
    })
}

/// Enumerates all `2^ℓ` sign vectors and returns every one meeting the
/// guarantee, in mask order (bit `i` set means `ε_{i+1} = +1`). Never empty.
pub fn brute_force_bang(inst: &BangInstance) -> Result<Vec<Vec<i8>>> {
    let l = inst.len();
    if l > BRUTE_FORCE_DIM_CAP {
        return Err(Error::SizeGuard {
            what: format!("ℓ = {l} exceeds brute-force cap {BRUTE_FORCE_DIM_CAP}"),
        });
    }

    // Integerize: scale θM and μ and θ by a common denominator; the
    // guarantee is scale-invariant, so integer comparisons decide it.
    let mut lcm = BigInt::one();
    let theta = inst.theta();
    for i in 1..=l {
        for j in 1..=l {
            let tm = theta * inst.matrix().entry(i, j);
            lcm = lcm.lcm(tm.denom());
        }
        lcm = lcm.lcm(inst.mu[i - 1].denom());
    }
    lcm = lcm.lcm(theta.denom());
    let lcm_r = Scalar::from_integer(lcm.clone());

    let scale = |x: &Scalar| -> BigInt { (x * &lcm_r).to_integer() };
    let a: Vec<Vec<BigInt>> = (1..=l)
        .map(|i| {
            (1..=l)
                .map(|j| scale(&(theta * inst.matrix().entry(i, j))))
                .collect()
        })
        .collect();
    let b: Vec<BigInt> = inst.mu.iter().map(&scale).collect();
    let t = scale(theta);

    let mut magnitude = t.abs();
    for (row, bi) in a.iter().zip(&b) {
        magnitude += bi.abs();
        for entry in row {
            magnitude += entry.abs();
        }
    }

    let mut valid = Vec::new();
    if magnitude < BigInt::one() << 60 {
        let a: Vec<Vec<i64>> = a
            .iter()
            .map(|row| row.iter().map(|x| x.to_i64().unwrap()).collect())
            .collect();
        let b: Vec<i64> = b.iter().map(|x| x.to_i64().unwrap()).collect();
        let t = t.to_i64().unwrap();
        // Gray walk over sign vectors; sums[i] = Σ_j a[i][j]·ε_j.
        let mut sums: Vec<i64> = (0..l).map(|i| -a[i].iter().sum::<i64>()).collect();
        let mut g: u32 = 0;
        let total: u64 = 1 << l;
        let mut step: u64 = 0;
        loop {
            if sums.iter().zip(&b).all(|(s, b)| (s - b).abs() >= t) {
                valid.push(g);
            }
            step += 1;
            if step == total {
                break;
            }
            let tz = step.trailing_zeros();
            g ^= 1 << tz;
            let up = g >> tz & 1 == 1;
            for (i, s) in sums.iter_mut().enumerate() {
                if up {
                    *s += 2 * a[i][tz as usize];
                } else {
                    *s -= 2 * a[i][tz as usize];
                }
            }
        }
        valid.sort_unstable();
    } else {
        for mask in 0..(1u64 << l) {
            let epsilon: Vec<i8> = (0..l)
                .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
                .collect();
            if inst.is_valid(&epsilon)? {
                valid.push(mask as u32);
            }
        }
    }

    Ok(valid
        .into_iter()
        .map(|mask| {
            (0..l)
                .map(|i| if mask >> i & 1 == 1 { 1i8 } else { -1 })
                .collect()
        })
        .collect())
}

/// How the unit-row-norm precondition of [`rounding_point`] was met.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowNormMode {
    /// Every row has squared ℓ2-norm exactly 1.
    Exact,
    /// Squared norms within `row_norm_tolerance()` of 1; the certified
    /// residual guarantee degrades to `|r_i| ≥ θ·(1 − defect_i)`.
    Tolerance { max_defect: Scalar },
}

/// A rounding point `y = θ·Vᵀε` with its exact residuals.
#[derive(Debug, Clone)]
pub struct RoundingPoint {
    pub y: Vec<Scalar>,
    pub epsilon: Vec<i8>,
    /// `⟨v_i, y⟩ − μ_i`, exact.
    pub residuals: Vec<Scalar>,
    pub mode: RowNormMode,
    /// Whether `|r_i| ≥ θ` held for every row (always true in exact mode).
    pub full_guarantee: bool,
    pub steps: u64,
}

/// Applies Bang's lemma to `M = V·Vᵀ` and returns `y = θ·Vᵀε`, which
/// satisfies `‖y‖∞ ≤ 1/3` and `|⟨v_i, y⟩ − μ_i| ≥ θ`.
///
/// Preconditions, checked exactly: every row's squared ℓ2-norm equals 1
/// (preferred) or lies within `row_norm_tolerance()` of 1 (recorded in the
/// result), and `θ·‖v_{*j}‖₁ ≤ 1/3` for every column.
pub fn rounding_point(v: &Matrix, mu: &[Scalar], theta: &Scalar) -> Result<RoundingPoint> {
    let l = v.rows();
    let m_cols = v.cols();
    if mu.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            got: mu.len(),
        });
    }
    if theta.is_negative() {
        return Err(Error::InvalidInstance("θ must be non-negative".into()));
    }

    // Row norms.
    let mut defects: Vec<Scalar> = Vec::with_capacity(l);
    for i in 1..=l {
        let mut q = Scalar::zero();
        for x in v.row(i) {
            q += x * x;
        }
        defects.push((q - Scalar::one()).abs());
    }
    let max_defect = defects.iter().max().cloned().unwrap_or_else(Scalar::zero);
    let mode = if max_defect.is_zero() {
        RowNormMode::Exact
    } else if max_defect <= row_norm_tolerance() {
        RowNormMode::Tolerance {
            max_defect: max_defect.clone(),
        }
    } else {
        return Err(Error::InvalidInstance(format!(
            "row squared norm deviates from 1 by {max_defect}, beyond tolerance"
        )));
    };

    // Column ℓ1 precondition.
    let third = ratio(1, 3);
    for j in 1..=m_cols {
        let mut l1 = Scalar::zero();
        for x in v.column(j) {
            l1 += x.abs();
        }
        if theta * &l1 > third {
            return Err(Error::InvalidInstance(format!(
                "θ·‖v_*{j}‖₁ = {} > 1/3",
                theta * &l1
            )));
        }
    }

    // M = V·Vᵀ, unit diagonal forced in tolerance mode.
    let mut m = v.mul(&v.transpose())?;
    if matches!(mode, RowNormMode::Tolerance { .. }) {
        let mut rows: Vec<Vec<Scalar>> = (1..=l).map(|i| m.row(i).to_vec()).collect();
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = Scalar::one();
        }
        m = Matrix::from_rows(rows)?;
    }
    let inst = BangInstance::new(m, mu.to_vec(), theta.clone())?;
    let cert = solve_bang(&inst)?;

    // y = θ·Vᵀ·ε, exact.
    let theta_eps: Vec<Scalar> = cert
        .epsilon
        .iter()
        .map(|&e| if e >= 0 { theta.clone() } else { -theta.clone() })
        .collect();
    let y = v.transpose().mul_vec(&theta_eps)?;

    // Certified postconditions.
    for yj in &y {
        if yj.abs() > third {
            return Err(Error::Invalid(format!("‖y‖∞ violation: |{yj}| > 1/3")));
        }
    }
    let residuals: Vec<Scalar> = v
        .mul_vec(&y)?
        .into_iter()
        .zip(mu)
        .map(|(p, m)| p - m)
        .collect();
    let mut full_guarantee = true;
    for (i, r) in residuals.iter().enumerate() {
        let abs = r.abs();
        if abs < *theta {
            full_guarantee = false;
        }
        // Provable floor: |r_i| ≥ θ·(1 − defect_i).
        let floor = theta * (Scalar::one() - &defects[i]);
        if abs < floor {
            return Err(Error::Invalid(format!(
                "residual {} below certified floor {floor} at row {}",
                r,
                i + 1
            )));
        }
    }
    if matches!(mode, RowNormMode::Exact) && !full_guarantee {
        return Err(Error::Invalid(
            "exact-mode residual fell below θ; this contradicts the flip-ascent guarantee".into(),
        ));
    }

    Ok(RoundingPoint {
        y,
        epsilon: cert.epsilon,
        residuals,
        mode,
        full_guarantee,
        steps: cert.steps,
    })
}
