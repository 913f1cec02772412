//! Hyperplanes, covers, and their exact text format.

use num::traits::Zero;

use crate::cube::Vertex;
use crate::error::Error;
use crate::matrix::Matrix;
use crate::scalar::{format_scalar, parse_scalar, Scalar};
use crate::Result;

/// A hyperplane `{x : ⟨v, x⟩ = μ}` with exact rational data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hyperplane {
    coeffs: Vec<Scalar>,
    offset: Scalar,
}

impl Hyperplane {
    /// Rejects the degenerate all-zero coefficient vector.
    pub fn new(coeffs: Vec<Scalar>, offset: Scalar) -> Result<Self> {
        if coeffs.iter().all(|c| c.is_zero()) {
            return Err(Error::ZeroHyperplane);
        }
        Ok(Hyperplane { coeffs, offset })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn offset(&self) -> &Scalar {
        &self.offset
    }

    /// Exact membership test `⟨v, x⟩ = μ`.
    pub fn contains(&self, x: &Vertex) -> Result<bool> {
        Ok(inner_product(&self.coeffs, x)? == self.offset)
    }

    /// True iff every coordinate appears with a non-zero coefficient.
    pub fn has_full_support(&self) -> bool {
        self.coeffs.iter().all(|c| !c.is_zero())
    }
}

/// Exact inner product `Σ v_j · x_j`, reading the vertex bits as `±1`.
pub fn inner_product(v: &[Scalar], x: &Vertex) -> Result<Scalar> {
    if v.len() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: x.dim(),
        });
    }
    let mut acc = Scalar::zero();
    for (j, c) in v.iter().enumerate() {
        if x.mask() >> j & 1 == 1 {
            acc += c;
        } else {
            acc -= c;
        }
    }
    Ok(acc)
}

/// Indices (1-based) of the non-zero entries.
pub fn support(v: &[Scalar]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(j, _)| j + 1)
        .collect()
}

/// An ordered list of hyperplanes over a fixed dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    dim: usize,
    planes: Vec<Hyperplane>,
}

impl Cover {
    pub fn new(dim: usize, planes: Vec<Hyperplane>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionOutOfRange { n: 0, cap: usize::MAX });
        }
        if planes.is_empty() {
            return Err(Error::EmptyCover);
        }
        for p in &planes {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
        }
        Ok(Cover { dim, planes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn planes(&self) -> &[Hyperplane] {
        &self.planes
    }

    /// Plane by 1-based index.
    pub fn plane(&self, i: usize) -> &Hyperplane {
        &self.planes[i - 1]
    }

    /// The `k×n` matrix whose rows are the plane normal vectors.
    pub fn coefficient_matrix(&self) -> Matrix {
        Matrix::from_rows(
            self.planes
                .iter()
                .map(|p| p.coeffs().to_vec())
                .collect::<Vec<_>>(),
        )
        .expect("cover planes share a dimension")
    }

    /// Offsets `μ_1, …, μ_k` in plane order.
    pub fn offsets(&self) -> Vec<Scalar> {
        self.planes.iter().map(|p| p.offset().clone()).collect()
    }

    /// Sub-cover keeping the planes whose 1-based indices are listed, in the
    /// given order.
    pub fn select(&self, indices: &[usize]) -> Result<Cover> {
        let mut planes = Vec::with_capacity(indices.len());
        for &i in indices {
            if i == 0 || i > self.planes.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.planes.len(),
                });
            }
            planes.push(self.planes[i - 1].clone());
        }
        Cover::new(self.dim, planes)
    }

    /// Serializes in the line-oriented text format; inverse of
    /// [`Cover::parse`]. Deterministic and byte-stable.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.dim, self.planes.len()));
        for p in &self.planes {
            let mut fields: Vec<String> = p.coeffs().iter().map(format_scalar).collect();
            fields.push(format_scalar(p.offset()));
            out.push_str(&fields.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the text format: first line `n k`, then `k` lines of `n+1`
    /// exact rationals (coefficients then offset). `#` starts a comment.
    pub fn parse(text: &str) -> Result<Cover> {
        let mut lines = meaningful_lines(text);
        let (header, line_no) = lines
            .next()
            .ok_or_else(|| Error::parse(1, 1, "missing header line `n k`"))?;
        let header_fields = tokenize(header, line_no);
        if header_fields.len() != 2 {
            return Err(Error::parse(
                line_no,
                1,
                format!("header must be `n k`, got {} fields", header_fields.len()),
            ));
        }
        let n = parse_usize(&header_fields[0])?;
        let k = parse_usize(&header_fields[1])?;
        if n == 0 {
            return Err(Error::parse(line_no, header_fields[0].column, "n must be positive"));
        }
        if k == 0 {
            return Err(Error::parse(line_no, header_fields[1].column, "k must be positive"));
        }

        let mut planes = Vec::with_capacity(k);
        for _ in 0..k {
            let (line, line_no) = lines.next().ok_or_else(|| {
                Error::parse(line_no, 1, format!("expected {k} plane lines, file ended early"))
            })?;
            let fields = tokenize(line, line_no);
            if fields.len() != n + 1 {
                return Err(Error::parse(
                    line_no,
                    1,
                    format!("expected {} fields (n coefficients + offset), got {}", n + 1, fields.len()),
                ));
            }
            let mut values = Vec::with_capacity(n + 1);
            for f in &fields {
                values.push(
                    parse_scalar(&f.text)
                        .map_err(|m| Error::parse(line_no, f.column, m))?,
                );
            }
            let offset = values.pop().expect("n+1 fields");
            let plane = Hyperplane::new(values, offset)
                .map_err(|_| Error::parse(line_no, fields[0].column, "all-zero coefficient vector"))?;
            planes.push(plane);
        }
        if let Some((_, extra_line)) = lines.next() {
            return Err(Error::parse(extra_line, 1, "trailing content after last plane"));
        }
        Cover::new(n, planes)
    }
}

pub(crate) struct Field {
    pub text: String,
    pub column: usize,
}

/// Strips comments and blank lines, yielding `(content, 1-based line number)`.
pub(crate) fn meaningful_lines(text: &str) -> impl Iterator<Item = (&str, usize)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if content.trim().is_empty() {
            None
        } else {
            Some((content, i + 1))
        }
    })
}

pub(crate) fn tokenize(line: &str, _line_no: usize) -> Vec<Field> {
    let mut fields = Vec::new();
    let mut col = 0usize;
    for chunk in line.split_inclusive(char::is_whitespace) {
        let trimmed = chunk.trim_end_matches(char::is_whitespace);
        if !trimmed.is_empty() {
            fields.push(Field {
                text: trimmed.to_string(),
                column: col + 1,
            });
        }
        col += chunk.chars().count();
    }
    fields
}

pub(crate) fn parse_usize(f: &Field) -> Result<usize> {
    f.text
        .parse::<usize>()
        .map_err(|_| Error::parse(0, f.column, format!("expected a non-negative integer, got `{}`", f.text)))
}
