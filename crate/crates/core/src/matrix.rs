//! Exact rational matrices with order-preserving submatrix extraction.

use num::traits::Zero;

use crate::cover::{meaningful_lines, parse_usize, tokenize};
use crate::error::Error;
use crate::scalar::{format_scalar, parse_scalar, Scalar};
use crate::Result;

/// A dense `k×n` matrix of exact rationals, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<Scalar>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Scalar>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Invalid(format!(
                "matrix storage has {} entries, expected {}",
                entries.len(),
                rows * cols
            )));
        }
        Ok(Matrix { rows, cols, entries })
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let k = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        for r in &rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
        }
        Ok(Matrix {
            rows: k,
            cols: n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            entries: vec![Scalar::zero(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at 1-based `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> &Scalar {
        &self.entries[(i - 1) * self.cols + (j - 1)]
    }

    /// Row `i` (1-based) as a slice.
    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.entries[(i - 1) * self.cols..i * self.cols]
    }

    /// Values of row `i` restricted to the 1-based columns in `cols`,
    /// in the order given.
    pub fn row_restricted(&self, i: usize, cols: &[usize]) -> Vec<Scalar> {
        cols.iter().map(|&j| self.entry(i, j).clone()).collect()
    }

    /// Column `j` (1-based) as a vector.
    pub fn column(&self, j: usize) -> Vec<Scalar> {
        (1..=self.rows).map(|i| self.entry(i, j).clone()).collect()
    }

    /// Transpose.
    pub fn transpose(&self) -> Matrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 1..=self.cols {
            for i in 1..=self.rows {
                entries.push(self.entry(i, j).clone());
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    /// `self · other` in exact arithmetic.
    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for i in 1..=self.rows {
            for j in 1..=other.cols {
                let mut acc = Scalar::zero();
                for t in 1..=self.cols {
                    acc += self.entry(i, t) * other.entry(t, j);
                }
                entries.push(acc);
            }
        }
        Matrix::new(self.rows, other.cols, entries)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Scalar]) -> Result<Vec<Scalar>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((1..=self.rows)
            .map(|i| {
                let mut acc = Scalar::zero();
                for (t, x) in v.iter().enumerate() {
                    acc += self.entry(i, t + 1) * x;
                }
                acc
            })
            .collect())
    }

    /// Extracts the submatrix `V[A×B]` for 1-based row set `A` and column set
    /// `B`, preserving entry values and relative index order. The returned
    /// [`Submatrix`] keeps the translation back to original indices.
    pub fn submatrix(&self, row_set: &[usize], col_set: &[usize]) -> Result<Submatrix> {
        for &i in row_set {
            if i == 0 || i > self.rows {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.rows,
                });
            }
        }
        for &j in col_set {
            if j == 0 || j > self.cols {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    len: self.cols,
                });
            }
        }
        let mut rows: Vec<usize> = row_set.to_vec();
        rows.sort_unstable();
        rows.dedup();
        let mut cols: Vec<usize> = col_set.to_vec();
        cols.sort_unstable();
        cols.dedup();

        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        for &i in &rows {
            for &j in &cols {
                entries.push(self.entry(i, j).clone());
            }
        }
        Ok(Submatrix {
            matrix: Matrix {
                rows: rows.len(),
                cols: cols.len(),
                entries,
            },
            row_origin: rows,
            col_origin: cols,
        })
    }

    /// Serializes in the text format: header `k n`, then `k` rows of `n`
    /// exact rationals.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for i in 1..=self.rows {
            let fields: Vec<String> = self.row(i).iter().map(format_scalar).collect();
            out.push_str(&fields.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the text format written by [`Matrix::to_text`].
    pub fn parse(text: &str) -> Result<Matrix> {
        let mut lines = meaningful_lines(text);
        let (header, line_no) = lines
            .next()
            .ok_or_else(|| Error::parse(1, 1, "missing header line `k n`"))?;
        let fields = tokenize(header, line_no);
        if fields.len() != 2 {
            return Err(Error::parse(line_no, 1, "header must be `k n`"));
        }
        let k = parse_usize(&fields[0])?;
        let n = parse_usize(&fields[1])?;
        let mut rows = Vec::with_capacity(k);
        for _ in 0..k {
            let (line, line_no) = lines
                .next()
                .ok_or_else(|| Error::parse(line_no, 1, format!("expected {k} rows, file ended early")))?;
            let fields = tokenize(line, line_no);
            if fields.len() != n {
                return Err(Error::parse(
                    line_no,
                    1,
                    format!("expected {n} entries, got {}", fields.len()),
                ));
            }
            let mut row = Vec::with_capacity(n);
            for f in &fields {
                row.push(parse_scalar(&f.text).map_err(|m| Error::parse(line_no, f.column, m))?);
            }
            rows.push(row);
        }
        if let Some((_, extra)) = lines.next() {
            return Err(Error::parse(extra, 1, "trailing content after last row"));
        }
        Matrix::from_rows(rows)
    }
}

/// A submatrix together with the translation from its local 1-based indices
/// back to the originals.
#[derive(Debug, Clone)]
pub struct Submatrix {
    pub matrix: Matrix,
    /// `row_origin[i-1]` is the original row index of local row `i`.
    pub row_origin: Vec<usize>,
    /// `col_origin[j-1]` is the original column index of local column `j`.
    pub col_origin: Vec<usize>,
}
