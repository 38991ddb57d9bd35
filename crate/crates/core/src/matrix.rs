//! Packed storage for symmetric matrices with a zero diagonal.
//!
//! Only the strict upper triangle is stored, row by row: entry `(i, j)` with
//! `i < j` lives at `i*n - i*(i+1)/2 + (j - i - 1)`. The diagonal is always
//! zero and never stored.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when symmetrizing dense input.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Number of strict upper-triangle entries of an `n x n` matrix.
#[inline]
pub const fn packed_len(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

#[inline]
fn row_offset(i: usize, n: usize) -> usize {
    i * n - i * (i + 1) / 2
}

/// Flat index of the pair `(i, j)`, `i < j < n`.
pub fn pack_index(i: usize, j: usize, n: usize) -> Result<usize> {
    if i >= j || j >= n {
        return Err(Error::Index { i, j, n });
    }
    Ok(row_offset(i, n) + (j - i - 1))
}

/// Inverse of [`pack_index`].
pub fn unpack_index(k: usize, n: usize) -> Result<(usize, usize)> {
    if k >= packed_len(n) {
        return Err(Error::Index { i: k, j: k, n });
    }
    // Rows shrink by one each step; a linear scan over rows is fine for the
    // sizes we handle and keeps the arithmetic exact.
    let mut i = 0;
    let mut start = 0;
    loop {
        let len = n - 1 - i;
        if k < start + len {
            return Ok((i, i + 1 + (k - start)));
        }
        start += len;
        i += 1;
    }
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    n: usize,
    values: Vec<f64>,
}

impl fmt::Debug for SymmetricMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricMatrix")
            .field("n", &self.n)
            .field("len", &self.values.len())
            .finish()
    }
}

impl SymmetricMatrix {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension { n, min: 2 });
        }
        if values.len() != packed_len(n) {
            return Err(Error::Length {
                expected: packed_len(n),
                got: values.len(),
            });
        }
        Ok(Self { n, values })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension { n, min: 2 });
        }
        let mut values = Vec::with_capacity(packed_len(n));
        for i in 0..n {
            for j in i + 1..n {
                values.push(f(i, j));
            }
        }
        Ok(Self { n, values })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored off-diagonal entries, `n(n-1)/2`.
    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Entry `(i, j)` for any `i, j < n`; the diagonal reads as zero.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.n, "index out of bounds");
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.values[row_offset(i, self.n) + (j - i - 1)],
            std::cmp::Ordering::Greater => self.values[row_offset(j, self.n) + (i - j - 1)],
        }
    }

    /// Stored entries `(i, i+1), ..., (i, n-1)`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let start = row_offset(i, self.n);
        &self.values[start..start + (self.n - 1 - i)]
    }

    /// Applies `f` to every off-diagonal entry.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Relabels nodes so that node `i` of the result is node `perm[i]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Length {
                expected: self.n,
                got: perm.len(),
            });
        }
        Self::from_fn(self.n, |i, j| self.get(perm[i], perm[j]))
    }

    /// `y = M x`, accumulated in a fixed order.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        y.fill(0.0);
        let mut start = 0;
        for i in 0..n - 1 {
            let len = n - 1 - i;
            let row = &self.values[start..start + len];
            start += len;
            let xi = x[i];
            let tail_x = &x[i + 1..];
            let tail_y = &mut y[i + 1..];
            let mut acc = 0.0;
            for ((&a, &xj), yj) in row.iter().zip(tail_x).zip(tail_y.iter_mut()) {
                acc += a * xj;
                *yj += a * xi;
            }
            y[i] += acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// Sum of all `n^2` entries (each off-diagonal pair counted twice).
    pub fn total_sum(&self) -> f64 {
        2.0 * self.values.iter().sum::<f64>()
    }

    pub fn frobenius_norm(&self) -> f64 {
        (2.0 * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Row-major dense copy with explicit zero diagonal.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                let v = self.values[k];
                out[i * n + j] = v;
                out[j * n + i] = v;
                k += 1;
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }
}

/// `E(R) = (J - I)/2`, the mean of a rank matrix under the null.
pub fn expectation_matrix(n: usize) -> Result<SymmetricMatrix> {
    if n < 2 {
        return Err(Error::Dimension { n, min: 2 });
    }
    SymmetricMatrix::new(n, vec![0.5; packed_len(n)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixFormat {
    /// `n` rows of `n` comma-separated reals.
    DenseCsv,
    /// A line holding `n`, then `n(n-1)/2` whitespace-separated reals in pack order.
    UpperTriangle,
    /// Lines `i j w`, 0-indexed, one per unordered pair.
    EdgeList,
}

impl FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense-csv" | "csv" => Ok(Self::DenseCsv),
            "upper-triangle-text" | "upper" => Ok(Self::UpperTriangle),
            "weighted-edge-list" | "edges" => Ok(Self::EdgeList),
            other => Err(Error::Parameter(format!("unknown matrix format '{other}'"))),
        }
    }
}

impl fmt::Display for MatrixFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::DenseCsv => "dense-csv",
            Self::UpperTriangle => "upper-triangle-text",
            Self::EdgeList => "weighted-edge-list",
        })
    }
}

fn parse_real(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("'{}' is not a real number", tok.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite value '{}'", tok.trim()),
        });
    }
    Ok(v)
}

fn parse_node(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("'{tok}' is not a node index"),
    })
}

pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<SymmetricMatrix> {
    let file = File::open(path)?;
    read_matrix(BufReader::new(file), format)
}

pub fn save_matrix(
    m: &SymmetricMatrix,
    path: impl AsRef<Path>,
    format: MatrixFormat,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(m, &mut w, format)?;
    w.flush()?;
    Ok(())
}

pub fn read_matrix<R: BufRead>(reader: R, format: MatrixFormat) -> Result<SymmetricMatrix> {
    match format {
        MatrixFormat::DenseCsv => read_dense_csv(reader),
        MatrixFormat::UpperTriangle => read_upper_triangle(reader),
        MatrixFormat::EdgeList => read_edge_list(reader),
    }
}

fn read_dense_csv<R: BufRead>(reader: R) -> Result<SymmetricMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let row = trimmed
            .split(',')
            .map(|tok| parse_real(tok, lineno + 1))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n < 2 {
        return Err(Error::Dimension { n, min: 2 });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected {n} columns, found {}", row.len()),
            });
        }
    }
    let mut values = Vec::with_capacity(packed_len(n));
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (rows[i][j], rows[j][i]);
            if a.to_bits() == b.to_bits() {
                values.push(a);
            } else if (a - b).abs() <= SYMMETRY_TOL * a.abs().max(1.0) {
                values.push(0.5 * (a + b));
            } else {
                return Err(Error::Asymmetric { i, j, a, b });
            }
        }
    }
    SymmetricMatrix::new(n, values)
}

fn read_upper_triangle<R: BufRead>(reader: R) -> Result<SymmetricMatrix> {
    let mut n: Option<usize> = None;
    let mut values = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        for tok in line.split_whitespace() {
            match n {
                None => {
                    let dim = tok.parse().map_err(|_| Error::Parse {
                        line: lineno + 1,
                        msg: format!("expected dimension, found '{tok}'"),
                    })?;
                    if dim < 2 {
                        return Err(Error::Dimension { n: dim, min: 2 });
                    }
                    values.reserve(packed_len(dim));
                    n = Some(dim);
                }
                Some(_) => values.push(parse_real(tok, lineno + 1)?),
            }
        }
    }
    let n = n.ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let expected = packed_len(n);
    if values.len() < expected {
        let (i, j) = unpack_index(values.len(), n)?;
        return Err(Error::MissingPair { i, j });
    }
    if values.len() > expected {
        return Err(Error::Length {
            expected,
            got: values.len(),
        });
    }
    SymmetricMatrix::new(n, values)
}

fn read_edge_list<R: BufRead>(reader: R) -> Result<SymmetricMatrix> {
    let mut edges = Vec::new();
    let mut max_node = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = lineno + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() || toks[0].starts_with('#') {
            continue;
        }
        if toks.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 'i j w', found {} fields", toks.len()),
            });
        }
        let i = parse_node(toks[0], line_no)?;
        let j = parse_node(toks[1], line_no)?;
        let w = parse_real(toks[2], line_no)?;
        max_node = max_node.max(i).max(j);
        edges.push((i, j, w));
    }
    let n = max_node + 1;
    if n < 2 {
        return Err(Error::Dimension { n, min: 2 });
    }
    let mut values = vec![f64::NAN; packed_len(n)];
    for (i, j, w) in edges {
        if i == j {
            continue;
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let k = pack_index(lo, hi, n)?;
        let slot = &mut values[k];
        if slot.is_nan() {
            *slot = w;
        } else if slot.to_bits() != w.to_bits() {
            return Err(Error::ConflictingPair { i: lo, j: hi });
        }
    }
    if let Some(k) = values.iter().position(|v| v.is_nan()) {
        let (i, j) = unpack_index(k, n)?;
        return Err(Error::MissingPair { i, j });
    }
    SymmetricMatrix::new(n, values)
}

pub fn write_matrix<W: Write>(m: &SymmetricMatrix, w: &mut W, format: MatrixFormat) -> Result<()> {
    let n = m.n();
    match format {
        MatrixFormat::DenseCsv => {
            let mut line = String::new();
            for i in 0..n {
                line.clear();
                for j in 0..n {
                    if j > 0 {
                        line.push(',');
                    }
                    line.push_str(&m.get(i, j).to_string());
                }
                writeln!(w, "{line}")?;
            }
        }
        MatrixFormat::UpperTriangle => {
            writeln!(w, "{n}")?;
            for i in 0..n - 1 {
                let row: Vec<String> = m.row(i).iter().map(f64::to_string).collect();
                writeln!(w, "{}", row.join(" "))?;
            }
        }
        MatrixFormat::EdgeList => {
            for i in 0..n {
                for (off, v) in m.row(i).iter().enumerate() {
                    writeln!(w, "{} {} {}", i, i + 1 + off, v)?;
                }
            }
        }
    }
    Ok(())
}
