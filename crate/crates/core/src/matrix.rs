//! Square matrices indexed by instrument label, and their text form.
//!
//! The text form is a delimiter-separated table whose first row and first
//! column hold the labels. Values are written with the shortest
//! representation that parses back to the same bits.

use std::io::{BufRead, Write};
use std::ops::Index;

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("{rows}x{cols} entries do not form a square matrix over {labels} labels")]
    Shape { rows: usize, cols: usize, labels: usize },
    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("invalid entry at ({i}, {j}): {value}")]
    InvalidEntry { i: usize, j: usize, value: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Row-major square matrix with one label per row/column.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix<S> {
    labels: Vec<String>,
    data: Vec<S>,
}

impl<S: Scalar> LabeledMatrix<S> {
    pub fn new(labels: Vec<String>, data: Vec<S>) -> Result<Self, MatrixError> {
        let n = labels.len();
        if data.len() != n * n {
            return Err(MatrixError::Shape { rows: data.len(), cols: 1, labels: n });
        }
        Ok(Self { labels, data })
    }

    pub fn from_fn(labels: Vec<String>, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let n = labels.len();
        let data = (0..n * n).map(|k| f(k / n, k % n)).collect();
        Self { labels, data }
    }

    pub fn zeros(labels: Vec<String>) -> Self {
        let n = labels.len();
        Self { labels, data: vec![S::zero(); n * n] }
    }

    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<S>>) -> Result<Self, MatrixError> {
        let n = labels.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(MatrixError::Shape { rows: rows.len(), cols: rows.first().map_or(0, Vec::len), labels: n });
        }
        Ok(Self { labels, data: rows.into_iter().flatten().collect() })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.len() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        let n = self.len();
        self.data[i * n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        let n = self.len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn entries(&self) -> &[S] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self { labels: self.labels.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn max_entry(&self) -> S {
        self.data.iter().copied().fold(S::neg_infinity(), S::max)
    }

    pub fn min_entry(&self) -> S {
        self.data.iter().copied().fold(S::infinity(), S::min)
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Reorders rows and columns so that new index `k` holds old index `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        Self::from_fn(labels, |i, j| self.get(perm[i], perm[j]))
    }

    pub fn write_text<W: Write>(&self, mut out: W, delimiter: char) -> Result<(), MatrixError> {
        write!(out, "label")?;
        for l in &self.labels {
            write!(out, "{delimiter}{l}")?;
        }
        writeln!(out)?;
        for (i, l) in self.labels.iter().enumerate() {
            write!(out, "{l}")?;
            for v in self.row(i) {
                write!(out, "{delimiter}{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_text(&self, delimiter: char) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf, delimiter).expect("writing to memory");
        String::from_utf8(buf).expect("labels are utf-8")
    }

    pub fn read_text<R: BufRead>(input: R, delimiter: char) -> Result<Self, MatrixError> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
            Ok(l) => !l.trim().is_empty(),
            Err(_) => true,
        });
        let (_, header) = lines.next().ok_or(MatrixError::Parse { line: 1, message: "empty input".into() })?;
        let labels: Vec<String> = header?.split(delimiter).skip(1).map(|s| s.trim().to_string()).collect();
        let n = labels.len();
        let mut data = Vec::with_capacity(n * n);
        let mut rows = 0;
        for (idx, line) in lines {
            let line = line?;
            let mut fields = line.split(delimiter);
            let label = fields.next().unwrap_or("").trim();
            if rows >= n || label != labels[rows] {
                return Err(MatrixError::Parse { line: idx + 1, message: format!("unexpected row label {label:?}") });
            }
            let before = data.len();
            for f in fields {
                let v = f
                    .trim()
                    .parse::<S>()
                    .map_err(|_| MatrixError::Parse { line: idx + 1, message: format!("{f:?} is not a number") })?;
                data.push(v);
            }
            if data.len() - before != n {
                return Err(MatrixError::Parse { line: idx + 1, message: format!("expected {n} values") });
            }
            rows += 1;
        }
        if rows != n {
            return Err(MatrixError::Shape { rows, cols: n, labels: n });
        }
        Ok(Self { labels, data })
    }
}

impl<S: Scalar> Index<(usize, usize)> for LabeledMatrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.labels.len() + j]
    }
}

/// Symmetric, zero-diagonal, nonnegative matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<S = f64>(LabeledMatrix<S>);

impl<S: Scalar> DistanceMatrix<S> {
    pub fn new(m: LabeledMatrix<S>) -> Result<Self, MatrixError> {
        let n = m.len();
        for i in 0..n {
            for j in 0..n {
                let v = m.get(i, j);
                let bad = if i == j { v != S::zero() } else { v < S::zero() || !v.is_finite() };
                if bad {
                    return Err(MatrixError::InvalidEntry { i, j, value: v.to_string() });
                }
                if j < i && v != m.get(j, i) {
                    return Err(MatrixError::NotSymmetric { i, j });
                }
            }
        }
        Ok(Self(m))
    }

    /// Builds the matrix from a pairwise function evaluated once per unordered
    /// pair `i < j`.
    pub fn from_pairs<E>(labels: Vec<String>, mut dist: impl FnMut(usize, usize) -> Result<S, E>) -> Result<Self, E> {
        let n = labels.len();
        let mut m = LabeledMatrix::zeros(labels);
        for i in 0..n {
            for j in i + 1..n {
                let v = dist(i, j)?;
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &LabeledMatrix<S> {
        &self.0
    }

    pub fn into_matrix(self) -> LabeledMatrix<S> {
        self.0
    }

    pub fn labels(&self) -> &[String] {
        self.0.labels()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.0.get(i, j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("L{i}")).collect()
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let m = LabeledMatrix::from_fn(labels(3), |i, j| if i == j { 0.0 } else { 0.1 / (i + j) as f64 });
        let text = m.to_text(',');
        assert!(text.starts_with("label,L0,L1,L2\nL0,0,"));
        let back = LabeledMatrix::<f64>::read_text(text.as_bytes(), ',').unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn distance_matrix_rejects_asymmetry_and_diagonal() {
        let asym = LabeledMatrix::from_rows(labels(2), vec![vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert!(matches!(DistanceMatrix::new(asym), Err(MatrixError::NotSymmetric { .. })));
        let diag = LabeledMatrix::from_rows(labels(2), vec![vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(DistanceMatrix::new(diag).is_err());
        let neg = LabeledMatrix::from_rows(labels(2), vec![vec![0.0, -1.0], vec![-1.0, 0.0]]).unwrap();
        assert!(DistanceMatrix::new(neg).is_err());
    }

    #[test]
    fn ragged_text_is_rejected() {
        let text = "label,A,B\nA,0,1\nB,1\n";
        assert!(LabeledMatrix::<f64>::read_text(text.as_bytes(), ',').is_err());
    }
}
