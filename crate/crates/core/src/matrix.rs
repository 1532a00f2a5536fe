//! Dense square matrices indexed by (agent, position).
//!
//! Positions are 0-based throughout the crate: column `k` holds the value for
//! "position k+1" or "top k+1", depending on the matrix.

use std::fmt::Write as _;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "square matrix row",
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1)).take(self.n)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self[(i, j)]).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &SquareMatrix) -> f64 {
        assert_eq!(self.n, other.n, "matrix dimensions differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// `self * a + other * (1 - a)`.
    pub fn lerp(&self, other: &SquareMatrix, a: f64) -> Self {
        assert_eq!(self.n, other.n, "matrix dimensions differ");
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + (1.0 - a) * y)
                .collect(),
        }
    }

    /// CSV with a `k=1,...,k=n` header and one row per agent. Values use the
    /// shortest representation that parses back to the same `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.n).map(|k| format!("k={k}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in self.rows() {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: "<csv>".into(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty matrix file".into()))?;
        let n = header.split(',').count();
        let mut rows = Vec::with_capacity(n);
        for (idx, line) in lines {
            let row = line
                .split(',')
                .map(|cell| {
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|e| parse_err(idx + 1, format!("bad number `{cell}`: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != n {
                return Err(parse_err(
                    idx + 1,
                    format!("expected {n} columns, found {}", row.len()),
                ));
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(parse_err(
                text.lines().count(),
                format!("expected {n} agent rows, found {}", rows.len()),
            ));
        }
        Self::from_rows(&rows)
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let m = SquareMatrix::from_rows(&[vec![1.0 / 3.0, 2.0 / 3.0], vec![0.1, 0.9]]).unwrap();
        let text = m.to_csv();
        assert!(text.starts_with("k=1,k=2\n"));
        assert_eq!(SquareMatrix::from_csv(&text).unwrap(), m);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        assert!(SquareMatrix::from_csv("k=1,k=2\n1,0\n0\n").is_err());
        assert!(SquareMatrix::from_csv("").is_err());
    }
}
