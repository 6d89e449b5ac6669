//! Dense square matrices of `f64`, stored row-major.

use std::fmt;
use std::ops::{Index, IndexMut};

/// Absolute tolerance for floating comparisons of distances.
pub const TOL: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Matrix with `value` off the diagonal and zeros on it.
    pub fn off_diagonal(n: usize, value: f64) -> Self {
        let mut m = Self {
            n,
            data: vec![value; n * n],
        };
        for i in 0..n {
            m[(i, i)] = 0.0;
        }
        m
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

    /// Builds a matrix from nested rows. Returns `None` when the rows are
    /// not square.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Option<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            let row = row.as_ref();
            if row.len() != n {
                return None;
            }
            data.extend_from_slice(row);
        }
        Some(Self { n, data })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1)).take(self.n)
    }

    /// Ordered pairs `(i, j)` with `i != j`, row-major.
    pub fn off_diagonal_pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Largest absolute entrywise difference.
    pub fn linf_distance(&self, other: &Matrix) -> f64 {
        assert_eq!(self.n, other.n, "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// True when every entry is `<=` the matching entry of `other` plus `tol`.
    pub fn le_within(&self, other: &Matrix, tol: f64) -> bool {
        self.n == other.n && self.data.iter().zip(&other.data).all(|(a, b)| *a <= *b + tol)
    }

    /// Copy extended by one trailing row and column filled with `fill`
    /// (diagonal entry zero).
    pub fn grown(&self, fill: f64) -> Self {
        let n = self.n + 1;
        Self::from_fn(n, |i, j| {
            if i == j {
                0.0
            } else if i < self.n && j < self.n {
                self.get(i, j)
            } else {
                fill
            }
        })
    }

    /// Leading `m x m` block.
    pub fn prefix(&self, m: usize) -> Self {
        assert!(m <= self.n);
        Self::from_fn(m, |i, j| self.get(i, j))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix({}x{}) [", self.n, self.n)?;
        for row in self.rows() {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}
