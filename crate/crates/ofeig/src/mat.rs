//! Dense row-major blocks.
//!
//! The iterate `x` is a tall `n×p` block (`p` small), and everything the
//! solvers touch is either such a block or a small `p×p` square derived
//! from one. A plain contiguous `Vec` with explicit loops is deliberate:
//! the arithmetic path is fixed (no BLAS dispatch), which keeps runs
//! bit-reproducible, and row-major layout makes the row-restricted
//! operations of the coordinate solver contiguous.

use crate::rng::SplitMix64;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::ONE;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|row| row.len() == c),
            "ragged row lengths in from_rows"
        );
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// Entries i.i.d. normal with standard deviation `sd` (per field).
    pub fn random_normal(rows: usize, cols: usize, sd: f64, rng: &mut SplitMix64) -> Self {
        let data = (0..rows * cols)
            .map(|_| S::sample_normal(rng).scale(sd))
            .collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scale_mut(&mut self, t: f64) {
        for v in &mut self.data {
            *v = v.scale(t);
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut out = self.clone();
        out.scale_mut(t);
        out
    }

    /// `self += t·other` with a real coefficient.
    pub fn add_scaled(&mut self, t: f64, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b.scale(t);
        }
    }

    pub fn sub_assign_mat(&mut self, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= *b;
        }
    }

    /// `self^H · other` — the workhorse for Gram factors and small
    /// right-hand sides. Result is `self.cols × other.cols`.
    pub fn adjoint_times(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "adjoint_times: row mismatch");
        let mut out = Self::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let a = self.row(r);
            let b = other.row(r);
            for i in 0..self.cols {
                let ai = a[i].conj();
                let dst = out.row_mut(i);
                for (d, bj) in dst.iter_mut().zip(b) {
                    *d += ai * *bj;
                }
            }
        }
        out
    }

    /// `self · other` for a small square `other` (`p×q`).
    pub fn times(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "times: inner dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let a = self.row(r);
            let dst = out.row_mut(r);
            for (k, ak) in a.iter().enumerate() {
                let brow = other.row(k);
                for (d, b) in dst.iter_mut().zip(brow) {
                    *d += *ak * *b;
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn norm_fro_sq(&self) -> f64 {
        self.data.iter().map(|v| v.abs_sq()).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.norm_fro_sq().sqrt()
    }

    pub fn gather_rows(&self, rows: &[usize]) -> Self {
        let mut out = Self::zeros(rows.len(), self.cols);
        for (k, &r) in rows.iter().enumerate() {
            out.row_mut(k).copy_from_slice(self.row(r));
        }
        out
    }

    /// `self[rows[k], :] += t·vals[k, :]` — scatter-add onto a row subset.
    pub fn add_scaled_rows(&mut self, rows: &[usize], vals: &Self, t: f64) {
        assert_eq!(rows.len(), vals.rows);
        assert_eq!(self.cols, vals.cols);
        for (k, &r) in rows.iter().enumerate() {
            let dst = self.row_mut(r);
            for (d, v) in dst.iter_mut().zip(vals.row(k)) {
                *d += v.scale(t);
            }
        }
    }

    pub fn col_to_buf(&self, j: usize, buf: &mut [S]) {
        assert_eq!(buf.len(), self.rows);
        for (i, b) in buf.iter_mut().enumerate() {
            *b = self[(i, j)];
        }
    }

    pub fn set_col(&mut self, j: usize, buf: &[S]) {
        assert_eq!(buf.len(), self.rows);
        for (i, b) in buf.iter().enumerate() {
            self[(i, j)] = *b;
        }
    }

    /// Largest entrywise modulus of `self − other`; handy in tests and
    /// drift checks.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).abs())
            .fold(0.0, f64::max)
    }
}

impl<S: Scalar> std::ops::Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<S: Scalar> std::ops::IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}
