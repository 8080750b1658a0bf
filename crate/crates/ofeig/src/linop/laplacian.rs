//! Dirichlet Laplacians on the unit interval and unit square.
//!
//! One dimension: `A = K/Δx²` with `K = tridiag(−1, 2, −1)` on `m` interior
//! points, `Δx = 1/(m+1)`. Two dimensions: the Kronecker sum
//! `A = K⊗I/Δx² + I⊗K/Δy²` on an `m×m` interior grid with `Δx = Δy`,
//! applied stencil-wise — the `m²×m²` matrix is never formed. Grid points
//! are flattened column-major: point `(r, c)` maps to index `c·m + r`.
//!
//! Both operators are banded, so row-restricted application costs O(1) per
//! row; `apply` iterates the same row kernel over all rows, which keeps the
//! full and restricted paths bit-identical.

use std::f64::consts::PI;

use super::{HermitianOp, OpError};
use crate::mat::Mat;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Laplacian1d {
    m: usize,
    inv_h2: f64,
}

impl Laplacian1d {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "laplacian needs at least one interior point");
        // (m+1)² computed in integers so the stencil entries are exact.
        Self { m, inv_h2: ((m + 1) * (m + 1)) as f64 }
    }

    /// Row `i` of `A·z`, with `z` presented by a row accessor (`None` means
    /// the row is structurally zero).
    fn row_into<'a, S: Scalar>(
        &self,
        i: usize,
        get: &impl Fn(usize) -> Option<&'a [S]>,
        out: &mut [S],
    ) {
        out.fill(S::ZERO);
        accumulate(out, 2.0 * self.inv_h2, get(i));
        if i > 0 {
            accumulate(out, -self.inv_h2, get(i - 1));
        }
        if i + 1 < self.m {
            accumulate(out, -self.inv_h2, get(i + 1));
        }
    }
}

impl<S: Scalar> HermitianOp<S> for Laplacian1d {
    fn dim(&self) -> usize {
        self.m
    }

    fn apply(&self, x: &Mat<S>) -> Result<Mat<S>, OpError> {
        let all: Vec<usize> = (0..self.m).collect();
        self.apply_rows(x, &all)
    }

    fn apply_rows(&self, x: &Mat<S>, rows: &[usize]) -> Result<Mat<S>, OpError> {
        assert_eq!(x.rows(), self.m, "operator/block dimension mismatch");
        let get = |j: usize| Some(x.row(j));
        let mut out = Mat::zeros(rows.len(), x.cols());
        for (k, &i) in rows.iter().enumerate() {
            self.row_into(i, &get, out.row_mut(k));
        }
        Ok(out)
    }

    fn apply_scattered_rows(
        &self,
        support: &[usize],
        vals: &Mat<S>,
        rows: &[usize],
    ) -> Result<Mat<S>, OpError> {
        assert_eq!(support.len(), vals.rows(), "support/values length mismatch");
        let get = |j: usize| support.iter().position(|&s| s == j).map(|k| vals.row(k));
        let mut out = Mat::zeros(rows.len(), vals.cols());
        for (k, &i) in rows.iter().enumerate() {
            self.row_into(i, &get, out.row_mut(k));
        }
        Ok(out)
    }

    fn supports_row_apply(&self) -> bool {
        true
    }

    fn spectrum(&self) -> Option<Vec<f64>> {
        let mut s: Vec<f64> = (1..=self.m)
            .map(|j| self.inv_h2 * (2.0 - 2.0 * (j as f64 * PI / (self.m + 1) as f64).cos()))
            .collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Some(s)
    }
}

#[derive(Debug, Clone)]
pub struct Laplacian2d {
    m: usize,
    inv_h2: f64,
}

impl Laplacian2d {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "laplacian needs at least one interior point");
        Self { m, inv_h2: ((m + 1) * (m + 1)) as f64 }
    }

    fn row_into<'a, S: Scalar>(
        &self,
        i: usize,
        get: &impl Fn(usize) -> Option<&'a [S]>,
        out: &mut [S],
    ) {
        let m = self.m;
        let n = m * m;
        let r = i % m; // row inside one grid column
        out.fill(S::ZERO);
        accumulate(out, 4.0 * self.inv_h2, get(i));
        if r > 0 {
            accumulate(out, -self.inv_h2, get(i - 1));
        }
        if r + 1 < m {
            accumulate(out, -self.inv_h2, get(i + 1));
        }
        if i >= m {
            accumulate(out, -self.inv_h2, get(i - m));
        }
        if i + m < n {
            accumulate(out, -self.inv_h2, get(i + m));
        }
    }
}

impl<S: Scalar> HermitianOp<S> for Laplacian2d {
    fn dim(&self) -> usize {
        self.m * self.m
    }

    fn apply(&self, x: &Mat<S>) -> Result<Mat<S>, OpError> {
        let all: Vec<usize> = (0..self.m * self.m).collect();
        self.apply_rows(x, &all)
    }

    fn apply_rows(&self, x: &Mat<S>, rows: &[usize]) -> Result<Mat<S>, OpError> {
        assert_eq!(x.rows(), self.m * self.m, "operator/block dimension mismatch");
        let get = |j: usize| Some(x.row(j));
        let mut out = Mat::zeros(rows.len(), x.cols());
        for (k, &i) in rows.iter().enumerate() {
            self.row_into(i, &get, out.row_mut(k));
        }
        Ok(out)
    }

    fn apply_scattered_rows(
        &self,
        support: &[usize],
        vals: &Mat<S>,
        rows: &[usize],
    ) -> Result<Mat<S>, OpError> {
        assert_eq!(support.len(), vals.rows(), "support/values length mismatch");
        let get = |j: usize| support.iter().position(|&s| s == j).map(|k| vals.row(k));
        let mut out = Mat::zeros(rows.len(), vals.cols());
        for (k, &i) in rows.iter().enumerate() {
            self.row_into(i, &get, out.row_mut(k));
        }
        Ok(out)
    }

    fn supports_row_apply(&self) -> bool {
        true
    }

    /// All `m²` values `(2 − 2cos(jπ/(m+1)) + 2 − 2cos(kπ/(m+1)))/Δx²`,
    /// sorted non-increasing.
    fn spectrum(&self) -> Option<Vec<f64>> {
        let m = self.m;
        let one_d: Vec<f64> = (1..=m)
            .map(|j| 2.0 - 2.0 * (j as f64 * PI / (m + 1) as f64).cos())
            .collect();
        let mut s = Vec::with_capacity(m * m);
        for a in &one_d {
            for b in &one_d {
                s.push(self.inv_h2 * (a + b));
            }
        }
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Some(s)
    }
}

fn accumulate<S: Scalar>(out: &mut [S], coeff: f64, row: Option<&[S]>) {
    if let Some(r) = row {
        for (o, v) in out.iter_mut().zip(r) {
            *o += v.scale(coeff);
        }
    }
}
