//! Dense operator convenience and a coordinate-list file reader.
//!
//! `DenseOp` exists for small reference problems and file-loaded matrices;
//! it stores the full `n×n` array and checks Hermitian-ness on
//! construction (plus a positive-semidefiniteness probe in debug builds).
//! It does expose row-restricted application — each output row is a full
//! dot product, so the coordinate solver is *correct* on dense operators,
//! merely not O(1) per iteration.

use std::path::Path;

use super::{check_hermitian, debug_psd_probe, HermitianOp, OpError};
use crate::mat::Mat;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct DenseOp<S> {
    a: Mat<S>,
}

impl<S: Scalar> DenseOp<S> {
    pub fn new(a: Mat<S>) -> Result<Self, OpError> {
        assert_eq!(a.rows(), a.cols(), "dense operator must be square");
        check_hermitian(&a)?;
        let op = Self { a };
        debug_psd_probe(&op, 0x01d5)?;
        Ok(op)
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.a
    }

    fn row_into(&self, i: usize, x: &Mat<S>, out: &mut [S]) {
        out.fill(S::ZERO);
        let arow = self.a.row(i);
        for (j, aij) in arow.iter().enumerate() {
            if aij.abs_sq() != 0.0 {
                for (o, v) in out.iter_mut().zip(x.row(j)) {
                    *o += *aij * *v;
                }
            }
        }
    }
}

impl<S: Scalar> HermitianOp<S> for DenseOp<S> {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn apply(&self, x: &Mat<S>) -> Result<Mat<S>, OpError> {
        let all: Vec<usize> = (0..self.a.rows()).collect();
        self.apply_rows(x, &all)
    }

    fn apply_rows(&self, x: &Mat<S>, rows: &[usize]) -> Result<Mat<S>, OpError> {
        assert_eq!(x.rows(), self.a.rows(), "operator/block dimension mismatch");
        let mut out = Mat::zeros(rows.len(), x.cols());
        for (k, &i) in rows.iter().enumerate() {
            self.row_into(i, x, out.row_mut(k));
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
        let mut out = Mat::zeros(rows.len(), vals.cols());
        for (k, &i) in rows.iter().enumerate() {
            let arow = self.a.row(i);
            let dst = out.row_mut(k);
            for (idx, &j) in support.iter().enumerate() {
                let aij = arow[j];
                if aij.abs_sq() != 0.0 {
                    for (o, v) in dst.iter_mut().zip(vals.row(idx)) {
                        *o += aij * *v;
                    }
                }
            }
        }
        Ok(out)
    }

    fn supports_row_apply(&self) -> bool {
        true
    }

    fn frob_norm_sq(&self) -> Option<f64> {
        Some(self.a.norm_fro_sq())
    }
}

/// Reads a real symmetric matrix from a plain coordinate-list text file.
///
/// Format (not a full Matrix Market parser — a convenience):
/// * `#`-prefixed lines and blank lines are ignored;
/// * the first data line is the dimension `n`;
/// * every following line is `i j value` with 1-based indices; the entry is
///   stored symmetrically (both `(i,j)` and `(j,i)`).
///
/// Listing the same unordered pair twice with different values is an error.
pub fn read_coordinate_file(path: &Path) -> Result<DenseOp<f64>, OpError> {
    let err = |message: String| OpError::CoordinateFile {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(idx, l)| (idx + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (_, first) = lines.next().ok_or_else(|| err("empty file".into()))?;
    let n: usize = first
        .parse()
        .map_err(|_| err(format!("bad dimension line: {first:?}")))?;
    if n == 0 {
        return Err(err("dimension must be positive".into()));
    }

    let mut a = Mat::<f64>::zeros(n, n);
    let mut set = vec![false; n * n];
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(format!("line {line_no}: expected `i j value`, got {line:?}")));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| err(format!("line {line_no}: bad row index {:?}", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| err(format!("line {line_no}: bad column index {:?}", fields[1])))?;
        let v: f64 = fields[2]
            .parse()
            .map_err(|_| err(format!("line {line_no}: bad value {:?}", fields[2])))?;
        if i == 0 || j == 0 || i > n || j > n {
            return Err(err(format!("line {line_no}: index ({i}, {j}) outside 1..={n}")));
        }
        let (i, j) = (i - 1, j - 1);
        for (r, c) in [(i, j), (j, i)] {
            if set[r * n + c] && a[(r, c)] != v {
                return Err(err(format!(
                    "line {line_no}: entry ({}, {}) already set to {} (conflicts with {v})",
                    r + 1,
                    c + 1,
                    a[(r, c)]
                )));
            }
            a[(r, c)] = v;
            set[r * n + c] = true;
        }
    }
    DenseOp::new(a)
}
