//! Matrix-free Hermitian operators.
//!
//! The solvers only ever see an operator through [`HermitianOp`]: a square
//! self-adjoint map applied to tall `n×p` blocks. Concrete operators —
//! discretized Laplacians, spectrally synthesized test matrices, dense
//! conveniences, and shift wrappers — live in the submodules and never
//! materialize an `n×n` array unless explicitly asked to via
//! [`materialize`].
//!
//! Operators with *row-local* structure (each output row depends on O(1)
//! input rows) additionally expose row-restricted application, which is
//! what gives the cyclic coordinate solver its dimension-independent
//! iteration cost.

mod dense;
mod laplacian;
mod shift;
mod spectral;
mod spectrum;

use std::sync::Arc;

pub use dense::{read_coordinate_file, DenseOp};
pub use laplacian::{Laplacian1d, Laplacian2d};
pub use shift::{NegativeShift, ShiftInvert};
pub use spectral::{random_orthonormal_basis, SpectralCosine, SpectralDense, SpectralFourier};
pub use spectrum::{generate_spectrum, SpectrumKind};

use crate::mat::Mat;
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

/// Relative Hermitian-defect ceiling for dense inputs.
pub const HERMITIAN_DEFECT_TOL: f64 = 1e-12;
/// Positive-semidefiniteness probe floor: `Re⟨u, Au⟩ ≥ −PSD_PROBE_TOL·‖u‖²`.
pub const PSD_PROBE_TOL: f64 = 1e-10;
/// Relative orthonormality-defect ceiling for synthesized bases.
pub const BASIS_ORTHO_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum OpError {
    #[error("operator does not support row-restricted application")]
    RowApplyUnsupported,
    #[error(
        "inner conjugate-gradient solve stalled: relative residual {residual:.3e} still above {tol:.3e} after {iters} iterations"
    )]
    InnerSolveDiverged { residual: f64, tol: f64, iters: usize },
    #[error("matrix is not Hermitian: relative defect {defect:.3e} exceeds {limit:.3e}")]
    NotHermitian { defect: f64, limit: f64 },
    #[error("operator failed the positive-semidefiniteness probe: Re⟨u,Au⟩ = {value:.3e} with ‖u‖ = 1")]
    NotPositiveSemidefinite { value: f64 },
    #[error("basis failed the orthonormality probe: relative defect {defect:.3e} exceeds {limit:.3e}")]
    BasisNotOrthonormal { defect: f64, limit: f64 },
    #[error("eigenvalue list must be non-increasing and nonnegative; violated at index {index} (value {value})")]
    SpectrumInvalid { index: usize, value: f64 },
    #[error("rank {r} exceeds dimension {n}")]
    RankExceedsDimension { r: usize, n: usize },
    #[error("coordinate file {path}: {message}")]
    CoordinateFile { path: String, message: String },
}

/// A Hermitian (self-adjoint) positive-semidefinite linear map on `F^n`,
/// applied blockwise to `n×p` matrices.
///
/// Contract for implementors:
/// * `apply` must be self-adjoint (`Re⟨Au, v⟩ = Re⟨u, Av⟩`) and
///   deterministic — repeated application to the same block yields
///   bit-identical output.
/// * All `apply*` methods panic on a row-count mismatch; that is a caller
///   bug, not a recoverable condition.
/// * `apply_rows(x, rows)` returns the selected rows of `A·x`, and
///   `apply_scattered_rows(support, vals, rows)` the selected rows of `A·z`
///   where `z` is zero outside `support` and holds `vals` on it. Both must
///   match the corresponding rows of a full `apply` (same row arithmetic).
/// * `spectrum`, when provided, is the complete eigenvalue list in
///   non-increasing order.
pub trait HermitianOp<S: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &Mat<S>) -> Result<Mat<S>, OpError>;

    fn apply_rows(&self, _x: &Mat<S>, _rows: &[usize]) -> Result<Mat<S>, OpError> {
        Err(OpError::RowApplyUnsupported)
    }

    fn apply_scattered_rows(
        &self,
        _support: &[usize],
        _vals: &Mat<S>,
        _rows: &[usize],
    ) -> Result<Mat<S>, OpError> {
        Err(OpError::RowApplyUnsupported)
    }

    fn supports_row_apply(&self) -> bool {
        false
    }

    /// Full spectrum in non-increasing order, when known in closed form.
    fn spectrum(&self) -> Option<Vec<f64>> {
        None
    }

    /// `‖A‖_F²` when known; lets reports convert the computable part of the
    /// objective into the true residual norm.
    fn frob_norm_sq(&self) -> Option<f64> {
        self.spectrum().map(|s| s.iter().map(|&l| l * l).sum())
    }
}

macro_rules! delegate_hermitian_op {
    ($wrapper:ty) => {
        impl<S: Scalar, T: HermitianOp<S> + ?Sized> HermitianOp<S> for $wrapper {
            fn dim(&self) -> usize {
                (**self).dim()
            }
            fn apply(&self, x: &Mat<S>) -> Result<Mat<S>, OpError> {
                (**self).apply(x)
            }
            fn apply_rows(&self, x: &Mat<S>, rows: &[usize]) -> Result<Mat<S>, OpError> {
                (**self).apply_rows(x, rows)
            }
            fn apply_scattered_rows(
                &self,
                support: &[usize],
                vals: &Mat<S>,
                rows: &[usize],
            ) -> Result<Mat<S>, OpError> {
                (**self).apply_scattered_rows(support, vals, rows)
            }
            fn supports_row_apply(&self) -> bool {
                (**self).supports_row_apply()
            }
            fn spectrum(&self) -> Option<Vec<f64>> {
                (**self).spectrum()
            }
            fn frob_norm_sq(&self) -> Option<f64> {
                (**self).frob_norm_sq()
            }
        }
    };
}

delegate_hermitian_op!(Box<T>);
delegate_hermitian_op!(Arc<T>);
delegate_hermitian_op!(&T);

/// Dense `n×n` image of the operator (applies to the identity block).
/// Intended for oracles and small-`n` reports only.
pub fn materialize<S: Scalar>(op: &dyn HermitianOp<S>) -> Result<Mat<S>, OpError> {
    op.apply(&Mat::identity(op.dim()))
}

/// Frobenius-relative Hermitian-defect validation, shared by the dense
/// constructor and the dense reference decomposition.
pub fn check_hermitian<S: Scalar>(a: &Mat<S>) -> Result<(), OpError> {
    assert_eq!(a.rows(), a.cols(), "hermitian check needs a square matrix");
    let mut defect_sq = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            defect_sq += (a[(i, j)] - a[(j, i)].conj()).abs_sq();
        }
    }
    let defect = defect_sq.sqrt();
    let scale = a.norm_fro().max(f64::MIN_POSITIVE);
    if defect > HERMITIAN_DEFECT_TOL * scale {
        return Err(OpError::NotHermitian {
            defect: defect / scale,
            limit: HERMITIAN_DEFECT_TOL,
        });
    }
    Ok(())
}

/// Largest-eigenvalue estimate by power iteration with Rayleigh quotients:
/// at most 50 applies, stopping early once successive estimates agree to
/// relative 1e-6. Deterministic in `seed`.
pub fn estimate_lambda_max<S: Scalar>(
    op: &dyn HermitianOp<S>,
    seed: u64,
) -> Result<f64, OpError> {
    const MAX_ITERS: usize = 50;
    const REL_TOL: f64 = 1e-6;
    let mut rng = SplitMix64::new(seed);
    let mut v = Mat::<S>::random_normal(op.dim(), 1, 1.0, &mut rng);
    let norm = v.norm_fro();
    if norm == 0.0 {
        return Ok(0.0);
    }
    v.scale_mut(1.0 / norm);
    let mut estimate = 0.0;
    for iter in 0..MAX_ITERS {
        let w = op.apply(&v)?;
        let rayleigh = real_dot(&v, &w);
        let w_norm = w.norm_fro();
        if w_norm == 0.0 {
            return Ok(0.0);
        }
        if iter > 0 && (rayleigh - estimate).abs() <= REL_TOL * rayleigh.abs() {
            return Ok(rayleigh);
        }
        estimate = rayleigh;
        v = w.scaled(1.0 / w_norm);
    }
    Ok(estimate)
}

pub(crate) fn real_dot<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> f64 {
    crate::geometry::real_inner(a, b)
}

/// Shared debug-build construction probe: self-adjointness on the given
/// operator is structural, but positive-semidefiniteness of user-provided
/// data is not — sample it.
pub(crate) fn debug_psd_probe<S: Scalar>(op: &dyn HermitianOp<S>, seed: u64) -> Result<(), OpError> {
    if !cfg!(debug_assertions) {
        return Ok(());
    }
    let mut rng = SplitMix64::new(seed);
    for _ in 0..3 {
        let mut u = Mat::<S>::random_normal(op.dim(), 1, 1.0, &mut rng);
        let norm = u.norm_fro();
        if norm == 0.0 {
            continue;
        }
        u.scale_mut(1.0 / norm);
        let au = op.apply(&u)?;
        let quad = real_dot(&u, &au);
        if quad < -PSD_PROBE_TOL {
            return Err(OpError::NotPositiveSemidefinite { value: quad });
        }
    }
    Ok(())
}
