//! Spectrally synthesized test operators: `A = V·diag(λ)·V^H` for a chosen
//! unitary basis `V` and a prescribed eigenvalue list.
//!
//! Three bases with different cost/field trade-offs:
//! * [`SpectralDense`] — an explicit orthonormal matrix (e.g. from
//!   [`random_orthonormal_basis`]). O(n²p) per apply; the oracle-friendly
//!   default at small `n`, and the only one that works for arbitrary `V`.
//! * [`SpectralCosine`] — the orthonormal type-II cosine transform basis,
//!   real field, O(n log n · p) per apply.
//! * [`SpectralFourier`] — the unitary discrete Fourier basis, complex
//!   field, O(n log n · p) per apply.
//!
//! Constructors validate the eigenvalue list (non-increasing, nonnegative)
//! and, in debug builds, probe the basis for orthonormality on random
//! vectors.

use std::sync::Arc;

use num_complex::Complex64;
use rustdct::DctPlanner;
use rustfft::{Fft, FftPlanner};

use super::{HermitianOp, OpError, BASIS_ORTHO_TOL};
use crate::mat::Mat;
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

fn validate_spectrum(lambda: &[f64]) -> Result<(), OpError> {
    for (i, &v) in lambda.iter().enumerate() {
        if v < 0.0 || v.is_nan() || (i > 0 && v > lambda[i - 1]) {
            return Err(OpError::SpectrumInvalid { index: i, value: v });
        }
    }
    Ok(())
}

/// Random orthonormal basis: a seeded normal matrix pushed through modified
/// Gram–Schmidt with one re-orthogonalization pass ("twice is enough").
pub fn random_orthonormal_basis<S: Scalar>(n: usize, seed: u64) -> Mat<S> {
    let mut rng = SplitMix64::new(seed);
    let mut q = Mat::<S>::random_normal(n, n, 1.0, &mut rng);
    for j in 0..n {
        for _pass in 0..2 {
            for i in 0..j {
                // coeff = q_i^H q_j
                let mut coeff = S::ZERO;
                for r in 0..n {
                    coeff += q[(r, i)].conj() * q[(r, j)];
                }
                for r in 0..n {
                    let qri = q[(r, i)];
                    q[(r, j)] -= qri * coeff;
                }
            }
        }
        let mut norm_sq = 0.0;
        for r in 0..n {
            norm_sq += q[(r, j)].abs_sq();
        }
        let inv = 1.0 / norm_sq.sqrt();
        for r in 0..n {
            q[(r, j)] = q[(r, j)].scale(inv);
        }
    }
    q
}

/// `A = Q·diag(λ)·Q^H` with an explicit stored basis.
pub struct SpectralDense<S> {
    q: Mat<S>,
    lambda: Vec<f64>,
}

impl<S: Scalar> SpectralDense<S> {
    pub fn new(q: Mat<S>, lambda: Vec<f64>) -> Result<Self, OpError> {
        assert_eq!(q.rows(), q.cols(), "basis must be square");
        assert_eq!(q.rows(), lambda.len(), "basis/spectrum dimension mismatch");
        validate_spectrum(&lambda)?;
        let op = Self { q, lambda };
        op.debug_orthonormality_probe()?;
        Ok(op)
    }

    fn debug_orthonormality_probe(&self) -> Result<(), OpError> {
        if !cfg!(debug_assertions) {
            return Ok(());
        }
        let n = self.q.rows();
        let mut rng = SplitMix64::new(0x0b45);
        for _ in 0..3 {
            let u = Mat::<S>::random_normal(n, 1, 1.0, &mut rng);
            let back = self.q.times(&self.q.adjoint_times(&u));
            let mut diff = back;
            diff.sub_assign_mat(&u);
            let defect = diff.norm_fro() / u.norm_fro().max(f64::MIN_POSITIVE);
            if defect > BASIS_ORTHO_TOL {
                return Err(OpError::BasisNotOrthonormal {
                    defect,
                    limit: BASIS_ORTHO_TOL,
                });
            }
        }
        Ok(())
    }
}

impl<S: Scalar> HermitianOp<S> for SpectralDense<S> {
    fn dim(&self) -> usize {
        self.q.rows()
    }

    fn apply(&self, x: &Mat<S>) -> Result<Mat<S>, OpError> {
        assert_eq!(x.rows(), self.q.rows(), "operator/block dimension mismatch");
        let mut coeffs = self.q.adjoint_times(x);
        for (k, &l) in self.lambda.iter().enumerate() {
            for v in coeffs.row_mut(k) {
                *v = v.scale(l);
            }
        }
        Ok(self.q.times(&coeffs))
    }

    fn spectrum(&self) -> Option<Vec<f64>> {
        Some(self.lambda.clone())
    }
}

/// `A = C^T·diag(λ)·C` where `C` is the orthonormal type-II cosine
/// transform. With the library's unnormalized kernels `D2`/`D3` this
/// collapses to `A·x = D3((2/n)·λ ∘ D2·x)` columnwise.
pub struct SpectralCosine {
    n: usize,
    lambda: Vec<f64>,
    plan: Arc<dyn rustdct::TransformType2And3<f64>>,
}

impl SpectralCosine {
    pub fn new(n: usize, lambda: Vec<f64>) -> Result<Self, OpError> {
        assert_eq!(n, lambda.len(), "basis/spectrum dimension mismatch");
        validate_spectrum(&lambda)?;
        let plan = DctPlanner::new().plan_dct2(n);
        Ok(Self { n, lambda, plan })
    }
}

impl HermitianOp<f64> for SpectralCosine {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &Mat<f64>) -> Result<Mat<f64>, OpError> {
        assert_eq!(x.rows(), self.n, "operator/block dimension mismatch");
        let mut out = Mat::zeros(self.n, x.cols());
        let mut buf = vec![0.0; self.n];
        let scale = 2.0 / self.n as f64;
        for j in 0..x.cols() {
            x.col_to_buf(j, &mut buf);
            self.plan.process_dct2(&mut buf);
            for (b, &l) in buf.iter_mut().zip(&self.lambda) {
                *b *= scale * l;
            }
            self.plan.process_dct3(&mut buf);
            out.set_col(j, &buf);
        }
        Ok(out)
    }

    fn spectrum(&self) -> Option<Vec<f64>> {
        Some(self.lambda.clone())
    }
}

/// `A = U^H·diag(λ)·U` where `U` is the unitary DFT. With unnormalized
/// transforms: `A·x = ifft(λ ∘ fft(x))/n` columnwise. Complex field.
pub struct SpectralFourier {
    n: usize,
    lambda: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl SpectralFourier {
    pub fn new(n: usize, lambda: Vec<f64>) -> Result<Self, OpError> {
        assert_eq!(n, lambda.len(), "basis/spectrum dimension mismatch");
        validate_spectrum(&lambda)?;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Self { n, lambda, fwd, inv })
    }
}

impl HermitianOp<Complex64> for SpectralFourier {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &Mat<Complex64>) -> Result<Mat<Complex64>, OpError> {
        assert_eq!(x.rows(), self.n, "operator/block dimension mismatch");
        let mut out = Mat::zeros(self.n, x.cols());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        let inv_n = 1.0 / self.n as f64;
        for j in 0..x.cols() {
            x.col_to_buf(j, &mut buf);
            self.fwd.process(&mut buf);
            for (b, &l) in buf.iter_mut().zip(&self.lambda) {
                *b = b.scale(l * inv_n);
            }
            self.inv.process(&mut buf);
            out.set_col(j, &buf);
        }
        Ok(out)
    }

    fn spectrum(&self) -> Option<Vec<f64>> {
        Some(self.lambda.clone())
    }
}
