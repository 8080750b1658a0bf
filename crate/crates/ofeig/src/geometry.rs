//! Geometry of the rank-`p` factor space.
//!
//! The objective `f(x) = ½‖xxᴴ − A‖²_F` is invariant under `x ↦ xq` for
//! unitary `q`, so the search really happens on equivalence classes of
//! factors. At a full-rank `x` the directions splitting that symmetry are
//!
//! * vertical: `{xω : ωᴴ = −ω}` — motions inside the equivalence class;
//! * horizontal: their orthogonal complement `{z : xᴴz = zᴴx}` under the
//!   real inner product [`real_inner`].
//!
//! This module provides the Euclidean gradient (always horizontal at
//! gradient evaluations — a fact the solver exploits and the tests verify),
//! the horizontal/vertical splitting via a small Lyapunov solve in the
//! eigenbasis of the `p×p` Gram matrix `xᴴx`, and the retraction
//! `x + τ·η`.

use crate::jacobi::hermitian_eig;
use crate::linop::{HermitianOp, OpError};
use crate::mat::Mat;
use crate::scalar::Scalar;

/// Relative eigenvalue threshold below which the Gram matrix is reported
/// as nearly singular (the quotient geometry degenerates at rank-deficient
/// points).
pub const RANK_WARNING_REL: f64 = 1e-12;
/// Relative eigenvalue threshold below which the Lyapunov solve refuses to
/// divide (the splitting would be numerically meaningless).
const LYAPUNOV_MIN_REL: f64 = 1e-15;

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error(
        "gram matrix is numerically rank deficient (λ_min = {min:.3e}, λ_max = {max:.3e}); \
         the vertical/horizontal splitting is undefined at rank-deficient points"
    )]
    RankDeficientGram { min: f64, max: f64 },
}

/// Real inner product `⟨a, b⟩ = Re tr(aᴴ b)`, the metric under which the
/// vertical and horizontal spaces are orthogonal. Coincides with the usual
/// Frobenius inner product for real matrices.
pub fn real_inner<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> f64 {
    debug_assert_eq!(a.rows(), b.rows());
    debug_assert_eq!(a.cols(), b.cols());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x.conj() * *y).re())
        .sum()
}

/// Euclidean gradient together with the intermediates its computation
/// produces for free; callers reuse them for objective values and
/// projections.
pub struct EgradParts<S> {
    /// `∇f(x) = 2(x(xᴴx) − Ax)`.
    pub grad: Mat<S>,
    /// `A·x`.
    pub ax: Mat<S>,
    /// `xᴴx` (`p×p`, Hermitian positive semidefinite).
    pub gram: Mat<S>,
}

/// Gradient of `½‖xxᴴ − A‖²_F` at `x`, computed without ever forming
/// `xxᴴ`: one operator application plus `O(np²)` flops.
pub fn egrad<S: Scalar>(op: &dyn HermitianOp<S>, x: &Mat<S>) -> Result<Mat<S>, OpError> {
    Ok(egrad_with(op, x)?.grad)
}

/// [`egrad`] variant returning the reusable intermediates.
pub fn egrad_with<S: Scalar>(op: &dyn HermitianOp<S>, x: &Mat<S>) -> Result<EgradParts<S>, OpError> {
    let ax = op.apply(x)?;
    let gram = x.adjoint_times(x);
    let mut grad = x.times(&gram);
    grad.add_scaled(-1.0, &ax);
    grad.scale_mut(2.0);
    Ok(EgradParts { grad, ax, gram })
}

/// Eigendecomposition of a Gram matrix `xᴴx`, cached so several Lyapunov
/// solves at the same point share one factorization.
pub struct GramFactor<S> {
    evals: Vec<f64>,
    evecs: Mat<S>,
}

impl<S: Scalar> GramFactor<S> {
    pub fn new(gram: &Mat<S>) -> Self {
        let (evals, evecs) = hermitian_eig(gram, 1e-14, 30);
        Self { evals, evecs }
    }

    pub fn min_eval(&self) -> f64 {
        *self.evals.last().expect("gram matrix is at least 1×1")
    }

    pub fn max_eval(&self) -> f64 {
        self.evals[0]
    }

    /// True when the factor is close enough to rank-deficient that the
    /// quotient geometry (and hence any splitting computed here) is
    /// unreliable.
    pub fn near_rank_deficient(&self) -> bool {
        self.min_eval() <= RANK_WARNING_REL * self.max_eval()
    }

    /// Solve `ω·g + g·ω = e` for `ω`, where `g` is the factored Gram
    /// matrix. For skew-Hermitian `e` the solution is skew-Hermitian.
    ///
    /// In the eigenbasis `g = u·diag(λ)·uᴴ` the equation decouples:
    /// `(uᴴωu)_{ij} = (uᴴeu)_{ij} / (λ_i + λ_j)`.
    pub fn solve_lyapunov(&self, e: &Mat<S>) -> Result<Mat<S>, GeometryError> {
        let (min, max) = (self.min_eval(), self.max_eval());
        if !(min > LYAPUNOV_MIN_REL * max) || max <= 0.0 {
            return Err(GeometryError::RankDeficientGram { min, max });
        }
        let p = self.evals.len();
        let mut tilde = self.evecs.adjoint_times(&e.times(&self.evecs));
        for i in 0..p {
            for j in 0..p {
                let denom = self.evals[i] + self.evals[j];
                tilde[(i, j)] = tilde[(i, j)].scale(1.0 / denom);
            }
        }
        Ok(self.evecs.times(&tilde).times(&self.evecs.adjoint()))
    }
}

/// Result of splitting a tangent direction at `x` into horizontal and
/// vertical parts: `z = horizontal + x·omega` with `omegaᴴ = −omega`.
pub struct HorizontalSplit<S> {
    pub horizontal: Mat<S>,
    pub omega: Mat<S>,
}

/// Orthogonal projection onto the horizontal space at `x`, whose Gram
/// factorization the caller supplies. `omega` solves
/// `ω(xᴴx) + (xᴴx)ω = xᴴz − zᴴx`.
pub fn project_horizontal<S: Scalar>(
    x: &Mat<S>,
    gram: &GramFactor<S>,
    z: &Mat<S>,
) -> Result<HorizontalSplit<S>, GeometryError> {
    let xz = x.adjoint_times(z);
    let mut rhs = xz.adjoint();
    rhs.scale_mut(-1.0);
    let mut e = xz;
    e.add_scaled(1.0, &rhs); // e = xᴴz − zᴴx, skew-Hermitian
    let omega = gram.solve_lyapunov(&e)?;
    let mut horizontal = z.clone();
    horizontal.add_scaled(-1.0, &x.times(&omega));
    Ok(HorizontalSplit { horizontal, omega })
}

/// `‖xᴴz − zᴴx‖_F` — zero exactly when `z` is horizontal at `x`.
pub fn horizontality_defect<S: Scalar>(x: &Mat<S>, z: &Mat<S>) -> f64 {
    let xz = x.adjoint_times(z);
    let mut e = xz.clone();
    e.add_scaled(-1.0, &xz.adjoint());
    e.norm_fro()
}

/// The retraction: move from `x` along `η` with step `τ`. Plain addition —
/// the factor parametrization is linear, so no re-normalization is needed.
pub fn retract<S: Scalar>(x: &Mat<S>, eta: &Mat<S>, tau: f64) -> Mat<S> {
    let mut out = x.clone();
    out.add_scaled(tau, eta);
    out
}
