//! Reading eigenpairs off a converged factor, plus the dense reference
//! decomposition used for verification.
//!
//! A minimizing factor satisfies `x·xᴴ = Σᵢ λᵢ vᵢvᵢᴴ` over the top `p`
//! eigenpairs, but its columns are only determined up to a `p×p` unitary.
//! Diagonalizing the small Gram matrix `Θ = xᴴx = WᵀΛW` undoes that gauge:
//! the eigenvalues of `Θ` are the eigenvalue estimates and `x·wᵢ/√θᵢ` are
//! unit-norm eigenvector estimates. Everything here is `O(np² + p³)`.

use crate::jacobi;
use crate::linop::{check_hermitian, materialize, HermitianOp, OpError};
use crate::mat::Mat;
use crate::scalar::Scalar;

/// Gram eigenvalues below `θ_max·RANK_CUTOFF_REL` are reported as zero with
/// a zero vector: the factor carries no usable direction there.
pub const RANK_CUTOFF_REL: f64 = 1e-14;

/// Largest matrix the dense reference decomposition will accept.
pub const DENSE_ORACLE_LIMIT: usize = 2000;

/// Eigenvalue/eigenvector estimates, values non-increasing, vectors in the
/// matching columns. Vector phases are normalized (largest-modulus entry
/// real and positive) so equal subspaces compare elementwise.
#[derive(Debug, Clone)]
pub struct EigenPairs<S> {
    pub values: Vec<f64>,
    pub vectors: Mat<S>,
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("dense reference decomposition limited to n ≤ {limit}, got n = {n}")]
    DimensionTooLarge { n: usize, limit: usize },
    #[error(transparent)]
    Op(#[from] OpError),
}

/// Rotate each column so its largest-modulus entry is real and positive.
/// Ties take the first such entry; zero columns are left untouched.
pub fn phase_normalize_columns<S: Scalar>(m: &mut Mat<S>) {
    for j in 0..m.cols() {
        let mut best = 0usize;
        let mut best_sq = 0.0f64;
        for i in 0..m.rows() {
            let a = m[(i, j)].abs_sq();
            if a > best_sq {
                best_sq = a;
                best = i;
            }
        }
        if best_sq == 0.0 {
            continue;
        }
        // multiply by conj(z)/|z| (unit modulus) so entry `best` becomes |z|
        let z = m[(best, j)];
        let twist = z.conj().scale(1.0 / z.abs());
        for i in 0..m.rows() {
            let v = m[(i, j)];
            m[(i, j)] = v * twist;
        }
    }
}

/// Eigenpair estimates from a factor via its `p×p` Gram matrix.
pub fn extract_eigenpairs<S: Scalar>(x: &Mat<S>) -> EigenPairs<S> {
    let p = x.cols();
    let gram = x.adjoint_times(x);
    let (theta, w) = jacobi::hermitian_eig(&gram, 1e-14, 40);
    let theta_max = theta.first().copied().unwrap_or(0.0).max(0.0);

    let mut values = Vec::with_capacity(p);
    let mut vectors = Mat::<S>::zeros(x.rows(), p);
    for j in 0..p {
        if theta[j] <= theta_max * RANK_CUTOFF_REL {
            // degenerate direction: report a zero eigenvalue, no vector
            values.push(theta[j].max(0.0));
            continue;
        }
        values.push(theta[j]);
        let inv_root = 1.0 / theta[j].sqrt();
        for i in 0..x.rows() {
            let mut acc = S::ZERO;
            for k in 0..p {
                acc += x[(i, k)] * w[(k, j)];
            }
            vectors[(i, j)] = acc.scale(inv_root);
        }
    }
    phase_normalize_columns(&mut vectors);
    EigenPairs { values, vectors }
}

/// Dense reference decomposition: materializes the operator, validates it
/// is Hermitian (indefinite is fine — this diagnoses shifted operators
/// too), and runs the Jacobi kernel. Intentionally refuses large `n`; it
/// is a verification tool, not a solver.
pub fn dense_eig<S: Scalar>(op: &dyn HermitianOp<S>) -> Result<EigenPairs<S>, OracleError> {
    let n = op.dim();
    if n > DENSE_ORACLE_LIMIT {
        return Err(OracleError::DimensionTooLarge { n, limit: DENSE_ORACLE_LIMIT });
    }
    let m = materialize(op)?;
    check_hermitian(&m)?;
    let (values, mut vectors) = jacobi::hermitian_eig(&m, 1e-13, 60);
    phase_normalize_columns(&mut vectors);
    Ok(EigenPairs { values, vectors })
}

/// Accuracy of estimated pairs against the operator and a reference
/// spectrum (non-increasing, at least as long as `pairs.values`).
#[derive(Debug, Clone)]
pub struct ErrorReport {
    /// `‖A·v̂ − λ̂·v̂‖₂` per pair (0 for the zero vectors of degenerate
    /// directions).
    pub residual_norms: Vec<f64>,
    /// `|λ̂ − λ_ref| / max(|λ_ref|, 1)` per pair.
    pub value_rel_errors: Vec<f64>,
}

impl ErrorReport {
    pub fn max_residual(&self) -> f64 {
        self.residual_norms.iter().copied().fold(0.0, f64::max)
    }
    pub fn max_value_error(&self) -> f64 {
        self.value_rel_errors.iter().copied().fold(0.0, f64::max)
    }
}

pub fn error_report<S: Scalar>(
    op: &dyn HermitianOp<S>,
    pairs: &EigenPairs<S>,
    reference: &[f64],
) -> Result<ErrorReport, OpError> {
    assert!(
        reference.len() >= pairs.values.len(),
        "reference spectrum shorter than the estimated one"
    );
    let av = op.apply(&pairs.vectors)?;
    let p = pairs.values.len();
    let mut residual_norms = Vec::with_capacity(p);
    let mut value_rel_errors = Vec::with_capacity(p);
    for j in 0..p {
        let mut r_sq = 0.0;
        for i in 0..pairs.vectors.rows() {
            let diff = av[(i, j)] - pairs.vectors[(i, j)].scale(pairs.values[j]);
            r_sq += diff.abs_sq();
        }
        residual_norms.push(r_sq.sqrt());
        let denom = reference[j].abs().max(1.0);
        value_rel_errors.push((pairs.values[j] - reference[j]).abs() / denom);
    }
    Ok(ErrorReport { residual_norms, value_rel_errors })
}
