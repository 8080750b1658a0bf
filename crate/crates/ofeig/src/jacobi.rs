//! Cyclic Jacobi eigendecomposition for Hermitian matrices.
//!
//! One kernel serves both the `p×p` Gram factors inside the geometry layer
//! and the dense reference decompositions used by tests and the `oracle`
//! verb. Each pivot reduces the complex 2×2 block to the real symmetric
//! case by factoring the off-diagonal phase into the rotation, so the real
//! and complex fields share the exact same arithmetic.
//!
//! Jacobi is chosen over tridiagonalization+QR deliberately: it is short
//! enough to audit, unconditionally stable on Hermitian input, and entirely
//! adequate at the dense sizes this crate ever materializes.

use crate::mat::Mat;
use crate::scalar::Scalar;

/// Eigendecomposition `M = V·diag(values)·V^H` of a Hermitian matrix.
///
/// Sweeps cyclically over the strict upper triangle until the off-diagonal
/// Frobenius mass falls below `rel_tol·‖M‖_F` or `max_sweeps` is exhausted
/// (Jacobi always converges; the cap is a safety net). Returns eigenvalues
/// sorted non-increasing with eigenvector columns permuted to match.
///
/// Panics on non-square input; Hermitian-ness is the caller's contract
/// (only the upper triangle and real diagonal parts are trusted).
pub fn hermitian_eig<S: Scalar>(m: &Mat<S>, rel_tol: f64, max_sweeps: usize) -> (Vec<f64>, Mat<S>) {
    assert_eq!(m.rows(), m.cols(), "hermitian_eig: matrix must be square");
    let n = m.rows();
    let mut a = m.clone();
    let mut v = Mat::<S>::identity(n);

    let total_fro = a.norm_fro();
    let target = rel_tol * total_fro;

    for _sweep in 0..max_sweeps {
        if off_diag_fro(&a) <= target {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re()).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());

    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Mat::<S>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, dst)] = v[(r, src)];
        }
    }
    (values, vectors)
}

pub fn off_diag_fro<S: Scalar>(a: &Mat<S>) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                sum += a[(p, q)].abs_sq();
            }
        }
    }
    sum.sqrt()
}

/// One Jacobi rotation annihilating `a[(p, q)]`.
///
/// With `a_pq = r·u` (`r = |a_pq|`, `|u| = 1`), the unitary is `J = D·G`
/// where `D = diag(u, 1)` strips the phase and `G` is the classical real
/// rotation with tangent `t = sign(τ)/(|τ| + √(1+τ²))`, `τ = (a_qq −
/// a_pp)/(2r)` — the smaller-angle root, which keeps the sweep stable.
fn rotate<S: Scalar>(a: &mut Mat<S>, v: &mut Mat<S>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.abs();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re();
    let aqq = a[(q, q)].re();
    let u = apq.scale(1.0 / r);

    let tau = (aqq - app) / (2.0 * r);
    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // Column update: (col_p, col_q) ← (col_p·uc − col_q·s, col_p·us + col_q·c).
    let uc = u.scale(c);
    let us = u.scale(s);
    let n = a.rows();
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * uc - aiq.scale(s);
        a[(i, q)] = aip * us + aiq.scale(c);

        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * uc - viq.scale(s);
        v[(i, q)] = vip * us + viq.scale(c);
    }
    // Row update by J^H: row_p ← conj(u)c·row_p − s·row_q, row_q ← conj(u)s·row_p + c·row_q.
    let ucc = u.conj().scale(c);
    let ucs = u.conj().scale(s);
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = apj * ucc - aqj.scale(s);
        a[(q, j)] = apj * ucs + aqj.scale(c);
    }
    // Pin the analytically known entries to kill accumulated roundoff.
    a[(p, q)] = S::ZERO;
    a[(q, p)] = S::ZERO;
    a[(p, p)] = S::from_re(app - t * r);
    a[(q, q)] = S::from_re(aqq + t * r);
}
