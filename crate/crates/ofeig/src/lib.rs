//! Orthogonalization-free extreme eigensolver.
//!
//! Computes the `p` largest eigenvalues (and eigenvectors) of a Hermitian
//! positive-semidefinite operator `A` without ever orthogonalizing an
//! `n×p` block and without materializing `A`. The variable is a factor
//! `x ∈ F^{n×p}` (`F` real or complex) and the objective is
//!
//! ```text
//! f(x) = ½ ‖x x* − A‖_F²
//! ```
//!
//! whose global minimizers are exactly the best rank-`p` factors of `A`.
//! Two solvers are provided:
//!
//! * [`cg`] — nonlinear conjugate gradient (Fletcher–Reeves or clipped
//!   Polak–Ribière) under a strong Wolfe line search. The invariance
//!   `f(xO) = f(x)` for unitary `O` makes the iteration well defined on the
//!   quotient of full-rank blocks by `p×p` unitaries; [`geometry`] carries
//!   the quotient-space projections used to verify (and optionally enforce)
//!   that structure.
//! * [`coord`] — cyclic block coordinate descent whose per-iteration cost is
//!   independent of `n` for operators with row-local structure (banded
//!   Laplacians and friends), via a compact update state.
//!
//! Eigenpairs are read off a converged factor by [`extract`], operators are
//! built by [`linop`], and the command-line harness lives in [`cli`].
//!
//! Everything is deterministic: random data flows from explicit 64-bit
//! seeds, so runs and their CSV traces are reproducible.

pub mod cg;
pub mod cli;
pub mod coord;
pub mod extract;
pub mod geometry;
pub mod jacobi;
pub mod linesearch;
pub mod linop;
pub mod mat;
pub mod rng;
pub mod scalar;

pub use mat::Mat;
pub use scalar::Scalar;
