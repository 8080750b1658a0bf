//! Python bindings for the factored Hermitian eigensolver.
//!
//! The module exports the operator zoo ([`Operator`]), the conjugate
//! gradient and cyclic coordinate solvers ([`cg_solve`], [`crgd_solve`]),
//! the synthetic spectrum generator ([`generate_spectrum`]), and the dense
//! reference decomposition ([`dense_eig`]).
//!
//! Matrices cross the boundary as nested row-major lists. Real operators
//! accept complex input only when every imaginary part is exactly zero and
//! always return plain floats; complex operators return Python `complex`
//! entries. Invalid arguments raise `ValueError`; failures inside a solve
//! (divergence, inner-solve stall) raise `RuntimeError`.
//!
//! `cargo build -p ofeig-py` produces `libofeig_py.so`; rename or copy it
//! to `ofeig_py.so` somewhere on `sys.path` to import it
//! (`python/smoke_test.py` automates that and runs a quick end-to-end
//! check).

use std::fmt::Display;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ofeig::cg::{cg_solve as cg_solve_core, initial_factor, BetaRule, CgConfig, CgOutcome, CgStatus};
use ofeig::coord::{crgd_solve as crgd_solve_core, CrgdConfig, CrgdOutcome, CrgdStatus};
use ofeig::extract::{dense_eig as dense_eig_core, extract_eigenpairs};
use ofeig::linop::{
    estimate_lambda_max as estimate_lambda_max_core, generate_spectrum as generate_spectrum_core,
    random_orthonormal_basis, DenseOp, HermitianOp, Laplacian1d, Laplacian2d, NegativeShift,
    ShiftInvert, SpectralCosine, SpectralDense, SpectralFourier, SpectrumKind,
};
use ofeig::{Mat, Scalar};

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Scalar fields that know how to hand a matrix back to Python as nested
/// row-major lists (floats for the real field, `complex` otherwise).
trait PyScalar: Scalar {
    fn rows_py(py: Python<'_>, m: &Mat<Self>) -> PyResult<Py<PyAny>>;
}

impl PyScalar for f64 {
    fn rows_py(py: Python<'_>, m: &Mat<Self>) -> PyResult<Py<PyAny>> {
        let rows: Vec<Vec<f64>> = (0..m.rows())
            .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
            .collect();
        Ok(rows.into_pyobject(py)?.into_any().unbind())
    }
}

impl PyScalar for Complex64 {
    fn rows_py(py: Python<'_>, m: &Mat<Self>) -> PyResult<Py<PyAny>> {
        let rows: Vec<Vec<Complex64>> = (0..m.rows())
            .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
            .collect();
        Ok(rows.into_pyobject(py)?.into_any().unbind())
    }
}

/// Nested lists → matrix, rejecting empty or ragged input. Complex entries
/// are accepted for both fields; the real path checks them afterwards.
fn rect(rows: Vec<Vec<Complex64>>) -> PyResult<Mat<Complex64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(value_err("matrix must be non-empty"));
    }
    if rows.iter().any(|r| r.len() != cols) {
        return Err(value_err("matrix rows must all have the same length"));
    }
    Ok(Mat::from_rows(rows))
}

fn demote_real(m: &Mat<Complex64>) -> PyResult<Mat<f64>> {
    let mut out = Mat::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let z = m[(i, j)];
            if z.im != 0.0 {
                return Err(value_err(format!(
                    "operator is real but entry ({i}, {j}) has imaginary part {:e}",
                    z.im
                )));
            }
            out[(i, j)] = z.re;
        }
    }
    Ok(out)
}

fn check_block_rows(have: usize, want: usize) -> PyResult<()> {
    if have != want {
        return Err(value_err(format!(
            "block has {have} rows but the operator dimension is {want}"
        )));
    }
    Ok(())
}

fn check_rank(p: usize, n: usize) -> PyResult<()> {
    if p == 0 || p > n {
        return Err(value_err(format!(
            "factor width p = {p} must satisfy 1 ≤ p ≤ n = {n}"
        )));
    }
    Ok(())
}

#[derive(Clone)]
enum AnyOp {
    Real(Arc<dyn HermitianOp<f64>>),
    Complex(Arc<dyn HermitianOp<Complex64>>),
}

/// A Hermitian positive-semidefinite linear operator on `F^n`, applied
/// matrix-free to `n×p` blocks. Construct one with the static methods
/// (`laplacian_1d`, `laplacian_2d`, `spectral_dense`, `spectral_cosine`,
/// `spectral_fourier`, `dense`) and derive shifted variants with
/// `negative_shift` / `shift_invert`.
#[pyclass(frozen)]
pub struct Operator {
    op: AnyOp,
}

#[pymethods]
impl Operator {
    /// Second-difference operator of an `n`-point grid on the unit
    /// interval with zero boundary (dimension `n`, all eigenvalues known
    /// in closed form).
    #[staticmethod]
    pub fn laplacian_1d(n: usize) -> PyResult<Self> {
        if n == 0 {
            return Err(value_err("dimension must be at least 1"));
        }
        Ok(Self {
            op: AnyOp::Real(Arc::new(Laplacian1d::new(n))),
        })
    }

    /// Five-point Laplacian of an `m×m` interior grid of the unit square
    /// with zero boundary (dimension `m²`).
    #[staticmethod]
    pub fn laplacian_2d(m: usize) -> PyResult<Self> {
        if m == 0 {
            return Err(value_err("grid side must be at least 1"));
        }
        Ok(Self {
            op: AnyOp::Real(Arc::new(Laplacian2d::new(m))),
        })
    }

    /// Operator with the prescribed eigenvalues (non-increasing,
    /// nonnegative) in a random orthonormal eigenbasis drawn from `seed`.
    /// `field` selects a real or complex basis. Stores a dense `n×n`
    /// basis; intended for moderate `n`.
    #[staticmethod]
    #[pyo3(signature = (values, seed, field = "real"))]
    pub fn spectral_dense(values: Vec<f64>, seed: u64, field: &str) -> PyResult<Self> {
        let n = values.len();
        match field {
            "real" => Ok(Self {
                op: AnyOp::Real(Arc::new(
                    SpectralDense::new(random_orthonormal_basis::<f64>(n, seed), values)
                        .map_err(value_err)?,
                )),
            }),
            "complex" => Ok(Self {
                op: AnyOp::Complex(Arc::new(
                    SpectralDense::new(random_orthonormal_basis::<Complex64>(n, seed), values)
                        .map_err(value_err)?,
                )),
            }),
            other => Err(value_err(format!(
                "unknown field {other:?} (expected \"real\" or \"complex\")"
            ))),
        }
    }

    /// Real operator with the prescribed eigenvalues in the discrete
    /// cosine eigenbasis (matrix-free; `n = len(values)`).
    #[staticmethod]
    pub fn spectral_cosine(values: Vec<f64>) -> PyResult<Self> {
        let n = values.len();
        Ok(Self {
            op: AnyOp::Real(Arc::new(SpectralCosine::new(n, values).map_err(value_err)?)),
        })
    }

    /// Complex operator with the prescribed eigenvalues in the discrete
    /// Fourier eigenbasis (matrix-free; `n = len(values)`).
    #[staticmethod]
    pub fn spectral_fourier(values: Vec<f64>) -> PyResult<Self> {
        let n = values.len();
        Ok(Self {
            op: AnyOp::Complex(Arc::new(
                SpectralFourier::new(n, values).map_err(value_err)?,
            )),
        })
    }

    /// Operator holding an explicit square matrix, validated to be
    /// Hermitian (and probed for positive semidefiniteness in debug
    /// builds). Real when every imaginary part is exactly zero.
    #[staticmethod]
    pub fn dense(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let m = rect(rows)?;
        if m.rows() != m.cols() {
            return Err(value_err(format!(
                "dense operator must be square, got {}×{}",
                m.rows(),
                m.cols()
            )));
        }
        let all_real =
            (0..m.rows()).all(|i| (0..m.cols()).all(|j| m[(i, j)].im == 0.0));
        if all_real {
            let mr = demote_real(&m)?;
            Ok(Self {
                op: AnyOp::Real(Arc::new(DenseOp::new(mr).map_err(value_err)?)),
            })
        } else {
            Ok(Self {
                op: AnyOp::Complex(Arc::new(DenseOp::new(m).map_err(value_err)?)),
            })
        }
    }

    /// Dimension `n` of the space the operator acts on.
    #[getter]
    pub fn dim(&self) -> usize {
        match &self.op {
            AnyOp::Real(o) => o.dim(),
            AnyOp::Complex(o) => o.dim(),
        }
    }

    /// `"real"` or `"complex"`.
    #[getter]
    pub fn field(&self) -> &'static str {
        match &self.op {
            AnyOp::Real(_) => "real",
            AnyOp::Complex(_) => "complex",
        }
    }

    /// Complete eigenvalue list in non-increasing order when the operator
    /// knows it in closed form, else `None`.
    pub fn spectrum(&self) -> Option<Vec<f64>> {
        match &self.op {
            AnyOp::Real(o) => o.spectrum(),
            AnyOp::Complex(o) => o.spectrum(),
        }
    }

    /// Largest-eigenvalue estimate by power iteration (at most 50
    /// applications, early exit at relative 1e-6 agreement).
    #[pyo3(signature = (seed = 0))]
    pub fn estimate_lambda_max(&self, seed: u64) -> PyResult<f64> {
        match &self.op {
            AnyOp::Real(o) => estimate_lambda_max_core(o.as_ref(), seed).map_err(runtime_err),
            AnyOp::Complex(o) => estimate_lambda_max_core(o.as_ref(), seed).map_err(runtime_err),
        }
    }

    /// Apply the operator to an `n×p` block given as nested row-major
    /// lists; returns the product in the same shape.
    pub fn apply(&self, py: Python<'_>, x: Vec<Vec<Complex64>>) -> PyResult<Py<PyAny>> {
        let xm = rect(x)?;
        match &self.op {
            AnyOp::Real(o) => {
                check_block_rows(xm.rows(), o.dim())?;
                let xr = demote_real(&xm)?;
                let y = o.apply(&xr).map_err(runtime_err)?;
                f64::rows_py(py, &y)
            }
            AnyOp::Complex(o) => {
                check_block_rows(xm.rows(), o.dim())?;
                let y = o.apply(&xm).map_err(runtime_err)?;
                Complex64::rows_py(py, &y)
            }
        }
    }

    /// The operator `μI − A`. Keeps positive semidefiniteness when
    /// `μ ≥ λ_max(A)`, which maps the smallest eigenvalues of `A` to the
    /// top of the shifted spectrum (recover them as `σ = μ − θ`).
    pub fn negative_shift(&self, mu: f64) -> PyResult<Self> {
        if !mu.is_finite() {
            return Err(value_err("shift must be finite"));
        }
        match &self.op {
            AnyOp::Real(o) => Ok(Self {
                op: AnyOp::Real(Arc::new(
                    NegativeShift::<f64, _>::new(o.clone(), mu).map_err(value_err)?,
                )),
            }),
            AnyOp::Complex(o) => Ok(Self {
                op: AnyOp::Complex(Arc::new(
                    NegativeShift::<Complex64, _>::new(o.clone(), mu).map_err(value_err)?,
                )),
            }),
        }
    }

    /// The operator `(A + μI)⁻¹` for `μ > 0`, each application solved
    /// iteratively to the per-column relative residual `tol`. Its top
    /// eigenvalues correspond to the smallest of `A` (recover them as
    /// `σ = 1/θ − μ`).
    #[pyo3(signature = (mu, tol = 1e-12, max_iters = 10_000))]
    pub fn shift_invert(&self, mu: f64, tol: f64, max_iters: usize) -> PyResult<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(value_err(
                "shift-invert needs a positive shift to keep A + μI positive definite",
            ));
        }
        if !(tol > 0.0) {
            return Err(value_err("inner tolerance must be positive"));
        }
        match &self.op {
            AnyOp::Real(o) => Ok(Self {
                op: AnyOp::Real(Arc::new(ShiftInvert::<f64, _>::new(
                    o.clone(),
                    mu,
                    tol,
                    max_iters,
                ))),
            }),
            AnyOp::Complex(o) => Ok(Self {
                op: AnyOp::Complex(Arc::new(ShiftInvert::<Complex64, _>::new(
                    o.clone(),
                    mu,
                    tol,
                    max_iters,
                ))),
            }),
        }
    }

    fn __repr__(&self) -> String {
        format!("Operator(field={}, n={})", self.field(), self.dim())
    }
}

/// Outcome of a conjugate-gradient solve: eigenpair estimates extracted
/// from the final factor, plus the per-iteration convergence history.
#[pyclass(frozen)]
pub struct CgResult {
    /// `"converged"`, `"iteration_cap"`, or `"stalled"`.
    #[pyo3(get)]
    pub status: String,
    #[pyo3(get)]
    pub converged: bool,
    #[pyo3(get)]
    pub iters: usize,
    /// Times the direction was reset to steepest descent.
    #[pyo3(get)]
    pub restarts: usize,
    /// Objective at the final iterate (true residual value when the
    /// operator knows `‖A‖²_F`, else shifted by that constant —
    /// see `f_includes_constant`).
    #[pyo3(get)]
    pub final_f: f64,
    #[pyo3(get)]
    pub f_includes_constant: bool,
    #[pyo3(get)]
    pub final_grad_norm: f64,
    /// Gradient norm at the start of each completed iteration.
    #[pyo3(get)]
    pub grad_norms: Vec<f64>,
    /// Objective at the start of each completed iteration.
    #[pyo3(get)]
    pub f_history: Vec<f64>,
    /// Eigenvalue estimates, non-increasing.
    #[pyo3(get)]
    pub values: Vec<f64>,
    /// Eigenvector estimates, `n×p` nested lists, columns matching `values`.
    #[pyo3(get)]
    pub vectors: Py<PyAny>,
    /// Final factor, `n×p` nested lists.
    #[pyo3(get)]
    pub x: Py<PyAny>,
}

#[pymethods]
impl CgResult {
    fn __repr__(&self) -> String {
        format!(
            "CgResult(status={}, iters={}, final_grad_norm={:.3e})",
            self.status, self.iters, self.final_grad_norm
        )
    }
}

fn finalize_cg<S: PyScalar>(py: Python<'_>, out: CgOutcome<S>) -> PyResult<CgResult> {
    let pairs = extract_eigenpairs(&out.x);
    Ok(CgResult {
        status: match out.status {
            CgStatus::Converged => "converged",
            CgStatus::IterationCap => "iteration_cap",
            CgStatus::Stalled => "stalled",
        }
        .to_string(),
        converged: matches!(out.status, CgStatus::Converged),
        iters: out.iters,
        restarts: out.restarts,
        final_f: out.final_f,
        f_includes_constant: out.f_includes_constant,
        final_grad_norm: out.final_grad_norm,
        grad_norms: out.trace.iter().map(|t| t.grad_norm).collect(),
        f_history: out.trace.iter().map(|t| t.f).collect(),
        values: pairs.values,
        vectors: S::rows_py(py, &pairs.vectors)?,
        x: S::rows_py(py, &out.x)?,
    })
}

/// Outcome of a cyclic coordinate solve, mirroring [`CgResult`]; the
/// objective is only sampled at sweep boundaries, so the history is a list
/// of `(iteration, f)` pairs.
#[pyclass(frozen)]
pub struct CrgdResult {
    /// `"converged"` or `"iteration_cap"`.
    #[pyo3(get)]
    pub status: String,
    #[pyo3(get)]
    pub converged: bool,
    #[pyo3(get)]
    pub iters: usize,
    #[pyo3(get)]
    pub final_f: f64,
    #[pyo3(get)]
    pub f_includes_constant: bool,
    /// Largest relative drift of the incrementally maintained Gram matrix
    /// observed at sweep resyncs.
    #[pyo3(get)]
    pub max_gram_drift: f64,
    /// `(iteration, objective)` samples taken at sweep boundaries.
    #[pyo3(get)]
    pub f_samples: Vec<(usize, f64)>,
    #[pyo3(get)]
    pub values: Vec<f64>,
    #[pyo3(get)]
    pub vectors: Py<PyAny>,
    #[pyo3(get)]
    pub x: Py<PyAny>,
}

#[pymethods]
impl CrgdResult {
    fn __repr__(&self) -> String {
        format!(
            "CrgdResult(status={}, iters={}, final_f={:.6e})",
            self.status, self.iters, self.final_f
        )
    }
}

fn finalize_crgd<S: PyScalar>(py: Python<'_>, out: CrgdOutcome<S>) -> PyResult<CrgdResult> {
    let pairs = extract_eigenpairs(&out.x);
    Ok(CrgdResult {
        status: match out.status {
            CrgdStatus::Converged => "converged",
            CrgdStatus::IterationCap => "iteration_cap",
        }
        .to_string(),
        converged: matches!(out.status, CrgdStatus::Converged),
        iters: out.iters,
        final_f: out.final_f,
        f_includes_constant: out.f_includes_constant,
        max_gram_drift: out.max_gram_drift,
        f_samples: out
            .trace
            .iter()
            .filter_map(|t| t.f.map(|f| (t.iter, f)))
            .collect(),
        values: pairs.values,
        vectors: S::rows_py(py, &pairs.vectors)?,
        x: S::rows_py(py, &out.x)?,
    })
}

/// Eigenvalues (non-increasing) and matching eigenvector columns from the
/// dense reference decomposition.
#[pyclass(frozen)]
pub struct EigResult {
    #[pyo3(get)]
    pub values: Vec<f64>,
    #[pyo3(get)]
    pub vectors: Py<PyAny>,
}

#[pymethods]
impl EigResult {
    fn __repr__(&self) -> String {
        format!("EigResult(n={})", self.values.len())
    }
}

/// Synthetic eigenvalue family: `n` nonnegative values sorted
/// non-increasingly with the first `r` nonzero. `kind` is one of
/// `"random"`, `"uniform"`, `"ushape"`, `"logarithm"`; `seed` only matters
/// for `"random"`.
#[pyfunction]
pub fn generate_spectrum(kind: &str, n: usize, r: usize, seed: u64) -> PyResult<Vec<f64>> {
    let kind = SpectrumKind::from_str(kind).map_err(value_err)?;
    generate_spectrum_core(kind, n, r, seed).map_err(value_err)
}

/// Minimize `½‖xx* − A‖²_F` over `n×p` factors by nonlinear conjugate
/// gradient with a strong-Wolfe line search, starting from a random factor
/// drawn from `seed`. `beta_rule` is `"fr"` (Fletcher–Reeves) or `"pr+"`
/// (nonnegative Polak–Ribière); iteration stops once the gradient norm
/// reaches `epsilon`. `explicit_projection` runs the full
/// quotient-geometry projections instead of relying on the gradient being
/// horizontal automatically.
#[pyfunction]
#[pyo3(signature = (op, p, seed, beta_rule = "pr+", epsilon = 1e-6, max_iters = 1000, explicit_projection = false))]
#[allow(clippy::too_many_arguments)]
pub fn cg_solve(
    py: Python<'_>,
    op: PyRef<'_, Operator>,
    p: usize,
    seed: u64,
    beta_rule: &str,
    epsilon: f64,
    max_iters: usize,
    explicit_projection: bool,
) -> PyResult<CgResult> {
    let beta = match beta_rule {
        "fr" => BetaRule::FletcherReeves,
        "pr+" => BetaRule::PolakRibierePlus,
        other => {
            return Err(value_err(format!(
                "unknown beta rule {other:?} (expected \"fr\" or \"pr+\")"
            )))
        }
    };
    if !(epsilon >= 0.0) {
        return Err(value_err("epsilon must be a nonnegative number"));
    }
    let cfg = CgConfig {
        beta,
        epsilon,
        max_iters,
        explicit_projection,
        ..CgConfig::default()
    };
    match &op.op {
        AnyOp::Real(o) => {
            check_rank(p, o.dim())?;
            let x0 = initial_factor::<f64>(o.dim(), p, seed);
            finalize_cg(py, cg_solve_core(o.as_ref(), x0, &cfg).map_err(runtime_err)?)
        }
        AnyOp::Complex(o) => {
            check_rank(p, o.dim())?;
            let x0 = initial_factor::<Complex64>(o.dim(), p, seed);
            finalize_cg(py, cg_solve_core(o.as_ref(), x0, &cfg).map_err(runtime_err)?)
        }
    }
}

/// Minimize the same objective by cyclic block coordinate descent with the
/// fixed step `alpha` (must stay below the inverse curvature scale
/// `≈ 1/(2(λ_max + ‖x‖²))` or the divergence guard raises). `block` rows
/// are updated per iteration at `O(block·p)` cost; convergence is declared
/// once the block direction stays below `epsilon` for a full sweep.
#[pyfunction]
#[pyo3(signature = (op, p, seed, alpha, block = 32, epsilon = 1e-8, max_iters = 100_000))]
#[allow(clippy::too_many_arguments)]
pub fn crgd_solve(
    py: Python<'_>,
    op: PyRef<'_, Operator>,
    p: usize,
    seed: u64,
    alpha: f64,
    block: usize,
    epsilon: f64,
    max_iters: usize,
) -> PyResult<CrgdResult> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(value_err("step size alpha must be positive and finite"));
    }
    if block == 0 {
        return Err(value_err("block must be at least 1"));
    }
    if !(epsilon >= 0.0) {
        return Err(value_err("epsilon must be a nonnegative number"));
    }
    let cfg = CrgdConfig {
        block,
        alpha,
        epsilon,
        max_iters,
    };
    match &op.op {
        AnyOp::Real(o) => {
            check_rank(p, o.dim())?;
            let x0 = initial_factor::<f64>(o.dim(), p, seed);
            finalize_crgd(py, crgd_solve_core(o.as_ref(), x0, &cfg).map_err(runtime_err)?)
        }
        AnyOp::Complex(o) => {
            check_rank(p, o.dim())?;
            let x0 = initial_factor::<Complex64>(o.dim(), p, seed);
            finalize_crgd(py, crgd_solve_core(o.as_ref(), x0, &cfg).map_err(runtime_err)?)
        }
    }
}

/// Dense reference decomposition: materializes the operator, validates it
/// is Hermitian, and diagonalizes it with the cyclic Jacobi kernel.
/// Refuses dimensions above 2000 — it is a verification oracle, not a
/// solver.
#[pyfunction]
pub fn dense_eig(py: Python<'_>, op: PyRef<'_, Operator>) -> PyResult<EigResult> {
    match &op.op {
        AnyOp::Real(o) => {
            let pairs = dense_eig_core(o.as_ref()).map_err(runtime_err)?;
            Ok(EigResult {
                values: pairs.values,
                vectors: f64::rows_py(py, &pairs.vectors)?,
            })
        }
        AnyOp::Complex(o) => {
            let pairs = dense_eig_core(o.as_ref()).map_err(runtime_err)?;
            Ok(EigResult {
                values: pairs.values,
                vectors: Complex64::rows_py(py, &pairs.vectors)?,
            })
        }
    }
}

#[pymodule]
pub fn ofeig_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Operator>()?;
    m.add_class::<CgResult>()?;
    m.add_class::<CrgdResult>()?;
    m.add_class::<EigResult>()?;
    m.add_function(wrap_pyfunction!(generate_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(cg_solve, m)?)?;
    m.add_function(wrap_pyfunction!(crgd_solve, m)?)?;
    m.add_function(wrap_pyfunction!(dense_eig, m)?)?;
    Ok(())
}
