//! Turning a parsed config into an operator, a solve, and a report.

use std::path::Path;

use num_complex::Complex64;

use crate::cg::{cg_solve, initial_factor, CgConfig, CgStatus};
use crate::cli::config::{
    parse_basis, parse_beta_rule, BasisKind, MuSpec, OperatorSpec, RunConfig, ShiftMode,
    ShiftSpec, SolverSpec,
};
use crate::cli::trace::{row_from_crgd, Row};
use crate::coord::{crgd_solve, CrgdConfig, CrgdStatus};
use crate::extract::{error_report, extract_eigenpairs, EigenPairs};
use crate::linesearch::WolfeConfig;
use crate::linop::{
    estimate_lambda_max, generate_spectrum, random_orthonormal_basis, read_coordinate_file,
    HermitianOp, Laplacian1d, Laplacian2d, NegativeShift, ShiftInvert, SpectralCosine,
    SpectralDense, SpectralFourier, SpectrumKind,
};
use crate::scalar::Scalar;

/// Terminal failure carrying its process exit code:
/// 2 = config/input error, 3 = finished without converging,
/// 4 = numerical failure during the solve.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
    pub fn numerical(message: impl Into<String>) -> Self {
        Failure { code: 4, message: message.into() }
    }
}

/// Keeps the random-kind spectrum stream and the random dense basis
/// decorrelated when both derive from the same config seed.
const DENSE_BASIS_SALT: u64 = 0x5eed_ba515;
/// Seed of the power-iteration probe behind `mu = "auto"`.
const AUTO_MU_PROBE_SEED: u64 = 0x6d75;

pub enum BuiltOp {
    Real(Box<dyn HermitianOp<f64>>),
    Complex(Box<dyn HermitianOp<Complex64>>),
}

impl BuiltOp {
    pub fn dim(&self) -> usize {
        match self {
            BuiltOp::Real(op) => op.dim(),
            BuiltOp::Complex(op) => op.dim(),
        }
    }
    pub fn field(&self) -> &'static str {
        match self {
            BuiltOp::Real(_) => "real",
            BuiltOp::Complex(_) => "complex",
        }
    }
}

fn spectral_values(spec: &OperatorSpec) -> Result<Vec<f64>, Failure> {
    let OperatorSpec::Spectral { n, r, kind, seed, top_shift, .. } = spec else {
        unreachable!("spectral_values called on a non-spectral operator");
    };
    let kind: SpectrumKind = kind
        .parse()
        .map_err(|e| Failure::config(format!("operator.spectral.kind: {e}")))?;
    let mut values = generate_spectrum(kind, *n, *r, *seed)
        .map_err(|e| Failure::config(format!("operator.spectral: {e}")))?;
    if let Some(ts) = top_shift {
        for v in values.iter_mut().take(ts.count) {
            *v += ts.amount;
        }
    }
    Ok(values)
}

/// Construct the configured operator, applying the shift wrapper if
/// present. Also returns header extras (currently the resolved shift).
pub fn build_operator(cfg: &RunConfig) -> Result<(BuiltOp, Vec<(String, String)>), Failure> {
    let base: BuiltOp = match &cfg.operator {
        OperatorSpec::Laplacian { m, dims: 1 } => BuiltOp::Real(Box::new(Laplacian1d::new(*m))),
        OperatorSpec::Laplacian { m, dims: 2 } => BuiltOp::Real(Box::new(Laplacian2d::new(*m))),
        OperatorSpec::Laplacian { dims, .. } => {
            return Err(Failure::config(format!(
                "operator.laplacian.dims: must be 1 or 2, got {dims}"
            )));
        }
        OperatorSpec::Spectral { n, seed, basis, .. } => {
            let values = spectral_values(&cfg.operator)?;
            let basis = parse_basis(basis)
                .map_err(|e| Failure::config(format!("operator.spectral.basis: {e}")))?;
            match basis {
                BasisKind::Dense => {
                    let q = random_orthonormal_basis::<f64>(*n, seed ^ DENSE_BASIS_SALT);
                    BuiltOp::Real(Box::new(
                        SpectralDense::new(q, values)
                            .map_err(|e| Failure::config(format!("operator.spectral: {e}")))?,
                    ))
                }
                BasisKind::Cosine => BuiltOp::Real(Box::new(
                    SpectralCosine::new(*n, values)
                        .map_err(|e| Failure::config(format!("operator.spectral: {e}")))?,
                )),
                BasisKind::Fourier => BuiltOp::Complex(Box::new(
                    SpectralFourier::new(*n, values)
                        .map_err(|e| Failure::config(format!("operator.spectral: {e}")))?,
                )),
            }
        }
        OperatorSpec::File { path } => BuiltOp::Real(Box::new(
            read_coordinate_file(path)
                .map_err(|e| Failure::config(format!("operator.file: {e}")))?,
        )),
    };

    if cfg.p > base.dim() {
        return Err(Failure::config(format!(
            "p: {} exceeds the operator dimension {}",
            cfg.p,
            base.dim()
        )));
    }

    let Some(shift) = &cfg.shift else {
        return Ok((base, Vec::new()));
    };
    let mode = shift.mode_parsed().map_err(Failure::config)?;
    let (wrapped, mu) = match base {
        BuiltOp::Real(op) => {
            let (op, mu) = wrap_shift(op, shift, mode)?;
            (BuiltOp::Real(op), mu)
        }
        BuiltOp::Complex(op) => {
            let (op, mu) = wrap_shift(op, shift, mode)?;
            (BuiltOp::Complex(op), mu)
        }
    };
    let extras = vec![("resolved_mu".to_string(), format!("{mu:?}"))];
    Ok((wrapped, extras))
}

fn wrap_shift<S: Scalar>(
    op: Box<dyn HermitianOp<S>>,
    shift: &ShiftSpec,
    mode: ShiftMode,
) -> Result<(Box<dyn HermitianOp<S>>, f64), Failure> {
    match mode {
        ShiftMode::Negative => {
            let mu = match &shift.mu {
                MuSpec::Value(v) => *v,
                MuSpec::Word(_) => match op.spectrum() {
                    // spectrum is stored nonincreasing
                    Some(s) => s.first().copied().unwrap_or(0.0),
                    None => {
                        let est = estimate_lambda_max(op.as_ref(), AUTO_MU_PROBE_SEED)
                            .map_err(|e| Failure::numerical(format!("shift.mu auto: {e}")))?;
                        // the power estimate can undershoot; pad to keep
                        // μI − A positive semidefinite
                        est * (1.0 + 1e-3)
                    }
                },
            };
            let wrapped = NegativeShift::new(op, mu)
                .map_err(|e| Failure::config(format!("shift: {e}")))?;
            Ok((Box::new(wrapped), mu))
        }
        ShiftMode::ShiftInvert => {
            let MuSpec::Value(mu) = shift.mu else {
                return Err(Failure::config(
                    "shift.mu: shift_invert needs an explicit positive value",
                ));
            };
            let wrapped = ShiftInvert::new(op, mu, shift.inner_tolerance, shift.inner_max_iters);
            Ok((Box::new(wrapped), mu))
        }
    }
}

/// Everything a verb needs to print and encode the outcome of one run.
pub struct RunReport {
    pub label: String,
    pub field: &'static str,
    pub n: usize,
    pub p: usize,
    pub solver: String,
    pub status: String,
    pub converged: bool,
    pub iters: usize,
    /// First iteration whose gradient (or block-direction) norm fell below
    /// the solver tolerance.
    pub first_below_eps: Option<usize>,
    pub final_f: f64,
    pub f_includes_constant: bool,
    pub final_grad: f64,
    /// Sum of the per-iteration wall clocks, in milliseconds.
    pub wall_ms: f64,
    /// Eigenvalue estimates of the operator actually solved, largest first.
    pub values: Vec<f64>,
    /// When a shift was configured: description and the back-transformed
    /// eigenvalues of the base operator, smallest first.
    pub back_values: Option<(String, Vec<f64>)>,
    /// Top-`p` reference eigenvalues when the solved operator knows them.
    pub reference: Option<Vec<f64>>,
    pub max_rel_value_err: Option<f64>,
    pub max_residual: f64,
    pub rows: Vec<Row>,
    pub extras: Vec<(String, String)>,
}

struct SolveCore {
    rows: Vec<Row>,
    status: String,
    converged: bool,
    iters: usize,
    final_f: f64,
    f_includes_constant: bool,
    final_grad: f64,
    solver: String,
    epsilon: f64,
    values: Vec<f64>,
    reference: Option<Vec<f64>>,
    max_rel_value_err: Option<f64>,
    max_residual: f64,
}

fn solve_typed<S: Scalar>(
    op: &dyn HermitianOp<S>,
    cfg: &RunConfig,
) -> Result<SolveCore, Failure> {
    let x0 = initial_factor::<S>(op.dim(), cfg.p, cfg.x0_seed);

    match &cfg.solver {
        SolverSpec::Cg { beta_rule, epsilon, max_iters, c1, c2, explicit_projection } => {
            let beta = parse_beta_rule(beta_rule).map_err(Failure::config)?;
            let solver_cfg = CgConfig {
                beta,
                epsilon: *epsilon,
                max_iters: *max_iters,
                explicit_projection: *explicit_projection,
                wolfe: WolfeConfig { c1: *c1, c2: *c2, ..WolfeConfig::default() },
            };
            let out = cg_solve(op, x0, &solver_cfg)
                .map_err(|e| Failure::numerical(format!("cg solve failed: {e}")))?;
            let rows: Vec<Row> = out.trace.iter().map(Row::from).collect();
            let (status, converged) = match out.status {
                CgStatus::Converged => ("converged", true),
                CgStatus::IterationCap => ("iteration_cap", false),
                CgStatus::Stalled => ("stalled", false),
            };
            assemble_core(
                op,
                rows,
                status,
                converged,
                out.iters,
                out.final_f,
                out.f_includes_constant,
                out.final_grad_norm,
                format!("cg {}", beta.name()),
                *epsilon,
                extract_eigenpairs(&out.x),
            )
        }
        SolverSpec::Crgd { block, alpha, epsilon, max_iters } => {
            let solver_cfg = CrgdConfig {
                block: *block,
                alpha: *alpha,
                epsilon: *epsilon,
                max_iters: *max_iters,
            };
            let out = crgd_solve(op, x0, &solver_cfg)
                .map_err(|e| Failure::numerical(format!("crgd solve failed: {e}")))?;
            let rows: Vec<Row> = out.trace.iter().map(|r| row_from_crgd(r, *alpha)).collect();
            let (status, converged) = match out.status {
                CrgdStatus::Converged => ("converged", true),
                CrgdStatus::IterationCap => ("iteration_cap", false),
            };
            let final_grad = out.trace.last().map(|r| r.delta_norm).unwrap_or(0.0);
            assemble_core(
                op,
                rows,
                status,
                converged,
                out.iters,
                out.final_f,
                out.f_includes_constant,
                final_grad,
                format!("crgd block={block}"),
                *epsilon,
                extract_eigenpairs(&out.x),
            )
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble_core<S: Scalar>(
    op: &dyn HermitianOp<S>,
    rows: Vec<Row>,
    status: &str,
    converged: bool,
    iters: usize,
    final_f: f64,
    f_includes_constant: bool,
    final_grad: f64,
    solver: String,
    epsilon: f64,
    pairs: EigenPairs<S>,
) -> Result<SolveCore, Failure> {
    let reference: Option<Vec<f64>> =
        op.spectrum().map(|s| s.iter().take(pairs.values.len()).copied().collect());
    let (max_rel_value_err, max_residual) = match &reference {
        Some(r) => {
            let rep = error_report(op, &pairs, r)
                .map_err(|e| Failure::numerical(format!("residual check failed: {e}")))?;
            (Some(rep.max_value_error()), rep.max_residual())
        }
        None => {
            let rep = error_report(op, &pairs, &pairs.values)
                .map_err(|e| Failure::numerical(format!("residual check failed: {e}")))?;
            (None, rep.max_residual())
        }
    };
    Ok(SolveCore {
        rows,
        status: status.to_string(),
        converged,
        iters,
        final_f,
        f_includes_constant,
        final_grad,
        solver,
        epsilon,
        values: pairs.values,
        reference,
        max_rel_value_err,
        max_residual,
    })
}

/// Parse → build → solve → report for one config.
pub fn execute_run(cfg: &RunConfig, label: &str) -> Result<RunReport, Failure> {
    let (built, extras) = build_operator(cfg)?;
    let n = built.dim();
    let field = built.field();
    let core = match &built {
        BuiltOp::Real(op) => solve_typed::<f64>(op.as_ref(), cfg)?,
        BuiltOp::Complex(op) => solve_typed::<Complex64>(op.as_ref(), cfg)?,
    };

    let first_below_eps = core
        .rows
        .iter()
        .find(|r| r.grad_norm <= core.epsilon)
        .map(|r| r.iter);
    let wall_ms = core.rows.iter().map(|r| r.wall_ns as f64).sum::<f64>() / 1e6;

    let back_values = match &cfg.shift {
        Some(shift) => {
            let mu: f64 = extras
                .iter()
                .find(|(k, _)| k == "resolved_mu")
                .and_then(|(_, v)| v.parse().ok())
                .unwrap_or(f64::NAN);
            match shift.mode_parsed().map_err(Failure::config)? {
                ShiftMode::Negative => {
                    let sigma: Vec<f64> = core.values.iter().map(|t| mu - t).collect();
                    Some((format!("sigma = mu - theta, mu = {mu:?}"), sigma))
                }
                ShiftMode::ShiftInvert => {
                    let sigma: Vec<f64> = core.values.iter().map(|t| 1.0 / t - mu).collect();
                    Some((format!("sigma = 1/theta - mu, mu = {mu:?}"), sigma))
                }
            }
        }
        None => None,
    };

    Ok(RunReport {
        label: label.to_string(),
        field,
        n,
        p: cfg.p,
        solver: core.solver,
        status: core.status,
        converged: core.converged,
        iters: core.iters,
        first_below_eps,
        final_f: core.final_f,
        f_includes_constant: core.f_includes_constant,
        final_grad: core.final_grad,
        wall_ms,
        values: core.values,
        back_values,
        reference: core.reference,
        max_rel_value_err: core.max_rel_value_err,
        max_residual: core.max_residual,
        rows: core.rows,
        extras,
    })
}

/// Read and validate a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}
