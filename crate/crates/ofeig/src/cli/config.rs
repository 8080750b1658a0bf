//! Run configuration: a TOML schema covering operator construction, an
//! optional spectral shift, and solver selection. Unknown keys are
//! rejected; every random choice is pinned to an explicit seed so a config
//! file identifies a run completely.
//!
//! ```toml
//! p = 3
//! x0_seed = 7
//! output = "trace.csv"          # optional; omitted → CSV on stdout
//!
//! [operator.laplacian]          # or operator.spectral / operator.file
//! m = 10
//! dims = 2
//!
//! [shift]                       # optional
//! mode = "negative"             # or "shift_invert"
//! mu = "auto"                   # number, or "auto" (negative mode only)
//!
//! [solver.cg]                   # or solver.crgd
//! beta_rule = "pr+"
//! epsilon = 1e-6
//! max_iters = 2000
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cg::BetaRule;
use crate::linop::SpectrumKind;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Number of leading eigenpairs to compute.
    pub p: usize,
    /// Seed for the random initial factor.
    pub x0_seed: u64,
    /// Trace destination; omitted means the CSV goes to stdout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub operator: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<ShiftSpec>,
    pub solver: SolverSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// Discrete Dirichlet Laplacian on a grid with `m` interior points per
    /// side; `dims` is 1 or 2.
    Laplacian { m: usize, dims: usize },
    /// Operator with a prescribed spectrum in a chosen eigenbasis.
    /// `basis = "fourier"` makes the run complex; `"dense"` draws a random
    /// orthonormal basis; `"cosine"` uses the DCT basis.
    Spectral {
        n: usize,
        /// Nonzero eigenvalues; the remaining `n − r` are zero.
        r: usize,
        /// One of `random`, `uniform`, `ushape`, `logarithm`.
        kind: String,
        seed: u64,
        basis: String,
        /// Optional additive lift of the leading `count` eigenvalues,
        /// enlarging the gap below them while preserving their order.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        top_shift: Option<TopShift>,
    },
    /// Dense symmetric matrix from a coordinate-list text file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopShift {
    pub count: usize,
    pub amount: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpec {
    /// `negative` solves `μI − A` (largest ↦ smallest); `shift_invert`
    /// solves `(A + μI)⁻¹` with inner conjugate-gradient solves.
    pub mode: String,
    /// A positive number, or `"auto"` (negative mode only: μ = λ_max).
    pub mu: MuSpec,
    /// Relative residual target of the inner solves (shift_invert).
    #[serde(default = "default_inner_tolerance")]
    pub inner_tolerance: f64,
    #[serde(default = "default_inner_max_iters")]
    pub inner_max_iters: usize,
}

fn default_inner_tolerance() -> f64 {
    1e-12
}

fn default_inner_max_iters() -> usize {
    2000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuSpec {
    Value(f64),
    Word(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverSpec {
    Cg {
        /// `fr` or `pr+`.
        beta_rule: String,
        /// Gradient-norm stopping tolerance.
        epsilon: f64,
        max_iters: usize,
        #[serde(default = "default_c1")]
        c1: f64,
        #[serde(default = "default_c2")]
        c2: f64,
        /// Opt-in quotient-space projection of gradients and transported
        /// directions (verification mode; the unprojected iteration is
        /// provably identical).
        #[serde(default)]
        explicit_projection: bool,
    },
    Crgd {
        /// Rows per coordinate block.
        block: usize,
        /// Fixed step size.
        alpha: f64,
        /// Block-direction-norm stopping tolerance.
        epsilon: f64,
        max_iters: usize,
    },
}

fn default_c1() -> f64 {
    1e-4
}

fn default_c2() -> f64 {
    0.4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftMode {
    Negative,
    ShiftInvert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Dense,
    Cosine,
    Fourier,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| format!("config error: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Schema-level validation beyond what serde enforces; messages name
    /// the offending field.
    pub fn validate(&self) -> Result<(), String> {
        if self.p == 0 {
            return Err("p: must be at least 1".into());
        }
        match &self.operator {
            OperatorSpec::Laplacian { m, dims } => {
                if *m == 0 {
                    return Err("operator.laplacian.m: must be at least 1".into());
                }
                if !(*dims == 1 || *dims == 2) {
                    return Err(format!("operator.laplacian.dims: must be 1 or 2, got {dims}"));
                }
            }
            OperatorSpec::Spectral { n, r, kind, basis, top_shift, .. } => {
                if *n == 0 {
                    return Err("operator.spectral.n: must be at least 1".into());
                }
                if r > n {
                    return Err(format!(
                        "operator.spectral.r: rank {r} exceeds dimension {n}"
                    ));
                }
                SpectrumKind::from_str(kind)
                    .map_err(|e| format!("operator.spectral.kind: {e}"))?;
                parse_basis(basis).map_err(|e| format!("operator.spectral.basis: {e}"))?;
                if let Some(ts) = top_shift {
                    if ts.count == 0 || ts.count > *r {
                        return Err(format!(
                            "operator.spectral.top_shift.count: must be in 1..={r}"
                        ));
                    }
                    if !(ts.amount >= 0.0) {
                        return Err(
                            "operator.spectral.top_shift.amount: must be nonnegative".into()
                        );
                    }
                }
            }
            OperatorSpec::File { .. } => {}
        }
        if let Some(n) = self.operator.dim() {
            if self.p > n {
                return Err(format!("p: {} exceeds the operator dimension {n}", self.p));
            }
        }
        if let Some(shift) = &self.shift {
            let mode = shift.mode_parsed()?;
            match (&shift.mu, mode) {
                (MuSpec::Word(w), ShiftMode::Negative) if w == "auto" => {}
                (MuSpec::Word(w), _) if w != "auto" => {
                    return Err(format!("shift.mu: expected a number or \"auto\", got {w:?}"));
                }
                (MuSpec::Word(_), ShiftMode::ShiftInvert) => {
                    return Err(
                        "shift.mu: shift_invert needs an explicit positive value (the inner \
                         solves have no way to bound λ_max themselves)"
                            .into(),
                    );
                }
                (MuSpec::Value(v), ShiftMode::ShiftInvert) if *v <= 0.0 => {
                    return Err(format!("shift.mu: must be positive for shift_invert, got {v}"));
                }
                (MuSpec::Value(v), _) if !v.is_finite() => {
                    return Err("shift.mu: must be finite".into());
                }
                _ => {}
            }
            if !(shift.inner_tolerance > 0.0) {
                return Err("shift.inner_tolerance: must be positive".into());
            }
            if shift.inner_max_iters == 0 {
                return Err("shift.inner_max_iters: must be at least 1".into());
            }
        }
        match &self.solver {
            SolverSpec::Cg { beta_rule, epsilon, max_iters, c1, c2, .. } => {
                parse_beta_rule(beta_rule).map_err(|e| format!("solver.cg.beta_rule: {e}"))?;
                if !(*epsilon >= 0.0) {
                    return Err("solver.cg.epsilon: must be nonnegative".into());
                }
                if *max_iters == 0 {
                    return Err("solver.cg.max_iters: must be at least 1".into());
                }
                if !(0.0 < *c1 && *c1 < *c2 && *c2 < 1.0) {
                    return Err(format!(
                        "solver.cg.c1/c2: need 0 < c1 < c2 < 1, got c1={c1} c2={c2}"
                    ));
                }
            }
            SolverSpec::Crgd { block, alpha, epsilon, max_iters } => {
                if *block == 0 {
                    return Err("solver.crgd.block: must be at least 1".into());
                }
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return Err("solver.crgd.alpha: must be positive and finite".into());
                }
                if !(*epsilon >= 0.0) {
                    return Err("solver.crgd.epsilon: must be nonnegative".into());
                }
                if *max_iters == 0 {
                    return Err("solver.crgd.max_iters: must be at least 1".into());
                }
            }
        }
        Ok(())
    }

    /// Canonical text form used in trace headers.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn solver_name(&self) -> &'static str {
        match &self.solver {
            SolverSpec::Cg { .. } => "cg",
            SolverSpec::Crgd { .. } => "crgd",
        }
    }
}

impl OperatorSpec {
    /// Dimension when it is known without touching the filesystem.
    pub fn dim(&self) -> Option<usize> {
        match self {
            OperatorSpec::Laplacian { m, dims: 1 } => Some(*m),
            OperatorSpec::Laplacian { m, dims: 2 } => Some(m * m),
            OperatorSpec::Laplacian { .. } => None,
            OperatorSpec::Spectral { n, .. } => Some(*n),
            OperatorSpec::File { .. } => None,
        }
    }

    /// Scalar field of the run: only the Fourier basis is complex.
    pub fn field(&self) -> &'static str {
        match self {
            OperatorSpec::Spectral { basis, .. } if basis == "fourier" => "complex",
            _ => "real",
        }
    }

    pub fn describe(&self) -> String {
        match self {
            OperatorSpec::Laplacian { m, dims } => format!("laplacian m={m} dims={dims}"),
            OperatorSpec::Spectral { n, r, kind, basis, top_shift, .. } => {
                let ts = match top_shift {
                    Some(t) => format!(" top_shift={}+{:?}", t.count, t.amount),
                    None => String::new(),
                };
                format!("spectral {kind} n={n} r={r} basis={basis}{ts}")
            }
            OperatorSpec::File { path } => format!("file {}", path.display()),
        }
    }
}

impl ShiftSpec {
    pub fn mode_parsed(&self) -> Result<ShiftMode, String> {
        match self.mode.as_str() {
            "negative" => Ok(ShiftMode::Negative),
            "shift_invert" => Ok(ShiftMode::ShiftInvert),
            other => Err(format!(
                "shift.mode: expected \"negative\" or \"shift_invert\", got {other:?}"
            )),
        }
    }
}

pub fn parse_basis(s: &str) -> Result<BasisKind, String> {
    match s {
        "dense" => Ok(BasisKind::Dense),
        "cosine" => Ok(BasisKind::Cosine),
        "fourier" => Ok(BasisKind::Fourier),
        other => Err(format!("expected \"dense\", \"cosine\" or \"fourier\", got {other:?}")),
    }
}

pub fn parse_beta_rule(s: &str) -> Result<BetaRule, String> {
    match s {
        "fr" => Ok(BetaRule::FletcherReeves),
        "pr+" => Ok(BetaRule::PolakRibierePlus),
        other => Err(format!("expected \"fr\" or \"pr+\", got {other:?}")),
    }
}
