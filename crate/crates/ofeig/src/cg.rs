//! Nonlinear conjugate gradient on the factor space.
//!
//! Minimizes `f(x) = ½‖xxᴴ − A‖²_F` over `n×p` factors `x` without ever
//! forming `xxᴴ` or `A`: each objective/gradient evaluation costs one
//! operator application plus `O(np²)` flops, using the identity
//! `f(x) = ½‖xᴴx‖²_F − Re⟨x, Ax⟩ + ½‖A‖²_F` (the constant is dropped
//! internally and restored in reports when the operator knows `‖A‖²_F`).
//!
//! At every gradient evaluation point the Euclidean gradient is already
//! horizontal with respect to the unitary symmetry `x ↦ xq`, so the default
//! ("implicit") mode performs no projections at all. The
//! `explicit_projection` mode runs the full quotient-space machinery —
//! projecting the gradient and transporting the previous direction and
//! gradient through the horizontal splitting — and records how large the
//! vertical corrections actually were, which lets tests verify the
//! implicit shortcut instead of assuming it.

use std::time::Instant;

use crate::geometry::{
    egrad_with, project_horizontal, real_inner, retract, GeometryError, GramFactor,
};
use crate::linesearch::{strong_wolfe, LineSearchError, WolfeConfig};
use crate::linop::{HermitianOp, OpError};
use crate::mat::Mat;
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

/// Conjugate-direction update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaRule {
    /// `β = ‖ξ_{k+1}‖² / ‖ξ_k‖²`. With the strong Wolfe curvature constant
    /// below ½ every direction it produces is a descent direction.
    FletcherReeves,
    /// `β = max(0, ⟨ξ_{k+1} − ξ_k, ξ_{k+1}⟩ / ‖ξ_k‖²)` — the nonnegative
    /// Polak–Ribière variant, with the previous gradient transported when
    /// explicit projection is on.
    PolakRibierePlus,
}

impl BetaRule {
    pub fn name(self) -> &'static str {
        match self {
            Self::FletcherReeves => "fr",
            Self::PolakRibierePlus => "pr+",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgConfig {
    pub beta: BetaRule,
    /// Stop when the gradient norm drops to this value.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Run the full quotient-geometry projections and record their size
    /// instead of relying on the gradient being horizontal automatically.
    pub explicit_projection: bool,
    /// Line-search constants. `alpha_init` here is a scale: iteration 0
    /// tries `alpha_init / ‖∇f(x₀)‖`, later iterations warm-start from the
    /// previous accepted step.
    pub wolfe: WolfeConfig,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            beta: BetaRule::PolakRibierePlus,
            epsilon: 1e-6,
            max_iters: 1000,
            explicit_projection: false,
            wolfe: WolfeConfig::default(),
        }
    }
}

/// One completed iteration: the state it started from and the step it took.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub iter: usize,
    /// Objective at the starting iterate (true value when the operator
    /// knows `‖A‖²_F`, otherwise shifted by that constant).
    pub f: f64,
    /// Gradient norm at the starting iterate.
    pub grad_norm: f64,
    /// Accepted step length.
    pub alpha: f64,
    /// Coefficient used to build this iteration's search direction
    /// (0 on iteration 0 and after restarts).
    pub beta: f64,
    /// Angle between the search direction and steepest descent:
    /// `−φ′(0) / (‖ξ‖·‖η‖)`.
    pub cos_theta: f64,
    /// `φ′(0)/‖ξ‖²`; for Fletcher–Reeves directions under the strong Wolfe
    /// conditions this stays inside `[−1/(1−c₂), −(1−2c₂)/(1−c₂)]`.
    pub descent_ratio: f64,
    pub armijo_ok: bool,
    pub curvature_ok: bool,
    /// Largest vertical component the explicit geometry actually removed
    /// while moving to the next iterate: the maximum over the gradient
    /// projection and the direction transport (0 when projections are
    /// off). The transported *previous gradient* is excluded — its
    /// vertical part is genuinely nonzero but orthogonal to every
    /// horizontal vector it is paired with, so it never influences the
    /// iteration.
    pub omega_norm: f64,
    /// Norm of the search direction (not part of the CSV schema; kept for
    /// invariant checks).
    pub eta_norm: f64,
    /// Wall time of the whole iteration.
    pub wall_ns: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    /// Gradient norm reached `epsilon`.
    Converged,
    /// Iteration budget exhausted first (a result, not an error).
    IterationCap,
    /// Progress stopped being representable in double precision before the
    /// gradient tolerance was met: the accepted step `α‖η‖` fell below the
    /// spacing of the iterate itself (≈ ε_machine·‖x‖), so applying it
    /// would not move `x`. A smaller `epsilon` is unattainable at this
    /// scale.
    Stalled,
}

pub struct CgOutcome<S> {
    pub x: Mat<S>,
    pub status: CgStatus,
    /// Completed iterations (equals `trace.len()`).
    pub iters: usize,
    pub trace: Vec<TraceRecord>,
    /// Objective at the final iterate, on the same convention as
    /// [`TraceRecord::f`].
    pub final_f: f64,
    pub final_grad_norm: f64,
    /// Whether the `f` values include the `½‖A‖²_F` constant.
    pub f_includes_constant: bool,
    /// Iterates whose Gram matrix looked nearly singular (explicit mode).
    pub rank_warnings: usize,
    /// Times the conjugate direction had to be reset to steepest descent.
    pub restarts: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("operator application failed: {0}")]
    Op(#[from] OpError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("line search failed at iteration {iter}: {source}")]
    LineSearch {
        iter: usize,
        #[source]
        source: LineSearchError,
    },
}

/// Random starting factor with entries drawn from `N(0, 1/n)` (overall
/// scale of order an eigenvalue-one matrix), reproducible from the seed.
pub fn initial_factor<S: Scalar>(n: usize, p: usize, seed: u64) -> Mat<S> {
    let mut rng = SplitMix64::new(seed);
    Mat::random_normal(n, p, 1.0 / (n as f64).sqrt(), &mut rng)
}

/// Everything one evaluation produces (one operator application).
struct FullEval<S> {
    x: Mat<S>,
    ax: Mat<S>,
    gram: Mat<S>,
    f_shift: f64,
    grad: Mat<S>,
}

fn eval_at<S: Scalar>(op: &dyn HermitianOp<S>, x: Mat<S>) -> Result<FullEval<S>, OpError> {
    let parts = egrad_with(op, &x)?;
    let f_shift = 0.5 * parts.gram.norm_fro_sq() - real_inner(&x, &parts.ax);
    Ok(FullEval { x, ax: parts.ax, gram: parts.gram, f_shift, grad: parts.grad })
}

/// The objective restricted to a ray is exactly a quartic:
/// `φ(α) − φ(0) = d₁α + d₂α² + d₃α³ + d₄α⁴` with
///
/// ```text
/// d₁ = ⟨G,P⟩ − 2·Re⟨η,Ax⟩          P = xᴴη + ηᴴx,  Q = ηᴴη
/// d₂ = ⟨G,Q⟩ + ½‖P‖² − Re⟨η,Aη⟩    G = xᴴx,  ⟨·,·⟩ = Re tr(·ᴴ·)
/// d₃ = ⟨P,Q⟩
/// d₄ = ½‖Q‖²
/// ```
///
/// Building it costs one operator application (`Aη`) plus `O(np²)`; every
/// line-search probe after that is a handful of flops. Decisive for
/// accuracy, not just speed: the Wolfe conditions compare *differences* of
/// φ, and subtracting two full objective values loses all significant
/// digits once the decrease is below `ε_machine·|φ|` (at `‖A‖_F ~ 10³` that
/// wall sits near gradient norms of 10⁻³). The polynomial form measures the
/// decrease directly in its own scale, so the search stays exact all the
/// way down to steps the iterate cannot even represent.
struct RayQuartic {
    d1: f64,
    d2: f64,
    d3: f64,
    d4: f64,
}

impl RayQuartic {
    fn new<S: Scalar>(
        op: &dyn HermitianOp<S>,
        cur: &FullEval<S>,
        eta: &Mat<S>,
    ) -> Result<Self, OpError> {
        let a_eta = op.apply(eta)?;
        let xh = cur.x.adjoint_times(eta);
        let mut p = xh.adjoint();
        p.add_scaled(1.0, &xh);
        let q = eta.adjoint_times(eta);
        let d1 = real_inner(&cur.gram, &p) - 2.0 * real_inner(eta, &cur.ax);
        let d2 = real_inner(&cur.gram, &q) + 0.5 * p.norm_fro_sq() - real_inner(eta, &a_eta);
        let d3 = real_inner(&p, &q);
        let d4 = 0.5 * q.norm_fro_sq();
        Ok(Self { d1, d2, d3, d4 })
    }

    /// `φ(α) − φ(0)`.
    fn phi(&self, a: f64) -> f64 {
        a * (self.d1 + a * (self.d2 + a * (self.d3 + a * self.d4)))
    }

    /// `φ′(α)`.
    fn dphi(&self, a: f64) -> f64 {
        self.d1 + a * (2.0 * self.d2 + a * (3.0 * self.d3 + a * 4.0 * self.d4))
    }
}

pub fn cg_solve<S: Scalar>(
    op: &dyn HermitianOp<S>,
    x0: Mat<S>,
    cfg: &CgConfig,
) -> Result<CgOutcome<S>, SolveError> {
    cg_solve_observed(op, x0, cfg, &mut |_, _, _| {})
}

/// [`cg_solve`] with a per-iterate callback `observer(k, x_k, ‖ξ_k‖)`,
/// invoked for every iterate reached including the initial and final ones.
pub fn cg_solve_observed<S: Scalar>(
    op: &dyn HermitianOp<S>,
    x0: Mat<S>,
    cfg: &CgConfig,
    observer: &mut dyn FnMut(usize, &Mat<S>, f64),
) -> Result<CgOutcome<S>, SolveError> {
    assert_eq!(x0.rows(), op.dim(), "operator/factor dimension mismatch");
    let f_const = op.frob_norm_sq().map(|n2| 0.5 * n2);
    let mut rank_warnings = 0usize;
    let mut restarts = 0usize;

    let mut cur = eval_at(op, x0)?;
    let mut xi = if cfg.explicit_projection {
        let factor = GramFactor::new(&cur.gram);
        if factor.near_rank_deficient() {
            rank_warnings += 1;
        }
        project_horizontal(&cur.x, &factor, &cur.grad)?.horizontal
    } else {
        cur.grad.clone()
    };
    let mut gnorm_sq = xi.norm_fro_sq();
    let mut eta = xi.scaled(-1.0);
    let mut beta_of_eta = 0.0f64;
    let mut warm: Option<(f64, f64)> = None; // (α_k, φ′_k(0)) of the previous step

    let mut trace: Vec<TraceRecord> = Vec::new();
    let status;
    let mut k = 0usize;

    loop {
        let gnorm = gnorm_sq.sqrt();
        observer(k, &cur.x, gnorm);
        if gnorm <= cfg.epsilon {
            status = CgStatus::Converged;
            break;
        }
        if k >= cfg.max_iters {
            status = CgStatus::IterationCap;
            break;
        }
        let started = Instant::now();

        let mut ray = RayQuartic::new(op, &cur, &eta)?;
        if ray.d1 >= 0.0 {
            // The conjugate direction stopped descending (possible for the
            // nonnegative Polak–Ribière rule under roundoff): restart.
            eta = xi.scaled(-1.0);
            beta_of_eta = 0.0;
            restarts += 1;
            ray = RayQuartic::new(op, &cur, &eta)?;
            if ray.d1 >= 0.0 {
                // Even steepest descent measures as non-descending: the
                // directional derivative is below its own roundoff.
                status = CgStatus::Stalled;
                break;
            }
        }
        let dphi0 = ray.d1;

        let alpha_init = match warm {
            None => cfg.wolfe.alpha_init / gnorm.max(f64::MIN_POSITIVE),
            Some((prev_alpha, prev_dphi)) => {
                let raw = prev_alpha * (prev_dphi / dphi0);
                if raw.is_finite() && raw > 0.0 {
                    raw.clamp(1e-3 * prev_alpha, 1e3 * prev_alpha)
                } else {
                    prev_alpha
                }
            }
        };
        let wolfe_cfg = WolfeConfig { alpha_init, ..cfg.wolfe.clone() };

        // The Wolfe conditions compare differences of φ, so searching on
        // the shifted polynomial (φ(0) = 0) changes nothing.
        let mut slice = |alpha: f64| (ray.phi(alpha), ray.dphi(alpha));
        let accepted = strong_wolfe(&mut slice, 0.0, dphi0, &wolfe_cfg)
            .map_err(|source| SolveError::LineSearch { iter: k, source })?;

        let eta_norm = eta.norm_fro();
        // A step below the iterate's own floating-point spacing would not
        // move `x`; accepting it would only launder roundoff into the trace.
        if accepted.alpha * eta_norm <= f64::EPSILON * cur.x.norm_fro() {
            status = CgStatus::Stalled;
            break;
        }

        let next = eval_at(op, retract(&cur.x, &eta, accepted.alpha))?;

        // A step that could not satisfy the curvature condition breaks the
        // conjugacy analysis; restart from steepest descent next round.
        if !accepted.curvature_ok {
            restarts += 1;
        }

        // Horizontal gradient at the new iterate, plus the transported
        // previous gradient/direction feeding the conjugacy update.
        let mut omega_norm = 0.0f64;
        let (xi_new, beta, eta_new) = if cfg.explicit_projection {
            let factor = GramFactor::new(&next.gram);
            if factor.near_rank_deficient() {
                rank_warnings += 1;
            }
            let grad_split = project_horizontal(&next.x, &factor, &next.grad)?;
            let old_grad_split = project_horizontal(&next.x, &factor, &xi)?;
            let dir_split = project_horizontal(&next.x, &factor, &eta)?;
            omega_norm = grad_split.omega.norm_fro().max(dir_split.omega.norm_fro());
            let xi_new = grad_split.horizontal;
            let beta = if accepted.curvature_ok {
                beta_value(cfg.beta, &xi_new, &old_grad_split.horizontal, gnorm_sq)
            } else {
                0.0
            };
            let mut eta_new = xi_new.scaled(-1.0);
            eta_new.add_scaled(beta, &dir_split.horizontal);
            (xi_new, beta, eta_new)
        } else {
            let xi_new = next.grad.clone();
            let beta = if accepted.curvature_ok {
                beta_value(cfg.beta, &xi_new, &xi, gnorm_sq)
            } else {
                0.0
            };
            let mut eta_new = xi_new.scaled(-1.0);
            eta_new.add_scaled(beta, &eta);
            (xi_new, beta, eta_new)
        };

        trace.push(TraceRecord {
            iter: k,
            f: cur.f_shift + f_const.unwrap_or(0.0),
            grad_norm: gnorm,
            alpha: accepted.alpha,
            beta: beta_of_eta,
            // Clamped: near convergence the polynomial's d₁ can exceed the
            // Cauchy–Schwarz bound by a few ulps of cancellation noise.
            cos_theta: (-dphi0 / (gnorm * eta_norm).max(f64::MIN_POSITIVE)).min(1.0),
            descent_ratio: dphi0 / gnorm_sq.max(f64::MIN_POSITIVE),
            armijo_ok: accepted.armijo_ok,
            curvature_ok: accepted.curvature_ok,
            omega_norm,
            eta_norm,
            wall_ns: started.elapsed().as_nanos(),
        });

        warm = Some((accepted.alpha, dphi0));
        cur = next;
        xi = xi_new;
        gnorm_sq = xi.norm_fro_sq();
        eta = eta_new;
        beta_of_eta = beta;
        k += 1;
    }

    Ok(CgOutcome {
        status,
        iters: k,
        final_f: cur.f_shift + f_const.unwrap_or(0.0),
        final_grad_norm: gnorm_sq.sqrt(),
        x: cur.x,
        trace,
        f_includes_constant: f_const.is_some(),
        rank_warnings,
        restarts,
    })
}

fn beta_value<S: Scalar>(rule: BetaRule, xi_new: &Mat<S>, xi_old: &Mat<S>, gnorm_sq_old: f64) -> f64 {
    match rule {
        BetaRule::FletcherReeves => {
            // Fletcher–Reeves keeps stale gradient information forever and
            // is notorious for jamming (β ≈ 1, vanishing steps). The
            // classic remedy: restart once successive gradients stop
            // being nearly orthogonal.
            let overlap = real_inner(xi_old, xi_new).abs();
            let new_sq = xi_new.norm_fro_sq();
            if overlap >= 0.2 * new_sq {
                0.0
            } else {
                new_sq / gnorm_sq_old
            }
        }
        BetaRule::PolakRibierePlus => {
            let num = xi_new.norm_fro_sq() - real_inner(xi_old, xi_new);
            (num / gnorm_sq_old).max(0.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{
        generate_spectrum, random_orthonormal_basis, HermitianOp, Laplacian1d, SpectralDense,
        SpectrumKind,
    };

    fn diag_op(vals: &[f64]) -> SpectralDense<f64> {
        SpectralDense::new(Mat::identity(vals.len()), vals.to_vec()).unwrap()
    }

    fn random_psd(n: usize, seed: u64) -> SpectralDense<f64> {
        let lambda = generate_spectrum(SpectrumKind::Uniform, n, n, seed).unwrap();
        SpectralDense::new(random_orthonormal_basis::<f64>(n, seed.wrapping_add(1)), lambda)
            .unwrap()
    }

    #[test]
    fn rank_one_diagonal_recovers_top_eigenvalue() {
        let op = diag_op(&[3.0, 1.0]);
        let cfg = CgConfig { epsilon: 5e-8, max_iters: 200, ..CgConfig::default() };
        let out = cg_solve(&op, initial_factor(2, 1, 7), &cfg).unwrap();
        assert_eq!(out.status, CgStatus::Converged);
        // ‖x‖² → top eigenvalue, f → ½·(discarded eigenvalue)²
        let lam = out.x.norm_fro_sq();
        assert!((lam - 3.0).abs() < 1e-8, "recovered {lam}");
        assert!(out.f_includes_constant);
        assert!((out.final_f - 0.5).abs() < 1e-8, "final f {}", out.final_f);
    }

    #[test]
    fn both_rules_converge_on_the_grid_operator() {
        let op = Laplacian1d::new(20);
        // operator scale sets the attainable gradient floor
        let a_norm = HermitianOp::<f64>::frob_norm_sq(&op).unwrap().sqrt();
        for rule in [BetaRule::FletcherReeves, BetaRule::PolakRibierePlus] {
            let cfg = CgConfig {
                beta: rule,
                epsilon: 1e-7 * a_norm,
                max_iters: 500,
                ..CgConfig::default()
            };
            let out = cg_solve(&op, initial_factor::<f64>(20, 2, 3), &cfg).unwrap();
            assert_ne!(out.status, CgStatus::IterationCap, "{rule:?} hit the cap");
            assert!(
                out.final_grad_norm <= 1e-5 * a_norm,
                "{rule:?}: final gradient {} vs scale {a_norm}",
                out.final_grad_norm
            );
            // The objective must decrease monotonically up to evaluation
            // noise: each recorded f is recomputed from scratch, which
            // carries cancellation noise on the scale of ε·‖A‖²_F even when
            // the true decrease is smaller.
            let noise = 32.0 * f64::EPSILON * a_norm * a_norm;
            for w in out.trace.windows(2) {
                assert!(
                    w[1].f <= w[0].f + noise,
                    "{rule:?}: f increased at iter {} ({} -> {})",
                    w[1].iter,
                    w[0].f,
                    w[1].f
                );
            }
            assert!(out.final_f <= out.trace.last().unwrap().f + noise);
        }
    }

    #[test]
    fn ray_polynomial_matches_direct_objective_differences() {
        let op = random_psd(14, 33);
        let cur = eval_at(&op, initial_factor::<f64>(14, 3, 71)).unwrap();
        let mut rng = SplitMix64::new(0xe7a);
        let eta = Mat::<f64>::random_normal(14, 3, 1.0, &mut rng);
        let ray = RayQuartic::new(&op, &cur, &eta).unwrap();

        // d₁ is the directional derivative at the base point.
        let d1_direct = real_inner(&cur.grad, &eta);
        assert!(
            (ray.d1 - d1_direct).abs() <= 1e-10 * d1_direct.abs().max(1.0),
            "d1 {} vs direct {d1_direct}",
            ray.d1
        );

        let scale = cur.f_shift.abs().max(1.0);
        for &alpha in &[0.05, 0.2, 0.7, 1.5] {
            let probe = eval_at(&op, retract(&cur.x, &eta, alpha)).unwrap();
            let diff_direct = probe.f_shift - cur.f_shift;
            assert!(
                (ray.phi(alpha) - diff_direct).abs() <= 1e-10 * scale,
                "phi({alpha}) = {} vs direct {diff_direct}",
                ray.phi(alpha)
            );
            let slope_direct = real_inner(&probe.grad, &eta);
            assert!(
                (ray.dphi(alpha) - slope_direct).abs() <= 1e-9 * slope_direct.abs().max(scale),
                "dphi({alpha}) = {} vs direct {slope_direct}",
                ray.dphi(alpha)
            );
        }

        // Centered finite differences of the polynomial agree with its own
        // derivative, pinning the coefficient bookkeeping itself.
        let h = 1e-6;
        for &alpha in &[0.1, 0.9] {
            let fd = (ray.phi(alpha + h) - ray.phi(alpha - h)) / (2.0 * h);
            assert!((fd - ray.dphi(alpha)).abs() <= 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn trace_records_are_contiguous_and_sane() {
        let op = random_psd(16, 5);
        let cfg = CgConfig { epsilon: 1e-7, max_iters: 300, ..CgConfig::default() };
        let out = cg_solve(&op, initial_factor(16, 2, 11), &cfg).unwrap();
        assert_eq!(out.iters, out.trace.len());
        for (i, rec) in out.trace.iter().enumerate() {
            assert_eq!(rec.iter, i);
            assert!(rec.alpha > 0.0);
            assert!(rec.armijo_ok);
            assert!(rec.grad_norm > 0.0);
            assert!(rec.descent_ratio < 0.0, "iter {i} not a descent step");
            assert!(rec.cos_theta > 0.0 && rec.cos_theta <= 1.0 + 1e-12);
            assert!(rec.beta >= 0.0);
            assert_eq!(rec.omega_norm, 0.0); // projections are off
        }
    }

    #[test]
    fn fletcher_reeves_descent_ratio_band() {
        let op = random_psd(16, 9);
        let cfg = CgConfig {
            beta: BetaRule::FletcherReeves,
            epsilon: 1e-7,
            max_iters: 400,
            ..CgConfig::default()
        };
        let out = cg_solve(&op, initial_factor(16, 2, 13), &cfg).unwrap();
        assert_eq!(out.status, CgStatus::Converged);
        let c2 = cfg.wolfe.c2;
        let (lo, hi) = (-1.0 / (1.0 - c2), -(1.0 - 2.0 * c2) / (1.0 - c2));
        for rec in &out.trace {
            assert!(
                rec.descent_ratio >= lo - 1e-12 && rec.descent_ratio <= hi + 1e-12,
                "iter {}: descent ratio {} outside [{lo}, {hi}]",
                rec.iter,
                rec.descent_ratio
            );
        }
    }

    #[test]
    fn explicit_projection_matches_implicit_run() {
        let op = random_psd(20, 21);
        let base = CgConfig { epsilon: 0.0, max_iters: 25, ..CgConfig::default() };
        let explicit = CgConfig { explicit_projection: true, ..base.clone() };
        let x0 = initial_factor::<f64>(20, 3, 17);

        let mut implicit_iters: Vec<Mat<f64>> = Vec::new();
        cg_solve_observed(&op, x0.clone(), &base, &mut |_, x, _| {
            implicit_iters.push(x.clone());
        })
        .unwrap();
        let mut explicit_iters: Vec<Mat<f64>> = Vec::new();
        let out = cg_solve_observed(&op, x0, &explicit, &mut |_, x, _| {
            explicit_iters.push(x.clone());
        })
        .unwrap();

        assert_eq!(implicit_iters.len(), explicit_iters.len());
        for (a, b) in implicit_iters.iter().zip(&explicit_iters) {
            assert!(a.max_abs_diff(b) <= 1e-8 * a.norm_fro().max(1.0));
        }
        // the measured vertical components stay at roundoff level
        for rec in &out.trace {
            assert!(rec.omega_norm <= 1e-10 * rec.eta_norm.max(1e-300), "iter {}", rec.iter);
        }
    }

    #[test]
    fn starts_converged_at_a_minimizer() {
        // x₀ = exact factor of A = diag(4, 1): gradient is zero there.
        let op = diag_op(&[4.0, 1.0]);
        let mut x0 = Mat::<f64>::zeros(2, 2);
        x0[(0, 0)] = 2.0;
        x0[(1, 1)] = 1.0;
        let out = cg_solve(&op, x0, &CgConfig { epsilon: 1e-9, ..CgConfig::default() }).unwrap();
        assert_eq!(out.status, CgStatus::Converged);
        assert_eq!(out.iters, 0);
        assert!(out.trace.is_empty());
        assert!((out.final_f - 0.0).abs() < 1e-12);
    }

    #[test]
    fn iteration_cap_is_reported_not_errored() {
        let op = random_psd(24, 2);
        let cfg = CgConfig { epsilon: 1e-16, max_iters: 3, ..CgConfig::default() };
        let out = cg_solve(&op, initial_factor(24, 2, 5), &cfg).unwrap();
        assert_eq!(out.status, CgStatus::IterationCap);
        assert_eq!(out.iters, 3);
        assert_eq!(out.trace.len(), 3);
    }

    #[test]
    fn observer_sees_every_iterate_once() {
        let op = random_psd(12, 4);
        let cfg = CgConfig { epsilon: 1e-16, max_iters: 10, ..CgConfig::default() };
        let mut seen = Vec::new();
        cg_solve_observed(&op, initial_factor(12, 2, 1), &cfg, &mut |k, _, g| {
            seen.push((k, g));
        })
        .unwrap();
        assert_eq!(seen.len(), 11); // iterates 0..=10
        for (i, (k, g)) in seen.iter().enumerate() {
            assert_eq!(*k, i);
            assert!(*g > 0.0);
        }
    }

    #[test]
    fn initial_factor_is_reproducible_and_scaled() {
        let a = initial_factor::<f64>(400, 3, 42);
        let b = initial_factor::<f64>(400, 3, 42);
        assert_eq!(a, b);
        let c = initial_factor::<f64>(400, 3, 43);
        assert!(a.max_abs_diff(&c) > 0.0);
        // E‖x‖² = p with the 1/n variance scaling
        let nsq = a.norm_fro_sq();
        assert!(nsq > 1.5 && nsq < 4.5, "‖x₀‖² = {nsq}");
    }

    #[test]
    fn complex_field_converges() {
        use num_complex::Complex64;
        let lambda = generate_spectrum(SpectrumKind::Uniform, 12, 12, 3).unwrap();
        let op =
            SpectralDense::new(random_orthonormal_basis::<Complex64>(12, 6), lambda).unwrap();
        let cfg = CgConfig { epsilon: 1e-7, max_iters: 300, ..CgConfig::default() };
        let out = cg_solve(&op, initial_factor::<Complex64>(12, 2, 9), &cfg).unwrap();
        assert_eq!(out.status, CgStatus::Converged);
    }
}
