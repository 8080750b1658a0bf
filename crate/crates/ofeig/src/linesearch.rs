//! Strong Wolfe line search on a one-dimensional slice
//! `φ(α) = f(x + α·η)`.
//!
//! Classic two-phase structure: bracket a step interval by doubling, then
//! zoom with safeguarded cubic interpolation. Accepted steps satisfy
//!
//! * sufficient decrease: `φ(α) ≤ φ(0) + c₁·α·φ′(0)`, and
//! * curvature: `|φ′(α)| ≤ c₂·|φ′(0)|`.
//!
//! If the evaluation budget runs out before both hold, the best
//! sufficient-decrease point seen is returned with `curvature_ok = false`
//! so the caller can log the degraded step; the search never fabricates a
//! step it did not evaluate and never returns `α = 0`.

/// Tuning knobs. `c1 < c2 < 1` is required for the interval phase to make
/// progress on smooth functions.
#[derive(Debug, Clone)]
pub struct WolfeConfig {
    /// Sufficient-decrease slope fraction (classically `1e-4`).
    pub c1: f64,
    /// Curvature slope fraction; generous values suit conjugate-gradient
    /// directions.
    pub c2: f64,
    /// First trial step.
    pub alpha_init: f64,
    /// Total `φ` evaluation budget across bracketing, zooming, and
    /// fallback.
    pub max_evals: usize,
    /// Cap on zoom iterations, guarding against degenerate intervals.
    pub zoom_max: usize,
}

impl Default for WolfeConfig {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.4,
            alpha_init: 1.0,
            max_evals: 60,
            zoom_max: 30,
        }
    }
}

/// An accepted step. `phi`/`dphi` are the values the objective actually
/// reported at `alpha` — callers may rely on that to reuse state from
/// their last evaluation.
#[derive(Debug, Clone, Copy)]
pub struct WolfeResult {
    pub alpha: f64,
    pub phi: f64,
    pub dphi: f64,
    /// Sufficient decrease held at `alpha` (always true for returned
    /// steps).
    pub armijo_ok: bool,
    /// Curvature held at `alpha`; false marks a budget-exhausted fallback
    /// step.
    pub curvature_ok: bool,
    /// Number of `φ` evaluations consumed.
    pub evals: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum LineSearchError {
    #[error("search direction is not a descent direction (initial slope {dphi0:.3e} ≥ 0)")]
    NotDescent { dphi0: f64 },
    #[error("no step with sufficient decrease found in {evals} evaluations")]
    NoAdmissibleStep { evals: usize },
}

#[derive(Debug, Clone, Copy)]
struct Point {
    a: f64,
    phi: f64,
    dphi: f64,
}

struct Search<'a> {
    eval: &'a mut dyn FnMut(f64) -> (f64, f64),
    phi0: f64,
    dphi0: f64,
    c1: f64,
    c2: f64,
    budget: usize,
    evals: usize,
    /// Lowest-`φ` point seen that satisfies sufficient decrease; the
    /// fallback when the curvature condition cannot be met in budget.
    best_armijo: Option<Point>,
}

impl Search<'_> {
    fn probe(&mut self, a: f64) -> Point {
        debug_assert!(a > 0.0, "line search must not evaluate α ≤ 0");
        let (phi, dphi) = (self.eval)(a);
        self.evals += 1;
        let pt = Point { a, phi, dphi };
        if self.armijo(pt) && self.best_armijo.map_or(true, |b| pt.phi < b.phi) {
            self.best_armijo = Some(pt);
        }
        pt
    }

    fn armijo(&self, p: Point) -> bool {
        p.phi <= self.phi0 + self.c1 * p.a * self.dphi0
    }

    fn curvature(&self, p: Point) -> bool {
        p.dphi.abs() <= -self.c2 * self.dphi0
    }

    fn accept(&self, p: Point) -> WolfeResult {
        WolfeResult {
            alpha: p.a,
            phi: p.phi,
            dphi: p.dphi,
            armijo_ok: true,
            curvature_ok: true,
            evals: self.evals,
        }
    }

    fn out_of_budget(&self) -> bool {
        self.evals >= self.budget
    }

    /// Shrink `[lo, hi]` (function value at `lo` is the smaller one; the
    /// interval is known to contain strong-Wolfe points) until one is hit.
    fn zoom(&mut self, mut lo: Point, mut hi: Point, zoom_max: usize) -> Option<WolfeResult> {
        for _ in 0..zoom_max {
            if self.out_of_budget() {
                return None;
            }
            let width = (hi.a - lo.a).abs();
            if width <= 1e-12 * lo.a.abs().max(1.0) {
                return None;
            }
            let trial = interpolate_cubic(lo, hi).unwrap_or(0.5 * (lo.a + hi.a));
            let pt = self.probe(trial);
            if !self.armijo(pt) || pt.phi >= lo.phi {
                hi = pt;
            } else {
                if self.curvature(pt) {
                    return Some(self.accept(pt));
                }
                if pt.dphi * (hi.a - lo.a) >= 0.0 {
                    hi = lo;
                }
                lo = pt;
            }
        }
        None
    }

    fn fallback(&mut self, smallest_seen: f64) -> Result<WolfeResult, LineSearchError> {
        // Backtrack below the smallest step tried so far in whatever budget
        // remains; any sufficiently small step satisfies sufficient
        // decrease on a smooth descent slice.
        let mut a = 0.5 * smallest_seen;
        while !self.out_of_budget() && a > 0.0 {
            let pt = self.probe(a);
            if self.armijo(pt) {
                break;
            }
            a *= 0.5;
        }
        match self.best_armijo {
            Some(p) => Ok(WolfeResult {
                alpha: p.a,
                phi: p.phi,
                dphi: p.dphi,
                armijo_ok: true,
                curvature_ok: self.curvature(p),
                evals: self.evals,
            }),
            None => Err(LineSearchError::NoAdmissibleStep { evals: self.evals }),
        }
    }
}

/// Minimizer of the cubic through two points with values and slopes,
/// safeguarded to the middle 80 % of the interval; `None` requests a
/// bisection step instead.
fn interpolate_cubic(a: Point, b: Point) -> Option<f64> {
    let d1 = a.dphi + b.dphi - 3.0 * (a.phi - b.phi) / (a.a - b.a);
    let disc = d1 * d1 - a.dphi * b.dphi;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b.a - a.a).signum() * disc.sqrt();
    let denom = b.dphi - a.dphi + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let t = b.a - (b.a - a.a) * (b.dphi + d2 - d1) / denom;
    let (lo, hi) = if a.a < b.a { (a.a, b.a) } else { (b.a, a.a) };
    let margin = 0.1 * (hi - lo);
    if !t.is_finite() || t < lo + margin || t > hi - margin {
        return None;
    }
    Some(t)
}

/// Search along a descent slice for a strong-Wolfe step.
///
/// `eval(α)` must return `(φ(α), φ′(α))`; it is called once per trial step,
/// always with `α > 0`. `phi0`/`dphi0` are the values at `α = 0`, supplied
/// by the caller (who has them already — this keeps the slice evaluation
/// count at exactly one per trial step).
pub fn strong_wolfe(
    eval: &mut dyn FnMut(f64) -> (f64, f64),
    phi0: f64,
    dphi0: f64,
    cfg: &WolfeConfig,
) -> Result<WolfeResult, LineSearchError> {
    if dphi0 >= 0.0 {
        return Err(LineSearchError::NotDescent { dphi0 });
    }
    let mut s = Search {
        eval,
        phi0,
        dphi0,
        c1: cfg.c1,
        c2: cfg.c2,
        budget: cfg.max_evals.max(1),
        evals: 0,
        best_armijo: None,
    };

    let origin = Point { a: 0.0, phi: phi0, dphi: dphi0 };
    let mut prev = origin;
    let mut a = cfg.alpha_init;
    assert!(a > 0.0 && a.is_finite(), "initial step must be positive");
    let mut smallest = a;

    while !s.out_of_budget() {
        smallest = smallest.min(a);
        let pt = s.probe(a);
        if !s.armijo(pt) || (prev.a > 0.0 && pt.phi >= prev.phi) {
            if let Some(r) = s.zoom(prev, pt, cfg.zoom_max) {
                return Ok(r);
            }
            return s.fallback(smallest);
        }
        if s.curvature(pt) {
            return Ok(s.accept(pt));
        }
        if pt.dphi >= 0.0 {
            // Slope turned positive: the minimum is behind us.
            if let Some(r) = s.zoom(pt, prev, cfg.zoom_max) {
                return Ok(r);
            }
            return s.fallback(smallest);
        }
        prev = pt;
        a *= 2.0;
        if !a.is_finite() {
            break;
        }
    }
    s.fallback(smallest)
}
