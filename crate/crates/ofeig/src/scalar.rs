//! Scalar abstraction over the real and complex fields.
//!
//! Operators, geometry, and solvers are generic over [`Scalar`] so the
//! real-symmetric and complex-Hermitian cases share one code path. `f64` is
//! the degenerate case with trivial conjugation; `Complex64` carries the
//! full conjugate structure. The ambient vector space is always treated as
//! a *real* vector space with inner product `Re tr(A* B)`, which is why
//! [`Scalar::re`] and real-coefficient scaling show up throughout.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::rng::SplitMix64;

pub trait Scalar:
    Copy
    + Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    const ZERO: Self;
    const ONE: Self;
    /// Field label used in trace headers and reports.
    const FIELD: &'static str;

    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn from_re(x: f64) -> Self;
    /// Multiplication by a real coefficient.
    fn scale(self, t: f64) -> Self;
    /// `|s|²` without an intermediate square root.
    fn abs_sq(self) -> f64;
    fn abs(self) -> f64 {
        self.abs_sq().sqrt()
    }
    /// Sample with unit variance over the field (complex: ½ per component).
    fn sample_normal(rng: &mut SplitMix64) -> Self;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const FIELD: &'static str = "real";

    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn from_re(x: f64) -> Self {
        x
    }
    fn scale(self, t: f64) -> Self {
        self * t
    }
    fn abs_sq(self) -> f64 {
        self * self
    }
    fn sample_normal(rng: &mut SplitMix64) -> Self {
        rng.next_normal()
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64 { re: 0.0, im: 0.0 };
    const ONE: Self = Complex64 { re: 1.0, im: 0.0 };
    const FIELD: &'static str = "complex";

    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn scale(self, t: f64) -> Self {
        Complex64::new(self.re * t, self.im * t)
    }
    fn abs_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
    fn sample_normal(rng: &mut SplitMix64) -> Self {
        const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(rng.next_normal() * INV_SQRT2, rng.next_normal() * INV_SQRT2)
    }
}
