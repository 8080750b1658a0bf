//! Prescribed eigenvalue families for synthetic test problems.
//!
//! Every family yields `n` nonnegative values sorted non-increasingly, with
//! the first `r` nonzero (generically) and the remaining `n - r` exactly
//! zero, so the target matrix has rank at most `r`.

use std::str::FromStr;

use super::OpError;
use crate::rng::SplitMix64;

/// Shape of the nonzero part of a synthetic spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    /// `|N(0,1)|` draws, sorted descending. Seed-reproducible.
    Random,
    /// Linearly spaced: `λ_i = 1 - (i-1)/n`, `i = 1..=r`.
    Uniform,
    /// A handful of separated leading values, then a flat tail:
    /// `14/16, 10/16, 8/16, 7/16, 5/16, 1/16, 1/16, …`.
    UShape,
    /// Geometric decay `λ_i = s·2^{-i}` with `s = 2^{1+⌊log₂ n⌋}/n`,
    /// so `λ_1 ≤ 1` and successive values halve.
    Logarithm,
}

impl FromStr for SpectrumKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Self::Random),
            "uniform" => Ok(Self::Uniform),
            "ushape" => Ok(Self::UShape),
            "logarithm" => Ok(Self::Logarithm),
            other => Err(format!(
                "unknown spectrum kind {other:?} (expected random, uniform, ushape, or logarithm)"
            )),
        }
    }
}

impl SpectrumKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::Uniform => "uniform",
            Self::UShape => "ushape",
            Self::Logarithm => "logarithm",
        }
    }
}

/// Generate `n` eigenvalues with `r` leading nonzeros of the given shape.
/// `seed` only matters for [`SpectrumKind::Random`].
pub fn generate_spectrum(
    kind: SpectrumKind,
    n: usize,
    r: usize,
    seed: u64,
) -> Result<Vec<f64>, OpError> {
    if r > n {
        return Err(OpError::RankExceedsDimension { r, n });
    }
    let mut lambda = vec![0.0; n];
    match kind {
        SpectrumKind::Random => {
            let mut rng = SplitMix64::new(seed);
            for v in lambda.iter_mut().take(r) {
                *v = rng.next_normal().abs();
            }
            lambda[..r].sort_by(|a, b| b.partial_cmp(a).unwrap());
        }
        SpectrumKind::Uniform => {
            for (i, v) in lambda.iter_mut().take(r).enumerate() {
                *v = 1.0 - i as f64 / n as f64;
            }
        }
        SpectrumKind::UShape => {
            const HEAD: [f64; 5] = [14.0 / 16.0, 10.0 / 16.0, 8.0 / 16.0, 7.0 / 16.0, 5.0 / 16.0];
            for (i, v) in lambda.iter_mut().take(r).enumerate() {
                *v = if i < HEAD.len() { HEAD[i] } else { 1.0 / 16.0 };
            }
        }
        SpectrumKind::Logarithm => {
            let scale = 2f64.powi(1 + n.ilog2() as i32) / n as f64;
            for (i, v) in lambda.iter_mut().take(r).enumerate() {
                *v = scale * 2f64.powi(-(i as i32 + 1));
            }
        }
    }
    Ok(lambda)
}
