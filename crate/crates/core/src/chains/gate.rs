//! Two-site stochastic gates.
//!
//! Both gates leave unequal pairs alone. On the equal-pair subspace
//! `{aa : a ∈ 1..N}` they act as `α I + β J` (`J` the all-ones block):
//!
//! | gate           | α         | β       |
//! |----------------|-----------|---------|
//! | pair-flip      | 0         | 1/N     |
//! | Temperley-Lieb | 1 - 2/N   | 2/N²    |
//!
//! so an equal pair becomes `bb` with probability `β` for each `b ≠ a` and
//! stays with probability `α + β`. At `N = 2` the two coincide.

use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::sparse::Weight;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    #[default]
    #[serde(rename = "pf")]
    PairFlip,
    #[serde(rename = "tl")]
    TemperleyLieb,
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "pf" | "pairflip" | "pair-flip" => Ok(Self::PairFlip),
            "tl" | "temperleylieb" | "temperley-lieb" => Ok(Self::TemperleyLieb),
            _ => Err(Error::Parse(format!("unknown gate {s:?} (expected pf or tl)"))),
        }
    }
}

impl std::fmt::Display for GateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::PairFlip => "pf",
            Self::TemperleyLieb => "tl",
        })
    }
}

impl GateKind {
    /// `(α, β)` as exact fractions `((num, den), (num, den))`.
    pub fn block_ratios(self, n: u32) -> ((u64, u64), (u64, u64)) {
        let n = u64::from(n);
        match self {
            Self::PairFlip => ((0, 1), (1, n)),
            Self::TemperleyLieb => ((n - 2, n), (2, n * n)),
        }
    }

    pub fn block<T: Weight>(self, n: u32) -> (T, T) {
        let ((an, ad), (bn, bd)) = self.block_ratios(n);
        (T::from_u64_ratio(an, ad), T::from_u64_ratio(bn, bd))
    }

    /// Probability that an equal pair is rewritten to a different symbol.
    pub fn flip_probability(self, n: u32) -> f64 {
        let ((_, _), (bn, bd)) = self.block_ratios(n);
        (n as f64 - 1.0) * bn as f64 / bd as f64
    }

    /// `(α', β')` of the positive square root `√(α I + β J) = α' I + β' J`.
    /// The block has eigenvalues `α` and `α + Nβ = 1`.
    pub fn sqrt_block(self, n: u32) -> (f64, f64) {
        let (a, _): (f64, f64) = self.block(n);
        let ra = a.sqrt();
        (ra, (1.0 - ra) / f64::from(n))
    }

    /// The full `N² × N²` gate; row `a·N + b` holds the output law of the pair
    /// `(a, b)` (0-based).
    pub fn matrix(self, n: u32) -> DMatrix<f64> {
        let nn = n as usize;
        let (alpha, beta): (f64, f64) = self.block(n);
        let mut m = DMatrix::zeros(nn * nn, nn * nn);
        for a in 0..nn {
            for b in 0..nn {
                let i = a * nn + b;
                if a != b {
                    m[(i, i)] = 1.0;
                } else {
                    for c in 0..nn {
                        m[(i, c * nn + c)] = beta + if c == a { alpha } else { 0.0 };
                    }
                }
            }
        }
        m
    }
}
