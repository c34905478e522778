//! Goodness of fit and resampling helpers.

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquare {
    /// Pools independent tests by summing statistics and degrees of freedom.
    pub fn pooled(tests: &[ChiSquare]) -> Result<Self> {
        let statistic = tests.iter().map(|t| t.statistic).sum();
        let dof = tests.iter().map(|t| t.dof).sum();
        Self::from_statistic(statistic, dof)
    }

    pub fn from_statistic(statistic: f64, dof: usize) -> Result<Self> {
        let p_value = if statistic.is_infinite() {
            0.0
        } else if dof == 0 {
            1.0
        } else {
            let d = ChiSquared::new(dof as f64).map_err(|e| invalid(e.to_string()))?;
            d.sf(statistic)
        };
        Ok(Self {
            statistic,
            dof,
            p_value,
        })
    }
}

/// Pearson test of observed counts against exact cell probabilities. A count
/// in a zero-probability cell gives an infinite statistic.
pub fn chi_square(counts: &[u64], probs: &[f64]) -> Result<ChiSquare> {
    if counts.len() != probs.len() {
        return Err(invalid("counts and probabilities differ in length"));
    }
    let total: u64 = counts.iter().sum();
    let mut statistic = 0.0;
    let mut cells = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        if p <= 0.0 {
            if c > 0 {
                statistic = f64::INFINITY;
            }
            continue;
        }
        cells += 1;
        let e = p * total as f64;
        statistic += (c as f64 - e).powi(2) / e;
    }
    ChiSquare::from_statistic(statistic, cells.saturating_sub(1))
}

/// Multiplicities of one bootstrap resample of `k` units.
pub fn resample_counts<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<u32> {
    let mut c = vec![0u32; k];
    for _ in 0..k {
        c[rng.random_range(0..k)] += 1;
    }
    c
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_fit_has_p_one() {
        let t = chi_square(&[25, 25, 50], &[0.25, 0.25, 0.5]).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.dof, 2);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn impossible_cell_rejects() {
        let t = chi_square(&[10, 1], &[1.0, 0.0]).unwrap();
        assert_eq!(t.p_value, 0.0);
    }

    #[test]
    fn known_tail() {
        // P(χ²₁ > 3.841) = 0.05
        let t = ChiSquare::from_statistic(3.841_458_820_694_124, 1).unwrap();
        assert!((t.p_value - 0.05).abs() < 1e-9);
    }

    #[test]
    fn quantile_endpoints() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&x, 0.0), 1.0);
        assert_eq!(quantile(&x, 1.0), 4.0);
        assert_eq!(quantile(&x, 0.5), 2.5);
    }
}
