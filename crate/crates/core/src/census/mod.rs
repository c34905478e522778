//! Exact sector dimensions and the asymptotic formulas built on them.
//!
//! `|K_d^(L)|` counts length-`L` strings whose irreducible string is one fixed
//! depth-`d` vertex. It is the number of `L`-step walks on the `N`-regular tree
//! from the root to that vertex, and satisfies
//!
//! ```text
//! |K_0^(L)| = N |K_1^(L-1)|
//! |K_d^(L)| = |K_{d-1}^(L-1)| + (N-1) |K_{d+1}^(L-1)|     (d ≥ 1)
//! ```
//!
//! with `|K_0^(0)| = 1`. This recurrence is the production path; the
//! alternating-sum closed forms in [`closed_form`] are kept as cross-checks.

pub mod closed_form;
pub mod cone;
pub mod temperley_lieb;

use std::f64::consts::PI;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::numeric::{binomial, ln_biguint};
use crate::walks::SectorId;

pub use cone::{cone_stats, n2_min_expansion, principal_branch, ConeStats, N2Expansion};
pub use temperley_lieb::{
    tl_impurity_degeneracy, tl_memory_bound, tl_zero_modes, tl_zero_modes_closed_form,
    tl_zero_modes_closed_form_naive, Impurities,
};

/// Spectral radius `2√(N-1)/N` of the tree's simple random walk.
pub fn rho(n: u32) -> f64 {
    2.0 * f64::from(n - 1).sqrt() / f64::from(n)
}

/// Outward drift `1 - 2/N` of the walk's depth.
pub fn velocity(n: u32) -> f64 {
    1.0 - 2.0 / f64::from(n)
}

fn check_n(n: u32) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("alphabet size must be at least 2, got {n}")));
    }
    Ok(())
}

fn check_n3(n: u32, what: &str) -> Result<()> {
    if n < 3 {
        return Err(invalid(format!("{what} requires N ≥ 3, got {n}")));
    }
    Ok(())
}

/// Number of Krylov sectors of a length-`L` system.
pub fn sector_count(n: u32, len: usize) -> Result<BigUint> {
    check_n(n)?;
    if n == 2 {
        return Ok(BigUint::from(len + 1));
    }
    let m = BigUint::from(n - 1);
    Ok((m.pow(len as u32 + 1) - 1u32) / BigUint::from(n - 2))
}

/// Number of sectors at depth `d`.
pub fn multiplicity(n: u32, d: usize) -> BigUint {
    if d == 0 {
        BigUint::one()
    } else {
        BigUint::from(n) * BigUint::from(n - 1).pow(d as u32 - 1)
    }
}

/// Exact table of `|K_d^(m)|` for every `m ≤ L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorCensus {
    n: u32,
    len: usize,
    /// `rows[m][d]`, zero when `d > m` or `d ≢ m (mod 2)`.
    rows: Vec<Vec<BigUint>>,
}

/// One line of a census table, as emitted by the `census` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct CensusRow {
    pub d: usize,
    pub multiplicity: String,
    pub dim_exact: String,
    pub dim_asymptotic: Option<f64>,
    pub cone_volume: Option<String>,
    pub cone_expansion_exact: Option<String>,
    pub cone_expansion_asymptotic: Option<f64>,
}

impl SectorCensus {
    /// Builds the table by the depth recurrence (binomials for `N = 2`).
    pub fn new(n: u32, len: usize) -> Result<Self> {
        check_n(n)?;
        if len == 0 {
            return Err(invalid("system length must be at least 1"));
        }
        let rows = if n == 2 {
            (0..=len)
                .map(|m| {
                    (0..=m)
                        .map(|d| {
                            if (m + d) % 2 == 0 {
                                binomial(m as u64, ((m + d) / 2) as u64)
                            } else {
                                BigUint::zero()
                            }
                        })
                        .collect()
                })
                .collect()
        } else {
            dp_rows(n, len)
        };
        Ok(Self { n, len, rows })
    }

    /// Same table from the recurrence for every `N`, including `N = 2`.
    pub fn by_recurrence(n: u32, len: usize) -> Result<Self> {
        check_n(n)?;
        if len == 0 {
            return Err(invalid("system length must be at least 1"));
        }
        Ok(Self {
            n,
            len,
            rows: dp_rows(n, len),
        })
    }

    pub fn alphabet(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `|K_d^(L)|` for the table's own `L`.
    pub fn dim(&self, d: usize) -> &BigUint {
        self.dim_at(self.len, d)
    }

    /// `|K_d^(m)|` for any `m ≤ L`; zero outside the valid range.
    pub fn dim_at(&self, m: usize, d: usize) -> &BigUint {
        static ZERO: std::sync::OnceLock<BigUint> = std::sync::OnceLock::new();
        self.rows
            .get(m)
            .and_then(|r| r.get(d))
            .unwrap_or_else(|| ZERO.get_or_init(BigUint::zero))
    }

    /// Dimension of the sector labelled `k`.
    pub fn sector_dim(&self, k: &SectorId) -> &BigUint {
        self.dim(k.depth())
    }

    pub fn multiplicity(&self, d: usize) -> BigUint {
        multiplicity(self.n, d)
    }

    /// Depths carrying sectors: `L mod 2, L mod 2 + 2, …, L`.
    pub fn depths(&self) -> impl Iterator<Item = usize> {
        (self.len % 2..=self.len).step_by(2)
    }

    /// `Σ_d multiplicity(d) · |K_d^(L)|`, which must equal `N^L`.
    pub fn total(&self) -> BigUint {
        self.depths()
            .map(|d| self.multiplicity(d) * self.dim(d))
            .sum()
    }

    pub fn full_dimension(&self) -> BigUint {
        BigUint::from(self.n).pow(self.len as u32)
    }

    pub fn sector_count(&self) -> BigUint {
        sector_count(self.n, self.len).expect("alphabet already checked")
    }

    /// Table rows for output, with cone columns where the cone is defined.
    pub fn rows(&self) -> Vec<CensusRow> {
        self.depths()
            .map(|d| {
                let cone = (d >= 2 && d <= self.len)
                    .then(|| cone_stats(self, d).ok())
                    .flatten();
                CensusRow {
                    d,
                    multiplicity: self.multiplicity(d).to_string(),
                    dim_exact: self.dim(d).to_string(),
                    dim_asymptotic: (self.n >= 3)
                        .then(|| kd_asymptotic(self.n, self.len, d).ok())
                        .flatten(),
                    cone_volume: cone.as_ref().map(|c| c.volume.to_string()),
                    cone_expansion_exact: cone
                        .as_ref()
                        .map(|c| crate::numeric::format_rational(&c.boundary_flow)),
                    cone_expansion_asymptotic: cone.and_then(|c| c.asymptotic_expansion),
                }
            })
            .collect()
    }
}

fn dp_rows(n: u32, len: usize) -> Vec<Vec<BigUint>> {
    let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(len + 1);
    rows.push(vec![BigUint::one()]);
    let branch = BigUint::from(n - 1);
    for m in 1..=len {
        let prev = &rows[m - 1];
        let get = |d: usize| prev.get(d).cloned().unwrap_or_default();
        let mut row = vec![BigUint::zero(); m + 1];
        row[0] = get(1) * n;
        for (d, slot) in row.iter_mut().enumerate().skip(1) {
            *slot = get(d - 1) + &branch * get(d + 1);
        }
        rows.push(row);
    }
    rows
}

/// Exact sector dimensions for a length-`L` system.
pub fn sector_dims(n: u32, len: usize) -> Result<SectorCensus> {
    SectorCensus::new(n, len)
}

/// The scaling form `c · L^{-3/2} (Nρ)^L` of the largest sector, with `c`
/// fitted by least squares on a log scale against the exact values at even
/// `L ∈ [40, 80]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct K0Asymptotic {
    pub n: u32,
    pub constant: f64,
}

impl K0Asymptotic {
    pub const FIT_RANGE: (usize, usize) = (40, 80);

    pub fn fit(n: u32) -> Result<Self> {
        check_n3(n, "the largest-sector asymptotic")?;
        let (lo, hi) = Self::FIT_RANGE;
        let census = SectorCensus::new(n, hi)?;
        let residuals: Vec<f64> = (lo..=hi)
            .step_by(2)
            .map(|l| ln_biguint(census.dim_at(l, 0)) - ln_k0_shape(n, l))
            .collect();
        let ln_c = residuals.iter().sum::<f64>() / residuals.len() as f64;
        Ok(Self {
            n,
            constant: ln_c.exp(),
        })
    }

    pub fn value(&self, len: usize) -> f64 {
        (self.constant.ln() + ln_k0_shape(self.n, len)).exp()
    }
}

/// `ln(L^{-3/2} (Nρ)^L)`.
pub fn ln_k0_shape(n: u32, len: usize) -> f64 {
    let l = len as f64;
    l * (f64::from(n) * rho(n)).ln() - 1.5 * l.ln()
}

/// `|K_0^(L)|` from the fitted scaling form.
pub fn k0_asymptotic(n: u32, len: usize) -> Result<f64> {
    Ok(K0Asymptotic::fit(n)?.value(len))
}

/// Gaussian approximation to `|K_d^(L)|` from the drifting depth walk.
pub fn kd_asymptotic(n: u32, len: usize, d: usize) -> Result<f64> {
    Ok(ln_kd_asymptotic(n, len, d)?.exp())
}

/// Natural log of [`kd_asymptotic`], finite for any `L`.
pub fn ln_kd_asymptotic(n: u32, len: usize, d: usize) -> Result<f64> {
    check_n3(n, "the depth asymptotic")?;
    if d > len || !(len - d).is_multiple_of(2) {
        return Err(invalid(format!("depth {d} is not a sector depth for L = {len}")));
    }
    let (nf, l, df) = (f64::from(n), len as f64, d as f64);
    let v = velocity(n);
    Ok((2.0 * (nf - 1.0) / (nf * (2.0 * PI * l).sqrt())).ln() + l * nf.ln()
        - (df - v * l).powi(2) / (2.0 * l)
        - df * (nf - 1.0).ln())
}
