//! Cones of the Krylov graph and their expansion.
//!
//! The cone `C_d` hangs below a fixed tree vertex `w` at depth `d - 1`: it is
//! the union of every sector whose irreducible string starts with `w` and has
//! depth at least `d`. Under the nonlocal dynamics probability leaves the cone
//! only when the length-`(L-1)` prefix of a state sits exactly at `w` and the
//! bath points the last step back towards the root, which gives
//!
//! ```text
//! Φ(C_d) = ((N-1)/N) |K_{d-1}^(L-1)| / |C_d|
//! |C_d|  = Σ_{c=0}^{(L-d)/2} |K_{d+2c}^(L)| (N-1)^{2c+1}
//! ```

use std::f64::consts::PI;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use super::{check_n3, velocity, SectorCensus};
use crate::error::{invalid, Result};
use crate::numeric::rational_f64;
use crate::walks::SectorId;

/// Exact and asymptotic data for one cone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeStats {
    pub d: usize,
    #[serde(serialize_with = "ser_display")]
    pub volume: BigUint,
    #[serde(serialize_with = "ser_rational")]
    pub boundary_flow: BigRational,
    /// `None` for `N = 2` and inside the crossover window.
    pub asymptotic_volume: Option<f64>,
    pub asymptotic_expansion: Option<f64>,
    /// True when `|d - v_N L| < √L`, where the asymptotic branches do not apply.
    pub crossover: bool,
}

fn ser_display<S: serde::Serializer, T: std::fmt::Display>(x: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

fn ser_rational<S: serde::Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&crate::numeric::format_rational(x))
}

impl ConeStats {
    pub fn expansion_f64(&self) -> f64 {
        rational_f64(&self.boundary_flow)
    }
}

/// A set of sectors given by an irreducible prefix and a minimum depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cone {
    pub prefix: SectorId,
    pub min_depth: usize,
}

impl Cone {
    /// The cone `C_d` below the vertex `1212…` of depth `d - 1`.
    pub fn canonical(n: u32, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("cone depth must be at least 1"));
        }
        let digits = (0..d - 1).map(|i| (i % 2) as u8).collect();
        Ok(Self {
            prefix: SectorId::from_digits(n, digits)?,
            min_depth: d,
        })
    }

    /// Every sector whose irreducible string starts with symbol 1. For even
    /// `L` this is `C_2`; for odd `L` it also contains the sector `1` itself.
    pub fn principal(n: u32) -> Result<Self> {
        Ok(Self {
            prefix: SectorId::from_digits(n, vec![0])?,
            min_depth: 1,
        })
    }

    pub fn contains(&self, k: &SectorId) -> bool {
        k.depth() >= self.min_depth && k.has_prefix(&self.prefix)
    }
}

/// Exact expansion and volume of `C_d`, with the large-`L` forms for `N ≥ 3`.
pub fn cone_stats(census: &SectorCensus, d: usize) -> Result<ConeStats> {
    let (n, len) = (census.alphabet(), census.len());
    if d < 2 || d > len || !(len - d).is_multiple_of(2) {
        return Err(invalid(format!(
            "cone depth must satisfy 2 ≤ d ≤ L and d ≡ L (mod 2); got d = {d}, L = {len}"
        )));
    }
    let branch = BigUint::from(n - 1);
    let volume: BigUint = (0..=(len - d) / 2)
        .map(|c| census.dim(d + 2 * c) * branch.pow(2 * c as u32 + 1))
        .sum();
    let flow = BigRational::new(
        BigInt::from(census.dim_at(len - 1, d - 1) * (n - 1)),
        BigInt::from(&volume * n),
    );
    let crossover = (d as f64 - velocity(n) * len as f64).abs() < (len as f64).sqrt();
    let asym = (n >= 3 && !crossover).then(|| {
        (
            asymptotic_cone_volume(n, len, d).expect("checked"),
            asymptotic_cone_expansion(n, len, d).expect("checked"),
        )
    });
    Ok(ConeStats {
        d,
        volume,
        boundary_flow: flow,
        asymptotic_volume: asym.map(|a| a.0),
        asymptotic_expansion: asym.map(|a| a.1),
        crossover,
    })
}

/// Expansion of [`Cone::principal`]: `C_2` for even `L`; for odd `L` the
/// branch has volume `N^{L-1}` and flow `(N-1)|K_0^(L-1)| / N^L`.
pub fn principal_branch(census: &SectorCensus) -> Result<ConeStats> {
    let (n, len) = (census.alphabet(), census.len());
    if len % 2 == 0 {
        return cone_stats(census, 2);
    }
    let volume = BigUint::from(n).pow(len as u32 - 1);
    let flow = BigRational::new(
        BigInt::from(census.dim_at(len - 1, 0) * (n - 1)),
        BigInt::from(&volume * n),
    );
    Ok(ConeStats {
        d: 1,
        volume,
        boundary_flow: flow,
        asymptotic_volume: None,
        asymptotic_expansion: None,
        crossover: false,
    })
}

fn check_asym(n: u32, len: usize, d: usize) -> Result<(f64, f64, f64, f64)> {
    check_n3(n, "the cone asymptotics")?;
    let (l, df) = (len as f64, d as f64);
    let v = velocity(n);
    if (df - v * l).abs() < l.sqrt() {
        return Err(invalid(format!(
            "d = {d} lies in the crossover window |d - v_N L| < √L around {:.2}",
            v * l
        )));
    }
    Ok((f64::from(n), l, df, v))
}

/// Large-`L` cone volume, split on the sign of `d - v_N L`.
pub fn asymptotic_cone_volume(n: u32, len: usize, d: usize) -> Result<f64> {
    let (nf, l, df, v) = check_asym(n, len, d)?;
    let ln_pref = (2.0 - df) * (nf - 1.0).ln() + (l - 1.0) * nf.ln() - (2.0 * PI * l).sqrt().ln();
    let ln_branch = if df > v * l {
        -(df - v * l).powi(2) / (2.0 * l) - (df / l - v).ln()
    } else {
        (2.0 * PI * l).sqrt().ln()
    };
    Ok((ln_pref + ln_branch).exp())
}

/// Large-`L` cone expansion, split on the sign of `d - v_N L`.
pub fn asymptotic_cone_expansion(n: u32, len: usize, d: usize) -> Result<f64> {
    let (nf, l, df, v) = check_asym(n, len, d)?;
    let pref = 2.0 * (nf - 1.0) * ((df / l - v) * (1.0 - v)).exp() / (nf * nf);
    let branch = if df > v * l {
        df / l - v
    } else {
        (-(df - v * l).powi(2) / (2.0 * l)).exp() / (2.0 * PI * l).sqrt()
    };
    Ok(pref * branch)
}

/// The binary-alphabet minimal inter-sector cut `S_Q`, with `Q = 1` for odd
/// `L` and `Q = 2` for even `L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct N2Expansion {
    pub len: usize,
    pub q: usize,
    /// States in `S_Q` with a bath move leaving `S_Q`.
    #[serde(serialize_with = "ser_display")]
    pub boundary_states: BigUint,
    #[serde(serialize_with = "ser_display")]
    pub volume: BigUint,
    /// `|∂S_Q| / |S_Q|`; the quantity entering the `1/(πL) … √(8/(πL))` window.
    #[serde(serialize_with = "ser_rational")]
    pub phi_star: BigRational,
    /// Probability flow out of `S_Q` per step: `phi_star / 2`.
    #[serde(serialize_with = "ser_rational")]
    pub flow: BigRational,
    /// `√(2/(πL))`.
    pub approx: f64,
}

/// Minimal inter-sector expansion of the `N = 2` chain.
pub fn n2_min_expansion(len: usize) -> Result<N2Expansion> {
    if len < 2 {
        return Err(invalid("the binary cut needs L ≥ 2"));
    }
    let census = SectorCensus::new(2, len)?;
    let q = if len % 2 == 1 { 1 } else { 2 };
    let boundary = n2_boundary_states(&census, q);
    let volume: BigUint = (q..=len).step_by(2).map(|d| census.dim(d).clone()).sum();
    let phi_star = BigRational::new(BigInt::from(boundary.clone()), BigInt::from(volume.clone()));
    let flow = &phi_star / BigRational::from_integer(2.into());
    Ok(N2Expansion {
        len,
        q,
        boundary_states: boundary,
        volume,
        phi_star,
        flow,
        approx: (2.0 / (PI * len as f64)).sqrt(),
    })
}

/// `|∂S_Q| = Σ_{Q' ≥ Q} (-1)^{(Q'-Q)/2} |K_{Q'}|`.
pub fn n2_boundary_states(census: &SectorCensus, q: usize) -> BigUint {
    let mut plus = BigUint::zero();
    let mut minus = BigUint::zero();
    for (i, d) in (q..=census.len()).step_by(2).enumerate() {
        if i % 2 == 0 {
            plus += census.dim(d);
        } else {
            minus += census.dim(d);
        }
    }
    plus - minus
}

/// Exact `Φ(C_2)` in the form `(N-1)|K_1^(L-1)| / (N^L - |K_0^(L)|)`.
pub fn c2_expansion_direct(census: &SectorCensus) -> Result<BigRational> {
    let (n, len) = (census.alphabet(), census.len());
    if len < 2 || len % 2 == 1 {
        return Err(invalid("C_2 needs even L ≥ 2"));
    }
    let num = census.dim_at(len - 1, 1) * (n - 1);
    let den = census.full_dimension() - census.dim(0);
    Ok(BigRational::new(num.into(), den.into()))
}
