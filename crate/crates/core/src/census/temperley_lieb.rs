//! Zero-mode counting for the Temperley-Lieb chain and its boundary
//! impurities.
//!
//! `Ω_L` obeys `Ω_L = N Ω_{L-1} - Ω_{L-2}` with `Ω_0 = 1`, `Ω_1 = N`, whose
//! solution is
//!
//! ```text
//! Ω_L = ((N + s)^{L+1} - (N - s)^{L+1}) / (2^{L+1} s),   s = √(N² - 4).
//! ```

use num_bigint::{BigInt, BigUint};
use num_traits::{FromPrimitive, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `Ω_0 … Ω_L` from the recurrence.
pub fn tl_zero_mode_table(n: u32, len: usize) -> Result<Vec<BigUint>> {
    if n < 2 {
        return Err(invalid("alphabet size must be at least 2"));
    }
    let mut out = vec![BigUint::from(1u32), BigUint::from(n)];
    while out.len() <= len {
        let k = out.len();
        out.push(&out[k - 1] * n - &out[k - 2]);
    }
    out.truncate(len + 1);
    Ok(out)
}

/// `Ω_L` exactly.
pub fn tl_zero_modes(n: u32, len: usize) -> Result<BigUint> {
    Ok(tl_zero_mode_table(n, len)?.pop().expect("non-empty"))
}

fn check_closed_form(n: u32) -> Result<()> {
    if n < 3 {
        return Err(invalid(format!(
            "the closed form needs N ≥ 3 (√(N²-4) vanishes at N = 2); got N = {n}"
        )));
    }
    Ok(())
}

/// Closed form evaluated exactly in `ℤ[s]`: expanding `(N + s)^{L+1} = a + b s`
/// gives `Ω_L = b / 2^L`, which is then rounded once to `f64`.
pub fn tl_zero_modes_closed_form(n: u32, len: usize) -> Result<f64> {
    check_closed_form(n)?;
    let s2 = BigInt::from(n * n - 4);
    let (mut a, mut b) = (BigInt::from(1), BigInt::zero());
    for _ in 0..=len {
        // (a + b s)(N + s) = (aN + b s²) + (a + bN) s
        let na = &a * n + &b * &s2;
        let nb = &a + &b * n;
        a = na;
        b = nb;
    }
    let denom = BigInt::from(1) << len;
    if !(&b % &denom).is_zero() {
        return Err(invalid("closed form did not reduce to an integer"));
    }
    Ok((b / denom).to_f64().unwrap_or(f64::INFINITY))
}

/// Closed form evaluated directly in `f64`. Rounding in `s` is amplified by
/// the power, so the error grows roughly linearly in `L` (in ulps).
pub fn tl_zero_modes_closed_form_naive(n: u32, len: usize) -> Result<f64> {
    check_closed_form(n)?;
    let nf = f64::from(n);
    let s = (nf * nf - 4.0).sqrt();
    let e = len as i32 + 1;
    Ok(((nf + s).powi(e) - (nf - s).powi(e)) / (2f64.powi(e) * s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Impurities {
    One,
    Two,
}

impl std::str::FromStr for Impurities {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "1" => Ok(Self::One),
            "two" | "2" => Ok(Self::Two),
            _ => Err(crate::Error::Parse(format!("impurities must be one|two, got {s:?}"))),
        }
    }
}

/// Zero-mode count with one impurity (`Ω_{L-1} - Ω_{L-2}`) or one at each end
/// (`Ω_{L-2} - Ω_{L-3}`).
pub fn tl_impurity_degeneracy(n: u32, len: usize, impurities: Impurities) -> Result<BigUint> {
    let shift = match impurities {
        Impurities::One => 1,
        Impurities::Two => 2,
    };
    if len < shift + 1 {
        return Err(invalid(format!("L = {len} too short for {impurities:?} impurities")));
    }
    let t = tl_zero_mode_table(n, len)?;
    Ok(&t[len - shift] - &t[len - shift - 1])
}

/// Large-`L` lower bound on the memory of the impurity model,
/// `(1/N)(1 - 4(N-1)/(N + √(N²-4))²)²`.
pub fn tl_memory_bound(n: u32) -> Result<f64> {
    check_closed_form(n)?;
    let nf = f64::from(n);
    let s = (nf * nf - 4.0).sqrt();
    let inner = 1.0 - 4.0 * (nf - 1.0) / (nf + s).powi(2);
    Ok(inner * inner / nf)
}

/// Distance from `x` to `exact` in units of the spacing of floats near `exact`.
pub fn ulp_error(x: f64, exact: &BigUint) -> f64 {
    let e = exact.to_f64().unwrap_or(f64::INFINITY);
    let ulp = f64::from_bits(e.to_bits() + 1) - e;
    let diff = if x.abs() < 9.007_199_254_740_992e15 {
        // both sides exactly representable below 2^53
        x - e
    } else {
        let xi = BigInt::from_f64(x).unwrap_or_default();
        (xi - BigInt::from(exact.clone())).to_f64().unwrap_or(f64::INFINITY)
    };
    diff.abs() / ulp
}

/// Relative error `|x - exact| / (exact ε)` in units of the machine epsilon
/// `ε = 2^-52`. A correctly rounded value is always strictly below `0.5`,
/// including exact ties where [`ulp_error`] is exactly `0.5`.
pub fn eps_error(x: f64, exact: &BigUint) -> f64 {
    use num_rational::BigRational;
    let Some(xr) = BigRational::from_float(x) else {
        return f64::INFINITY;
    };
    if exact.is_zero() {
        return if x == 0.0 { 0.0 } else { f64::INFINITY };
    }
    let e = BigRational::from_integer(BigInt::from(exact.clone()));
    let scale = BigRational::from_integer(BigInt::from(1u64 << 52));
    let rel = num_traits::Signed::abs(&(xr - &e)) * scale / e;
    rel.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recurrence_values() {
        let t: Vec<u64> = tl_zero_mode_table(3, 5)
            .unwrap()
            .iter()
            .map(|x| x.to_u64().unwrap())
            .collect();
        assert_eq!(t, [1, 3, 8, 21, 55, 144]);
        assert_eq!(tl_zero_modes(7, 1).unwrap(), BigUint::from(7u32));
    }

    #[test]
    fn closed_forms() {
        assert_eq!(tl_zero_modes_closed_form(3, 4).unwrap(), 55.0);
        assert!((tl_zero_modes_closed_form_naive(3, 4).unwrap() - 55.0).abs() < 1e-9);
        assert!(tl_zero_modes_closed_form(2, 4).is_err());
        for n in 3..=5 {
            for len in 0..=30 {
                let exact = tl_zero_modes(n, len).unwrap();
                let x = tl_zero_modes_closed_form(n, len).unwrap();
                assert!(ulp_error(x, &exact) <= 0.5, "N={n} L={len}");
                assert!(eps_error(x, &exact) < 0.5, "N={n} L={len}");
                let y = tl_zero_modes_closed_form_naive(n, len).unwrap();
                assert!(ulp_error(y, &exact) <= 4.0 * (len as f64 + 1.0), "N={n} L={len}");
            }
        }
    }

    #[test]
    fn tie_is_half_an_ulp() {
        // 2^53 + 1 lies exactly between two doubles
        let exact = BigUint::from((1u64 << 53) + 1);
        let x = exact.to_f64().unwrap();
        assert_eq!(ulp_error(x, &exact), 0.5);
        assert!(eps_error(x, &exact) < 0.5);
    }

    #[test]
    fn impurities() {
        assert_eq!(tl_impurity_degeneracy(3, 4, Impurities::One).unwrap(), BigUint::from(13u32));
        assert_eq!(tl_impurity_degeneracy(3, 4, Impurities::Two).unwrap(), BigUint::from(5u32));
        for n in 3..=5 {
            for len in 3..=100 {
                for imp in [Impurities::One, Impurities::Two] {
                    assert!(tl_impurity_degeneracy(n, len, imp).unwrap() > BigUint::zero());
                }
            }
        }
        assert!(tl_impurity_degeneracy(3, 2, Impurities::Two).is_err());
    }

    #[test]
    fn memory_bound() {
        assert!((tl_memory_bound(3).unwrap() - 0.1672).abs() < 1e-4);
        for n in 3..=50 {
            let m = tl_memory_bound(n).unwrap();
            assert!(m > 0.0 && m < 1.0 / f64::from(n));
        }
        let big = 1_000_000;
        assert!((tl_memory_bound(big).unwrap() * f64::from(big) - 1.0).abs() < 1e-4);
    }
}
