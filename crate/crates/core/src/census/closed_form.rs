//! Alternating-sum closed forms for the sector dimensions, evaluated in exact
//! rational arithmetic. They suffer catastrophic cancellation in floating
//! point and exist to cross-check the recurrence.
//!
//! With `γ² = 4(N-1)`:
//!
//! ```text
//! |K_0^(L)| = N^L (1 + ½ Σ_{n=1}^{L/2} N^{1-2n} C(1/2, n) (-1)^n γ^{2n})
//! |K_d^(L)| = 2^d Σ_{n=0}^{(L+d)/2} Σ_{k=0}^{d} |K_0^(L+d-2n)| (-1)^{k+n} C(d,k) C(k/2, n) γ^{2(n-d)}
//! ```
//!
//! The second form is fed by the first, so the two together are independent
//! of the recurrence.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{invalid, Result};
use crate::numeric::{binomial, rational_binomial};

fn gamma_sq(n: u32) -> BigRational {
    BigRational::from_integer(BigInt::from(4 * (n - 1)))
}

fn to_biguint(x: BigRational) -> Result<BigUint> {
    if !x.is_integer() || x.is_negative() {
        return Err(invalid(format!("closed form produced a non-count {x}")));
    }
    Ok(x.to_integer().to_biguint().expect("non-negative"))
}

/// `|K_0^(L)|` from the half-binomial series. Zero for odd `L`.
pub fn k0_closed_form(n: u32, len: usize) -> Result<BigUint> {
    if n < 2 {
        return Err(invalid("alphabet size must be at least 2"));
    }
    if len % 2 == 1 {
        return Ok(BigUint::zero());
    }
    let nn = BigRational::from_integer(BigInt::from(n));
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let g2 = gamma_sq(n);
    let mut sum = BigRational::zero();
    let mut g_pow = BigRational::one();
    for k in 1..=len / 2 {
        g_pow *= &g2;
        // N^{1-2k} = N / N^{2k}
        let n_pow = &nn / num_traits::pow(nn.clone(), 2 * k);
        let term = n_pow * rational_binomial(&half, k) * &g_pow;
        if k % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
    }
    let value = num_traits::pow(nn, len) * (BigRational::one() + sum * &half);
    to_biguint(value)
}

/// `|K_d^(L)|` from the double sum over `|K_0|` values.
pub fn kd_closed_form(n: u32, len: usize, d: usize) -> Result<BigUint> {
    if d > len {
        return Ok(BigUint::zero());
    }
    if (len + d) % 2 == 1 {
        return Ok(BigUint::zero());
    }
    if d == 0 {
        return k0_closed_form(n, len);
    }
    let g2 = gamma_sq(n);
    let top = (len + d) / 2;
    let k0: Vec<BigRational> = (0..=top)
        .map(|j| k0_closed_form(n, len + d - 2 * j).map(|v| BigRational::from_integer(v.into())))
        .collect::<Result<_>>()?;
    let mut total = BigRational::zero();
    for (j, k0_j) in k0.iter().enumerate() {
        // γ^{2(j-d)}
        let g = if j >= d {
            num_traits::pow(g2.clone(), j - d)
        } else {
            num_traits::pow(g2.clone(), d - j).recip()
        };
        let mut inner = BigRational::zero();
        for k in 0..=d {
            let kk = BigRational::new(BigInt::from(k), BigInt::from(2));
            let c = rational_binomial(&kk, j);
            if c.is_zero() {
                continue;
            }
            let term = BigRational::from_integer(binomial(d as u64, k as u64).into()) * c;
            if (k + j) % 2 == 1 {
                inner -= term;
            } else {
                inner += term;
            }
        }
        total += k0_j * inner * g;
    }
    let scale = BigRational::from_integer(BigInt::from(2).pow(d as u32));
    to_biguint(total * scale)
}
