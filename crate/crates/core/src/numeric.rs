//! Conversions between exact big numbers and floats that stay finite for
//! numbers far beyond `f64::MAX`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Natural log of a positive big integer. Returns `-inf` for zero.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        if let Some(v) = x.to_f64() {
            if v.is_finite() {
                return v.ln();
            }
        }
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::MAX);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `num / den` as a float, accurate even when both overflow `f64`.
pub fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    assert!(!den.is_zero(), "division by zero");
    if num.is_zero() {
        return 0.0;
    }
    if num.bits() < 1000 && den.bits() < 1000 {
        let (a, b) = (num.to_f64().unwrap(), den.to_f64().unwrap());
        if a.is_finite() && b.is_finite() {
            return a / b;
        }
    }
    (ln_biguint(num) - ln_biguint(den)).exp()
}

/// Correctly scaled float of an exact rational.
pub fn rational_f64(x: &BigRational) -> f64 {
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    let num = x.numer().abs().to_biguint().unwrap_or_default();
    let den = x.denom().abs().to_biguint().unwrap_or_else(BigUint::one);
    sign * ratio_f64(&num, &den)
}

pub fn biguint_to_rational(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x.clone()))
}

pub fn rational_from(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

/// Generalized binomial coefficient `C(x, k)` for rational `x`.
pub fn rational_binomial(x: &BigRational, k: usize) -> BigRational {
    let mut acc = BigRational::one();
    for i in 0..k {
        let i = BigRational::from_integer(BigInt::from(i));
        acc = acc * (x - &i) / (&i + BigRational::one());
    }
    acc
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Formats an exact rational as `p/q` (or `p` when integral).
pub fn format_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Ordinary least squares for `y = a + b x`; returns `(a, b)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_of_huge_numbers() {
        let a = BigUint::from(3u32).pow(2000);
        let b = BigUint::from(3u32).pow(1999);
        assert!((ratio_f64(&a, &b) - 3.0).abs() < 1e-9);
        assert!((ln_biguint(&a) - 2000.0 * 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn half_binomials() {
        let half = BigRational::new(1.into(), 2.into());
        // C(1/2, 2) = (1/2)(-1/2)/2 = -1/8
        assert_eq!(rational_binomial(&half, 2), BigRational::new((-1).into(), 8.into()));
        assert_eq!(binomial(10, 3), BigUint::from(120u32));
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 - 2.0 * x).collect();
        let (a, b) = linear_fit(&xs, &ys);
        assert!((a - 0.5).abs() < 1e-12 && (b + 2.0).abs() < 1e-12);
    }
}
