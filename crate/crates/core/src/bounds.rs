//! Closed-form evaluators for the gap, entropy and charge-relaxation bounds.
//!
//! Every evaluator returns a [`Bound`]. Outside the stated hypotheses the
//! bound is flagged invalid and carries no value; nothing is clamped or
//! extrapolated.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use serde::Serialize;

use crate::census::{cone_stats, k0_asymptotic, principal_branch, rho, velocity, SectorCensus};
use crate::error::{invalid, Result};
use crate::numeric::{ratio_f64, rational_f64};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bound {
    pub name: &'static str,
    pub n: u32,
    pub len: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Present only when `valid`.
    pub value: Option<f64>,
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Auxiliary quantities (`gamma_star`, `lambda`, `D`, …).
    pub metadata: BTreeMap<&'static str, f64>,
}

impl Bound {
    fn new(name: &'static str, n: u32, len: usize) -> Self {
        Self {
            name,
            n,
            len,
            gamma: None,
            d: None,
            t: None,
            value: None,
            valid: true,
            reason: None,
            metadata: BTreeMap::new(),
        }
    }

    fn reject(mut self, reason: impl Into<String>) -> Self {
        self.valid = false;
        self.value = None;
        self.reason = Some(reason.into());
        self
    }

    fn meta(mut self, key: &'static str, v: f64) -> Self {
        self.metadata.insert(key, v);
        self
    }
}

fn check(n: u32, len: usize) -> Result<()> {
    if n < 2 || len < 2 {
        return Err(invalid(format!("need N ≥ 2 and L ≥ 2, got N = {n}, L = {len}")));
    }
    Ok(())
}

/// `|K_max| N^{-L}`, exactly from the census; `asymptotic` holds the
/// `L^{-3/2} ρ_N^L` scaling form.
pub fn gap_upper_bound(n: u32, len: usize) -> Result<Bound> {
    check(n, len)?;
    let b = Bound::new("gap_upper_bound", n, len);
    if n < 3 {
        return Ok(b.reject("the exponential gap bound needs N ≥ 3"));
    }
    let census = SectorCensus::new(n, len)?;
    let value = ratio_f64(census.dim(len % 2), &census.full_dimension());
    let mut b = b
        .meta("rho", rho(n))
        .meta("shape", (len as f64).powf(-1.5) * rho(n).powi(len as i32));
    if len.is_multiple_of(2) {
        b = b.meta("asymptotic", k0_asymptotic(n, len)? / f64::from(n).powi(len as i32));
    }
    b.value = Some(value);
    Ok(b)
}

/// `γ_* = 2(1 - v_N ln(N-1)/ln N)`.
pub fn gamma_star(n: u32) -> f64 {
    let nf = f64::from(n);
    2.0 * (1.0 - velocity(n) * (nf - 1.0).ln() / nf.ln())
}

/// `F_d = 4(N-1)/(√(2π) N²) e^{(d/L - v_N)(1 - v_N)}`.
pub fn f_d(n: u32, len: usize, d: f64) -> f64 {
    let (nf, v) = (f64::from(n), velocity(n));
    4.0 * (nf - 1.0) / ((2.0 * PI).sqrt() * nf * nf) * ((d / len as f64 - v) * (1.0 - v)).exp()
}

/// Entanglement saturation time: `t_S(γ) ≥ C_γ √L e^{L λ_γ}` with
/// `C_γ = γ/(2 F_{d_γ})`, `d_γ = L(1-γ/2) ln N/ln(N-1)` and
/// `λ_γ = ½(d_γ/L - v_N)²`. Valid for `γ_* < γ < 1`.
pub fn entropy_time_lower_bound(n: u32, len: usize, gamma: f64) -> Result<Bound> {
    check(n, len)?;
    let mut b = Bound::new("entropy_time_lower_bound", n, len);
    b.gamma = Some(gamma);
    let gs = gamma_star(n);
    b = b.meta("gamma_star", gs);
    if n < 3 {
        return Ok(b.reject("N = 2 has no exponential entropy bound (γ_* = 2)"));
    }
    if gs >= 1.0 {
        return Ok(b.reject(format!("vacuous: γ_* = {gs:.4} ≥ 1")));
    }
    if !(gamma > gs && gamma < 1.0) {
        return Ok(b.reject(format!("γ must lie in (γ_*, 1) = ({gs:.4}, 1)")));
    }
    let nf = f64::from(n);
    let l = len as f64;
    let d_gamma = l * (1.0 - gamma / 2.0) * nf.ln() / (nf - 1.0).ln();
    let lambda = 0.5 * (d_gamma / l - velocity(n)).powi(2);
    let c_gamma = gamma / (2.0 * f_d(n, len, d_gamma));
    b.d = Some(d_gamma);
    b.value = Some(c_gamma * l.sqrt() * (l * lambda).exp());
    Ok(b.meta("d_gamma", d_gamma).meta("lambda", lambda).meta("C_gamma", c_gamma))
}

/// `1/((1+η) Φ(C_{Lη+2}))` from exact cone expansions; `None` when `Lη + 2`
/// is not a cone depth of the system. At `η = 0` and odd `L` the principal
/// branch stands in for `C_2`.
pub fn charge_time_exact(n: u32, len: usize, eta: f64) -> Result<Option<f64>> {
    let census = SectorCensus::new(n, len)?;
    let depth = len as f64 * eta + 2.0;
    if (depth - depth.round()).abs() > 1e-9 {
        return Ok(None);
    }
    let d = depth.round() as usize;
    let flow = if d <= len && (len - d).is_multiple_of(2) {
        cone_stats(&census, d)?.boundary_flow
    } else if d == 2 {
        principal_branch(&census)?.boundary_flow
    } else {
        return Ok(None);
    };
    Ok(Some(1.0 / ((1.0 + eta) * rational_f64(&flow))))
}

/// Charge relaxation from the maximal-charge state, in the appendix form:
/// with `η = 2γ`, `⟨Q_a⟩ ≥ η - t/(D_{η/2} √L e^{L(η-v_N)²/2})` and
/// `D_{η/2} = N²√(2π)/(2(1+η)(N-1)) e^{-(η-v_N)(1-v_N)}`. The value is
/// `D_{η/2} √L e^{L(η-v_N)²/2}`. Valid for `0 < γ < v_N/2`.
///
/// Metadata: `D`, `eta`, `crossing` (`γ` times the value, the time the
/// inequality itself guarantees before `⟨Q_a⟩` reaches `γ`), `exact` (same
/// with the exact cone expansion, when defined) and `main_text` (the value
/// with the reciprocal constant `2(1+2γ)(N-1)/(N²√(2π)) e^{-(2γ-v_N)(1-v_N)}`).
pub fn charge_time_lower_bound(n: u32, len: usize, gamma: f64) -> Result<Bound> {
    check(n, len)?;
    let mut b = Bound::new("charge_time_lower_bound", n, len);
    b.gamma = Some(gamma);
    let v = velocity(n);
    if n < 3 {
        return Ok(b.reject("needs N ≥ 3 (v_2 = 0)"));
    }
    if !(gamma > 0.0 && gamma < v / 2.0) {
        return Ok(b.reject(format!("γ must lie in (0, v_N/2) = (0, {:.4})", v / 2.0)));
    }
    let nf = f64::from(n);
    let l = len as f64;
    let eta = 2.0 * gamma;
    let growth = l.sqrt() * (l * (eta - v).powi(2) / 2.0).exp();
    let d = nf * nf * (2.0 * PI).sqrt() / (2.0 * (1.0 + eta) * (nf - 1.0)) * (-(eta - v) * (1.0 - v)).exp();
    let main = 2.0 * (1.0 + eta) * (nf - 1.0) / (nf * nf * (2.0 * PI).sqrt()) * (-(eta - v) * (1.0 - v)).exp();
    b.value = Some(d * growth);
    b = b
        .meta("D", d)
        .meta("eta", eta)
        .meta("crossing", gamma * d * growth)
        .meta("main_text", main * growth)
        .meta("base", (((eta - v).powi(2)) / 2.0).exp());
    if let Some(x) = charge_time_exact(n, len, eta)? {
        b = b.meta("exact", x);
    }
    Ok(b)
}

/// The `γ → 0` limit `1/Φ(C_2)` of the charge bound, exactly.
pub fn charge_time_gamma_zero_limit(n: u32, len: usize) -> Result<f64> {
    check(n, len)?;
    Ok(charge_time_exact(n, len, 0.0)?.expect("η = 0 always has a cone"))
}

/// `c = 1/e + 2 ln(N-1) - ln N`.
pub fn entropy_constant(n: u32) -> f64 {
    let nf = f64::from(n);
    1.0 / E + 2.0 * (nf - 1.0).ln() - nf.ln()
}

/// Averaged entropy bound from a uniform start in `C_d`:
/// `L ln N (1 - (d/L) ln(N-1)/ln N + k t F_d/√L e^{-L(d/L-v_N)²/2}) + c`,
/// with `k = 1`, or `k = 2` for the half-chain (`bipartite`) entropy.
/// Valid for `d < v_N L` with `v_N L - d ≥ √L`.
pub fn entropy_bound_curve(n: u32, len: usize, d: f64, t: f64, bipartite: bool) -> Result<Bound> {
    check(n, len)?;
    let name = if bipartite {
        "entropy_bound_bipartite"
    } else {
        "entropy_bound"
    };
    let mut b = Bound::new(name, n, len);
    b.d = Some(d);
    b.t = Some(t);
    let c = entropy_constant(n);
    b = b.meta("c", c);
    if n < 3 {
        return Ok(b.reject("needs N ≥ 3"));
    }
    let (nf, l, v) = (f64::from(n), len as f64, velocity(n));
    if !(d >= 0.0 && t >= 0.0) {
        return Ok(b.reject("d and t must be non-negative"));
    }
    if v * l - d < l.sqrt() {
        return Ok(b.reject(format!(
            "needs v_N L - d ≥ √L (v_N L = {:.2}, d = {d})",
            v * l
        )));
    }
    let k = if bipartite { 2.0 } else { 1.0 };
    let fd = f_d(n, len, d);
    let leak = k * t * fd / l.sqrt() * (-l * (d / l - v).powi(2) / 2.0).exp();
    let plateau = 1.0 - d / l * (nf - 1.0).ln() / nf.ln();
    b.value = Some(l * nf.ln() * (plateau + leak) + c);
    Ok(b.meta("F_d", fd).meta("plateau", l * nf.ln() * plateau))
}

/// `(1/(πL), √(8/(πL)))`, the window for the binary-alphabet nonlocal gap.
pub fn n2_gap_window(len: usize) -> Result<(f64, f64)> {
    if len < 2 {
        return Err(invalid("the N = 2 window needs L ≥ 2"));
    }
    let l = len as f64;
    Ok((1.0 / (PI * l), (8.0 / (PI * l)).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_upper_bound_small_case() {
        let b = gap_upper_bound(3, 4).unwrap();
        assert_eq!(b.value, Some(15.0 / 81.0));
        assert!(!gap_upper_bound(2, 6).unwrap().valid);
    }

    #[test]
    fn gap_upper_bound_decreases() {
        let v: Vec<f64> = (2..=40).map(|l| gap_upper_bound(3, l).unwrap().value.unwrap()).collect();
        // odd L and L + 1 share the same value: |K_0^(L+1)| = N |K_1^(L)|
        assert!(v.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        assert!(v.windows(3).all(|w| w[2] < w[0]));
    }

    #[test]
    fn gamma_star_values() {
        assert!((gamma_star(5) - 2.0 * (1.0 - 0.6 * 4f64.ln() / 5f64.ln())).abs() < 1e-15);
        assert!((gamma_star(5) - 0.966).abs() < 1e-3);
        assert!(gamma_star(3) > 1.57 && gamma_star(3) < 1.59);
        let b = entropy_time_lower_bound(3, 40, 0.9).unwrap();
        assert!(!b.valid && b.value.is_none());
    }

    #[test]
    fn entropy_time_lambda_is_square() {
        for g in [0.97, 0.98, 0.99] {
            let b = entropy_time_lower_bound(5, 60, g).unwrap();
            assert!(b.valid);
            let lam = b.metadata["lambda"];
            assert!(lam >= 0.0);
            let dg = b.metadata["d_gamma"];
            assert!((lam - 0.5 * (dg / 60.0 - velocity(5)).powi(2)).abs() < 1e-15);
            // d_γ puts the plateau at exactly γ/2
            assert!((1.0 - dg / 60.0 * 4f64.ln() / 5f64.ln() - g / 2.0).abs() < 1e-12);
        }
        assert!(!entropy_time_lower_bound(5, 60, 0.9).unwrap().valid);
    }

    #[test]
    fn charge_time_base_and_edges() {
        let b = charge_time_lower_bound(3, 30, 1e-6).unwrap();
        assert!((b.metadata["base"] - (1.0f64 / 18.0).exp()).abs() < 1e-5);
        assert!(((1.0f64 / 18.0).exp() - 1.057).abs() < 1e-3);
        assert!(!charge_time_lower_bound(3, 30, velocity(3) / 2.0).unwrap().valid);
        assert!(!charge_time_lower_bound(3, 30, 0.0).unwrap().valid);
        // at the edge γ → v_N/2 the exponential factor vanishes
        let g = 1.0 / 6.0 - 1e-12;
        let b = charge_time_lower_bound(3, 30, g).unwrap();
        assert!((b.value.unwrap() / (b.metadata["D"] * 30f64.sqrt()) - 1.0).abs() < 1e-9);
        // the two constants have reciprocal prefactors and the same exponential
        let b = charge_time_lower_bound(4, 20, 0.1).unwrap();
        let growth = b.value.unwrap() / b.metadata["D"];
        let main_d = b.metadata["main_text"] / growth;
        let x = (0.2 - velocity(4)) * (1.0 - velocity(4));
        assert!((main_d * b.metadata["D"] - (-2.0 * x).exp()).abs() < 1e-12);
    }

    #[test]
    fn charge_time_zero_limit_is_inverse_cone_expansion() {
        let census = SectorCensus::new(3, 20).unwrap();
        let phi = cone_stats(&census, 2).unwrap().expansion_f64();
        assert_eq!(charge_time_gamma_zero_limit(3, 20).unwrap(), 1.0 / phi);
        let b = charge_time_lower_bound(3, 20, 0.1).unwrap();
        let want = charge_time_exact(3, 20, 0.2).unwrap().unwrap();
        assert_eq!(b.metadata["exact"], want);
    }

    #[test]
    fn charge_time_zero_limit_follows_scaling_shape() {
        // one-constant fit of 1/Φ(C_2) to L^{3/2} ρ^{-L} over L ∈ [16, 24]
        let r = rho(3);
        let ratio = |l: usize| charge_time_gamma_zero_limit(3, l).unwrap() / ((l as f64).powf(1.5) * r.powi(-(l as i32)));
        let logs: Vec<f64> = (16..=24).step_by(2).map(|l| ratio(l).ln()).collect();
        let c = (logs.iter().sum::<f64>() / logs.len() as f64).exp();
        assert!((ratio(20) / c - 1.0).abs() < 0.05, "{}", ratio(20) / c);
    }

    #[test]
    fn entropy_curve() {
        let (l, n) = (40, 5);
        let b = entropy_bound_curve(n, l, 0.0, 0.0, false).unwrap();
        assert!((b.value.unwrap() - (l as f64 * 5f64.ln() + entropy_constant(n))).abs() < 1e-12);
        let vals: Vec<f64> = [0.0, 1.0, 1e3, 1e6]
            .iter()
            .map(|&t| entropy_bound_curve(n, l, 12.0, t, false).unwrap().value.unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
        let plateau = l as f64 * 5f64.ln() * (1.0 - 0.3 * 4f64.ln() / 5f64.ln());
        let b = entropy_bound_curve(n, l, 12.0, 1.0, false).unwrap();
        assert!((b.metadata["plateau"] - plateau).abs() < 1e-12);
        // the t-term reaches the plateau's order at t* = √L e^{L(0.3-0.6)²/2}/F_d
        let t_star = (l as f64).sqrt() * (l as f64 * 0.09 / 2.0).exp() / b.metadata["F_d"];
        let at = |t: f64| entropy_bound_curve(n, l, 12.0, t, false).unwrap().value.unwrap() - plateau - entropy_constant(n);
        assert!((at(t_star) - l as f64 * 5f64.ln()).abs() < 1e-9);
        assert!(at(0.01 * t_star) < 0.02 * plateau);
        let bi = entropy_bound_curve(n, l, 12.0, 10.0, true).unwrap();
        let one = entropy_bound_curve(n, l, 12.0, 10.0, false).unwrap();
        let c = entropy_constant(n);
        let extra = |x: &Bound| x.value.unwrap() - x.metadata["plateau"] - c;
        assert!((extra(&bi) - 2.0 * extra(&one)).abs() < 1e-12);
        assert!(!entropy_bound_curve(n, l, 22.0, 0.0, false).unwrap().valid);
    }

    #[test]
    fn n2_window() {
        let (lo, hi) = n2_gap_window(7).unwrap();
        assert!((lo - 0.0455).abs() < 1e-4 && (hi - 0.603).abs() < 1e-3);
        for l in 2..200 {
            let (lo, hi) = n2_gap_window(l).unwrap();
            assert!(lo < hi);
        }
    }
}
