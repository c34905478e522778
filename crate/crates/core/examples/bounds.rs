//! Closed-form bounds: gap upper bound, entanglement and charge relaxation
//! times, and the averaged-entropy curve.
//!
//! ```bash
//! cargo run --release --example bounds
//! ```

use pairflip::bounds::{
    entropy_bound_curve, gamma_star, gap_upper_bound, entropy_time_lower_bound, charge_time_lower_bound,
    charge_time_gamma_zero_limit,
};

fn main() -> pairflip::Result<()> {
    for len in [10, 20, 40] {
        let gap = gap_upper_bound(3, len)?;
        let charge = charge_time_lower_bound(3, len, 0.05)?;
        println!(
            "L = {len}: gap <= {:.3e}, t_Q(0.05) >= {:.1}, 1/Phi(C_2) = {:.1}",
            gap.value.unwrap_or(f64::NAN),
            charge.value.unwrap_or(f64::NAN),
            charge_time_gamma_zero_limit(3, len)?
        );
    }

    for n in [3, 5, 8] {
        let b = entropy_time_lower_bound(n, 100, 0.95)?;
        println!("N = {n}: gamma_* = {:.3}, valid {}, value {:?}", gamma_star(n), b.valid, b.value);
    }

    for t in [0.0, 1e3, 1e6] {
        let b = entropy_bound_curve(3, 60, 8.0, t, false)?;
        println!("entropy bound at t = {t:e}: {:?}", b.value);
    }
    Ok(())
}
