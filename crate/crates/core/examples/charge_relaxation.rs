//! Monte Carlo relaxation of the staggered charge from the maximal-charge
//! state: diffusive for two letters, exponentially slow for three.
//!
//! ```bash
//! cargo run --release --example charge_relaxation
//! ```

use pairflip::bounds::charge_time_lower_bound;
use pairflip::montecarlo::{estimate_tq, run_ensemble, Observable, SimConfig};

fn main() -> pairflip::Result<()> {
    for len in [8, 16, 32] {
        let cfg = SimConfig {
            trajectories: 2000,
            seed: 1,
            ..SimConfig::new(2, len)
        };
        let fp = estimate_tq(&cfg)?;
        println!("N = 2, L = {len}: t_Q(0.1) = {:?}, 95% CI {:?}..{:?}", fp.t_q, fp.ci_low, fp.ci_high);
    }

    for len in [8, 12, 16] {
        let cfg = SimConfig {
            trajectories: 2000,
            seed: 1,
            ..SimConfig::new(3, len)
        };
        let fp = estimate_tq(&cfg)?;
        let bound = charge_time_lower_bound(3, len, 0.1)?.value;
        println!("N = 3, L = {len}: t_Q(0.1) = {:?}, lower bound {bound:.1?}", fp.t_q);
    }

    // full time series of two observables
    let cfg = SimConfig {
        trajectories: 500,
        t_max: 200,
        observables: vec![Observable::Charge(1), Observable::Depth],
        ..SimConfig::new(3, 12)
    };
    let e = run_ensemble(&cfg)?;
    let mut out = Vec::new();
    e.write_csv(&mut out)?;
    let text = String::from_utf8_lossy(&out);
    for line in text.lines().step_by(50) {
        println!("{line}");
    }
    Ok(())
}
