//! Probability of leaving the cone C_2 from a uniform start inside it, exactly
//! on a small system and by sampling on a large one, against t Phi(C_2).
//!
//! ```bash
//! cargo run --release --example cone_escape
//! ```

use num_rational::BigRational;
use pairflip::census::cone::Cone;
use pairflip::census::{cone_stats, SectorCensus};
use pairflip::chains::{build_lumped, ChainOptions};
use pairflip::montecarlo::{cone_escape_probability, SimConfig};
use pairflip::numeric::rational_f64;
use pairflip::spectra::escape_leak;

fn main() -> pairflip::Result<()> {
    let (n, len) = (3, 8);
    let phi = cone_stats(&SectorCensus::new(n, len)?, 2)?.boundary_flow;
    let cone = Cone::canonical(n, 2)?;
    let chain = build_lumped::<BigRational>(n, len, &ChainOptions::default())?;
    let leak = escape_leak(&chain, |k| cone.contains(k), 20)?;
    for t in [1, 5, 10, 20] {
        println!(
            "L = {len}, t = {t:>2}: leak {:.5} <= t Phi = {:.5}",
            rational_f64(&leak[t - 1]),
            t as f64 * rational_f64(&phi)
        );
    }

    let cfg = SimConfig {
        trajectories: 5000,
        seed: 2,
        ..SimConfig::new(3, 30)
    };
    let r = cone_escape_probability(&cfg, 2, &[1, 10, 100])?;
    for p in &r.points {
        println!(
            "L = 30, t = {:>3}: {:.2e} +- {:.1e}, bound {:.2e}",
            p.t, p.estimate, p.std_error, p.bound
        );
    }
    Ok(())
}
