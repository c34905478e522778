//! Sector dimensions for a three-letter alphabet, checked against the
//! alternating-sum closed forms, plus the cone statistics used as bottlenecks.
//!
//! ```bash
//! cargo run --release --example sector_census -- 12
//! ```

use pairflip::census::closed_form::kd_closed_form;
use pairflip::census::{cone_stats, rho, velocity, SectorCensus};
use pairflip::walks::{reduce, SpinString};

fn main() -> pairflip::Result<()> {
    let len: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(12);
    let n = 3;

    let s = SpinString::parse(n, "122131")?;
    println!("{s} reduces to sector {}", reduce(&s));

    let census = SectorCensus::new(n, len)?;
    println!("N = {n}, L = {len}: {} sectors, total {}", census.sector_count(), census.total());
    println!("{:>3} {:>10} {:>12} {:>12}", "d", "mult", "dim", "closed form");
    for d in census.depths() {
        println!(
            "{d:>3} {:>10} {:>12} {:>12}",
            census.multiplicity(d),
            census.dim(d),
            kd_closed_form(n, len, d)?
        );
    }

    println!("v_N L = {:.2}, rho_N = {:.4}", velocity(n) * len as f64, rho(n));
    for d in (2..=len).step_by(2) {
        let c = cone_stats(&census, d)?;
        println!("C_{d}: volume {}, expansion {:.4e}", c.volume, c.expansion_f64());
    }
    Ok(())
}
