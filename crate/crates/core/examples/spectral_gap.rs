//! Spectral gaps of the local and nonlocal chains and the Cheeger bound from
//! the cone expansions.
//!
//! ```bash
//! cargo run --release --example spectral_gap
//! ```

use pairflip::chains::{build_full_local, build_lumped, ChainOptions, GateKind};
use pairflip::spectra::{cheeger_check, spectral_gap, GapOptions};

fn main() -> pairflip::Result<()> {
    let opts = ChainOptions::default();
    let gap_opts = GapOptions::default();

    println!("{:>3} {:>12} {:>12} {:>12}", "L", "nonlocal", "2 Phi_min", "local");
    for len in 4..=8 {
        let lumped = build_lumped::<f64>(3, len, &opts)?;
        let r = cheeger_check(&lumped, &gap_opts)?;
        let local = build_full_local::<f64>(3, len, GateKind::PairFlip, &opts)?;
        let g = spectral_gap(&local, &gap_opts)?;
        println!(
            "{len:>3} {:>12.4e} {:>12.4e} {:>12.4e}",
            r.gap.gap, r.cheeger_upper, g.gap
        );
    }

    // two letters: the gap sits in a window of width ~ 1/sqrt(L)
    let r = cheeger_check(&build_lumped::<f64>(2, 11, &opts)?, &gap_opts)?;
    println!("N = 2, L = 11: gap {:.4}, window holds: {:?}", r.gap.gap, r.n2_window_holds);
    Ok(())
}
