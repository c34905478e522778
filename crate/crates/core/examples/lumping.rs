//! Builds the nonlocal chain on all N^L strings and on sectors, and checks
//! exactly that the first lumps onto the second.
//!
//! ```bash
//! cargo run --release --example lumping
//! ```

use num_rational::BigRational;
use pairflip::chains::{build_full_local, build_full_nonlocal, build_lumped, check_lumping, ChainOptions, GateKind};

fn main() -> pairflip::Result<()> {
    let (n, len) = (3, 6);
    let opts = ChainOptions::default();

    let local = build_full_local::<f64>(n, len, GateKind::PairFlip, &opts)?;
    let nonlocal = build_full_nonlocal::<f64>(n, len, &opts)?;
    let lumped = build_lumped::<BigRational>(n, len, &opts)?;
    println!("local chain: {} states, irreducible: {}", local.dim(), local.is_irreducible());
    println!("nonlocal chain: {} states", nonlocal.dim());
    println!("lumped chain: {} sectors", lumped.dim());

    // rows of the exact lumped matrix sum to one
    let sums = lumped.row_sums();
    println!("lumped rows stochastic: {}", sums.iter().all(|s| *s == BigRational::from_integer(1.into())));

    for l in 2..=len {
        let r = check_lumping(n, l, &opts)?;
        println!("L = {l}: {} states -> {} sectors, identity holds: {}", r.states, r.sectors, r.passed());
    }
    Ok(())
}
