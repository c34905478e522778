//! Zero-mode counts of the Temperley-Lieb chain and the impurity memory bound.
//!
//! ```bash
//! cargo run --release --example temperley_lieb
//! ```

use pairflip::census::temperley_lieb::{tl_impurity_degeneracy, ulp_error, Impurities};
use pairflip::census::{tl_memory_bound, tl_zero_modes, tl_zero_modes_closed_form};

fn main() -> pairflip::Result<()> {
    for n in [3, 4, 5] {
        let exact = tl_zero_modes(n, 30)?;
        let closed = tl_zero_modes_closed_form(n, 30)?;
        println!("N = {n}, L = 30: {exact} (closed form off by {:.2} ulp)", ulp_error(closed, &exact));
    }
    let one = tl_impurity_degeneracy(3, 20, Impurities::One)?;
    let two = tl_impurity_degeneracy(3, 20, Impurities::Two)?;
    println!("N = 3, L = 20 impurities: one {one}, two {two}");
    println!("memory bound N = 3: {:.4}", tl_memory_bound(3)?);
    Ok(())
}
