//! The nonlocal chain aggregated onto sectors.
//!
//! A state in sector `s` has its length-`(L-1)` prefix at some tree
//! neighbour `u` of `s`, and exactly `|K_{|u|}^(L-1)|` states of `s` do. The
//! bath then appends a uniform symbol, moving the walk to any of the `N`
//! neighbours `w` of `u` (one of which is `s` itself). Since the nonlocal chain
//! is uniform within sectors after each step,
//!
//! ```text
//! P(s → w) = Σ_{u ~ s, u ~ w} |K_{|u|}^(L-1)| / (N |K_s|).
//! ```
//!
//! For `d ≥ 2` this sends weight `|K_{d-1}^(L-1)|/(N|K_s|)` to the
//! grandparent and to each of the `N-2` siblings, `|K_{d+1}^(L-1)|/(N|K_s|)`
//! to each of the `(N-1)²` grandchildren, and the rest stays.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigUint;

use super::sparse::{Csr, Weight};
use crate::census::SectorCensus;
use crate::error::Result;
use crate::walks::{enumerate_sectors_capped, SectorId};

/// Default cap on the number of sectors of a lumped chain.
pub const DEFAULT_SECTOR_CAP: u64 = 1 << 22;

pub(crate) fn lumped_matrix<T: Weight>(
    n: u32,
    len: usize,
    cap: u64,
) -> Result<(Arc<Vec<SectorId>>, Csr<T>)> {
    let sectors = enumerate_sectors_capped(n, len, cap)?;
    let census = SectorCensus::new(n, len)?;
    let lookup: HashMap<&SectorId, usize> = sectors.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let rows: Vec<Vec<(usize, T)>> = sectors
        .iter()
        .map(|s| {
            let den = census.sector_dim(s) * n;
            let mut row = Vec::new();
            for u in s.neighbours() {
                if u.depth() > len - 1 {
                    continue;
                }
                let weight: &BigUint = census.dim_at(len - 1, u.depth());
                let p = T::from_ratio(weight, &den);
                for w in u.neighbours() {
                    row.push((lookup[&w], p.clone()));
                }
            }
            row
        })
        .collect();
    let m = Csr::from_rows(sectors.len(), rows);
    Ok((Arc::new(sectors), m))
}
