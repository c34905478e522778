//! Full state space: indexing, sector membership, bath and brickwork layers.
//!
//! States are indexed in base `N` with site 1 as the most significant digit,
//! so the bath site `L` is the last digit.

use std::collections::HashMap;
use std::sync::Arc;

use super::sparse::{Csr, Weight};
use crate::error::{Error, Result};
use crate::walks::{enumerate_sectors_capped, reduce_digits, SectorId};

/// Default cap on `N^L` for full-space matrices.
pub const DEFAULT_STATE_CAP: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FullSpace {
    pub n: u32,
    pub len: usize,
    pub size: usize,
}

impl FullSpace {
    pub fn new(n: u32, len: usize, cap: u64) -> Result<Self> {
        if n < 2 || len == 0 {
            return Err(Error::InvalidParameter(format!(
                "need N ≥ 2 and L ≥ 1, got N = {n}, L = {len}"
            )));
        }
        let size = u64::from(n).checked_pow(len as u32);
        match size {
            Some(s) if s <= cap => Ok(Self {
                n,
                len,
                size: s as usize,
            }),
            _ => Err(Error::CapExceeded {
                what: "full state space N^L",
                needed: size.map_or_else(|| format!("{n}^{len}"), |s| s.to_string()),
                cap,
            }),
        }
    }

    /// `N^{L-1-p}`: the place value of 0-based site `p`.
    pub fn place(&self, p: usize) -> usize {
        (self.n as usize).pow((self.len - 1 - p) as u32)
    }

    pub fn digits(&self, mut idx: usize, out: &mut [u8]) {
        let n = self.n as usize;
        for slot in out.iter_mut().rev() {
            *slot = (idx % n) as u8;
            idx /= n;
        }
    }

    pub fn index(&self, digits: &[u8]) -> usize {
        digits
            .iter()
            .fold(0usize, |acc, &d| acc * self.n as usize + d as usize)
    }
}

/// One brickwork layer, named by the 1-based position of each pair's first
/// site: `Even` acts on `(2i, 2i+1)`, `Odd` on `(2i-1, 2i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Even,
    Odd,
}

/// 0-based first sites of the pairs in a layer. For odd `L` the pair that
/// would run past the chain end is simply absent.
pub fn layer_pairs(len: usize, layer: Layer) -> Vec<usize> {
    let start = match layer {
        Layer::Odd => 0,
        Layer::Even => 1,
    };
    (start..len.saturating_sub(1)).step_by(2).collect()
}

/// Whether a layer touches the bath site `L`.
pub fn layer_touches_bath(len: usize, layer: Layer) -> bool {
    layer_pairs(len, layer).last() == Some(&(len - 2))
}

/// `1_{L-1} ⊗ (1/N) J`: the last symbol is resampled uniformly.
pub fn bath_matrix<T: Weight>(space: &FullSpace) -> Csr<T> {
    let n = space.n as usize;
    let w = T::from_u64_ratio(1, n as u64);
    Csr::from_rows(
        space.size,
        (0..space.size).map(|i| {
            let base = i - i % n;
            (0..n).map(|b| (base + b, w.clone())).collect::<Vec<_>>()
        }),
    )
}

/// A layer of commuting two-site gates whose equal-pair block is
/// `α I + β J`.
pub fn layer_matrix<T: Weight>(space: &FullSpace, layer: Layer, alpha: T, beta: T) -> Csr<T> {
    let n = space.n as usize;
    let pairs = layer_pairs(space.len, layer);
    let steps: Vec<usize> = pairs
        .iter()
        .map(|&p| space.place(p) + space.place(p + 1))
        .collect();
    let mut digits = vec![0u8; space.len];
    let rows = (0..space.size).map(|i| {
        space.digits(i, &mut digits);
        // (pair step, current symbol) for each equal pair
        let active: Vec<(usize, usize)> = pairs
            .iter()
            .zip(&steps)
            .filter(|(&p, _)| digits[p] == digits[p + 1])
            .map(|(&p, &s)| (s, digits[p] as usize))
            .collect();
        let mut row = vec![(i, T::one())];
        for &(step, a) in &active {
            let base_of = |idx: usize| idx - a * step;
            let mut next = Vec::with_capacity(row.len() * n);
            for (idx, w) in &row {
                for c in 0..n {
                    let mut g = beta.clone();
                    if c == a {
                        g = g + alpha.clone();
                    }
                    if g.is_zero() {
                        continue;
                    }
                    next.push((base_of(*idx) + c * step, w.clone() * g));
                }
            }
            row = next;
        }
        row
    });
    Csr::from_rows(space.size, rows)
}

/// Sector membership of every full-space state.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorIndex {
    pub n: u32,
    pub len: usize,
    /// Sectors ordered by depth, then lexicographically.
    pub sectors: Vec<SectorId>,
    pub sector_of: Vec<u32>,
    /// States grouped by sector: members of sector `k` are
    /// `members[offsets[k]..offsets[k + 1]]`, in increasing order.
    pub members: Vec<u32>,
    pub offsets: Vec<usize>,
}

impl SectorIndex {
    pub fn new(space: &FullSpace) -> Result<Arc<Self>> {
        let sectors = enumerate_sectors_capped(space.n, space.len, space.size as u64)?;
        let lookup: HashMap<&[u8], u32> = sectors
            .iter()
            .enumerate()
            .map(|(i, k)| (k.digits(), i as u32))
            .collect();
        let mut digits = vec![0u8; space.len];
        let sector_of: Vec<u32> = (0..space.size)
            .map(|i| {
                space.digits(i, &mut digits);
                lookup[reduce_digits(&digits).as_slice()]
            })
            .collect();
        let mut offsets = vec![0usize; sectors.len() + 1];
        for &k in &sector_of {
            offsets[k as usize + 1] += 1;
        }
        for k in 0..sectors.len() {
            offsets[k + 1] += offsets[k];
        }
        let mut fill = offsets.clone();
        let mut members = vec![0u32; space.size];
        for (i, &k) in sector_of.iter().enumerate() {
            members[fill[k as usize]] = i as u32;
            fill[k as usize] += 1;
        }
        Ok(Arc::new(Self {
            n: space.n,
            len: space.len,
            sectors,
            sector_of,
            members,
            offsets,
        }))
    }

    pub fn num_sectors(&self) -> usize {
        self.sectors.len()
    }

    pub fn size(&self, k: usize) -> usize {
        self.offsets[k + 1] - self.offsets[k]
    }

    pub fn members_of(&self, k: usize) -> &[u32] {
        &self.members[self.offsets[k]..self.offsets[k + 1]]
    }

    /// Replaces every entry by the mean over its sector.
    pub fn average<T: Weight>(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        for k in 0..self.num_sectors() {
            let m = self.members_of(k);
            let total = m
                .iter()
                .fold(T::zero(), |acc, &i| acc + x[i as usize].clone());
            if total.is_zero() {
                continue;
            }
            let mean = total / T::from_u64_ratio(m.len() as u64, 1);
            for &i in m {
                out[i as usize] = mean.clone();
            }
        }
        out
    }
}
