//! Row-stochastic generators of the classical dynamics.
//!
//! Distributions are row vectors: one time step maps `p` to `p P`. Each chain
//! is stored as a product of factors `P = F_1 F_2 ⋯` applied in order:
//!
//! - local: bath, then the first brickwork layer, then the second;
//! - nonlocal: bath, then uniform averaging within every sector;
//! - lumped: a single sparse matrix on sectors.
//!
//! Every factor of the full-space chains is a symmetric matrix, so the local
//! and nonlocal chains are doubly stochastic with the uniform distribution
//! stationary. The lumped chain is reversible with `π(s) ∝ |K_s|`.

pub mod full;
pub mod gate;
pub mod lumped;
pub mod sparse;

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use full::{FullSpace, Layer, SectorIndex, DEFAULT_STATE_CAP};
pub use gate::GateKind;
pub use lumped::DEFAULT_SECTOR_CAP;
pub use sparse::{Csr, Weight};

use crate::error::{invalid, Result};
use crate::walks::SectorId;

/// Order of the two brickwork layers after the bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerOrder {
    /// Bath, then pairs `(2i, 2i+1)`, then pairs `(2i-1, 2i)`.
    #[default]
    EvenThenOdd,
    OddThenEven,
}

impl LayerOrder {
    pub fn layers(self) -> [Layer; 2] {
        match self {
            Self::EvenThenOdd => [Layer::Even, Layer::Odd],
            Self::OddThenEven => [Layer::Odd, Layer::Even],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    Local { gate: GateKind, order: LayerOrder },
    Nonlocal,
    Lumped,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Basis {
    Full { n: u32, len: usize },
    Lumped { n: u32, len: usize, sectors: Arc<Vec<SectorId>> },
    Custom,
}

#[derive(Debug, Clone)]
pub enum Factor<T> {
    Sparse(Csr<T>),
    SectorAverage(Arc<SectorIndex>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainOptions {
    pub state_cap: u64,
    pub sector_cap: u64,
    pub order: LayerOrder,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self {
            state_cap: DEFAULT_STATE_CAP,
            sector_cap: DEFAULT_SECTOR_CAP,
            order: LayerOrder::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StochasticChain<T> {
    dim: usize,
    basis: Basis,
    kind: ChainKind,
    factors: Vec<Factor<T>>,
}

/// `M_loc`: bath, then two brickwork layers of `gate`.
pub fn build_full_local<T: Weight>(
    n: u32,
    len: usize,
    gate: GateKind,
    opts: &ChainOptions,
) -> Result<StochasticChain<T>> {
    let space = FullSpace::new(n, len, opts.state_cap)?;
    let (alpha, beta) = gate.block::<T>(n);
    let mut factors = vec![Factor::Sparse(full::bath_matrix(&space))];
    for layer in opts.order.layers() {
        factors.push(Factor::Sparse(full::layer_matrix(
            &space,
            layer,
            alpha.clone(),
            beta.clone(),
        )));
    }
    Ok(StochasticChain {
        dim: space.size,
        basis: Basis::Full { n, len },
        kind: ChainKind::Local {
            gate,
            order: opts.order,
        },
        factors,
    })
}

/// `M_nonloc`: bath, then full mixing inside each sector.
pub fn build_full_nonlocal<T: Weight>(
    n: u32,
    len: usize,
    opts: &ChainOptions,
) -> Result<StochasticChain<T>> {
    let space = FullSpace::new(n, len, opts.state_cap)?;
    let index = SectorIndex::new(&space)?;
    Ok(StochasticChain {
        dim: space.size,
        basis: Basis::Full { n, len },
        kind: ChainKind::Nonlocal,
        factors: vec![
            Factor::Sparse(full::bath_matrix(&space)),
            Factor::SectorAverage(index),
        ],
    })
}

/// The nonlocal chain aggregated onto sectors.
pub fn build_lumped<T: Weight>(n: u32, len: usize, opts: &ChainOptions) -> Result<StochasticChain<T>> {
    if n < 2 || len == 0 {
        return Err(invalid(format!("need N ≥ 2 and L ≥ 1, got N = {n}, L = {len}")));
    }
    let (sectors, m) = lumped::lumped_matrix(n, len, opts.sector_cap)?;
    Ok(StochasticChain {
        dim: sectors.len(),
        basis: Basis::Lumped { n, len, sectors },
        kind: ChainKind::Lumped,
        factors: vec![Factor::Sparse(m)],
    })
}

impl<T: Weight> StochasticChain<T> {
    /// Wraps an arbitrary square row-stochastic matrix.
    pub fn from_csr(m: Csr<T>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(invalid("a chain needs a non-empty square matrix"));
        }
        for (i, s) in m.row_sums().iter().enumerate() {
            if (s.to_f64() - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("row {i} sums to {}", s.to_f64())));
            }
        }
        Ok(Self {
            dim: m.nrows(),
            basis: Basis::Custom,
            kind: ChainKind::Custom,
            factors: vec![Factor::Sparse(m)],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn factors(&self) -> &[Factor<T>] {
        &self.factors
    }

    /// `(N, L)` for chains built from a pair-flip system.
    pub fn system(&self) -> Option<(u32, usize)> {
        match &self.basis {
            Basis::Full { n, len } | Basis::Lumped { n, len, .. } => Some((*n, *len)),
            Basis::Custom => None,
        }
    }

    /// The sector index of a nonlocal chain.
    pub fn sector_index(&self) -> Option<&Arc<SectorIndex>> {
        self.factors.iter().find_map(|f| match f {
            Factor::SectorAverage(ix) => Some(ix),
            Factor::Sparse(_) => None,
        })
    }

    /// One time step of a distribution: `p ↦ p P`.
    pub fn step(&self, p: &[T]) -> Vec<T> {
        assert_eq!(p.len(), self.dim);
        let mut x = p.to_vec();
        for f in &self.factors {
            x = match f {
                Factor::Sparse(m) => m.vec_mul(&x),
                Factor::SectorAverage(ix) => ix.average(&x),
            };
        }
        x
    }

    /// `P x` for a column vector.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.dim);
        let mut y = x.to_vec();
        for f in self.factors.iter().rev() {
            y = match f {
                Factor::Sparse(m) => m.mul_vec(&y),
                Factor::SectorAverage(ix) => ix.average(&y),
            };
        }
        y
    }

    /// Row `i` of `P` as sorted `(column, value)` pairs.
    pub fn row(&self, i: usize) -> Vec<(usize, T)> {
        let mut x: BTreeMap<usize, T> = BTreeMap::new();
        x.insert(i, T::one());
        for f in &self.factors {
            x = step_sparse(f, &x);
        }
        x.into_iter().filter(|(_, v)| !v.is_zero()).collect()
    }

    /// The composed matrix. Refuses when the estimated number of stored
    /// entries exceeds `nnz_cap`.
    pub fn to_csr(&self, nnz_cap: u64) -> Result<Csr<T>> {
        if let [Factor::Sparse(m)] = self.factors.as_slice() {
            return Ok(m.clone());
        }
        let mut total = 0u64;
        let mut rows = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let r = self.row(i);
            total += r.len() as u64;
            if total > nnz_cap {
                return Err(crate::Error::CapExceeded {
                    what: "composed chain entries",
                    needed: format!("> {total}"),
                    cap: nnz_cap,
                });
            }
            rows.push(r);
        }
        Ok(Csr::from_rows(self.dim, rows))
    }

    pub fn row_sums(&self) -> Vec<T> {
        self.apply(&vec![T::one(); self.dim])
    }

    pub fn col_sums(&self) -> Vec<T> {
        self.step(&vec![T::one(); self.dim])
    }

    /// Strong connectivity of the transition graph.
    pub fn is_irreducible(&self) -> bool {
        self.reaches_all(false) && self.reaches_all(true)
    }

    fn reaches_all(&self, backwards: bool) -> bool {
        let mut seen = vec![false; self.dim];
        seen[0] = true;
        let mut count = 1;
        loop {
            let next = self.support_step(&seen, backwards);
            for (s, n) in seen.iter_mut().zip(next) {
                *s |= n;
            }
            let c = seen.iter().filter(|&&b| b).count();
            if c == count {
                return c == self.dim;
            }
            count = c;
        }
    }

    fn support_step(&self, x: &[bool], backwards: bool) -> Vec<bool> {
        let mut cur = x.to_vec();
        let order: Vec<&Factor<T>> = if backwards {
            self.factors.iter().rev().collect()
        } else {
            self.factors.iter().collect()
        };
        for f in order {
            cur = match f {
                Factor::Sparse(m) => {
                    let mut y = vec![false; self.dim];
                    for i in 0..m.nrows() {
                        for (c, _) in m.row(i) {
                            if backwards {
                                y[i] |= cur[c];
                            } else if cur[i] {
                                y[c] = true;
                            }
                        }
                    }
                    y
                }
                Factor::SectorAverage(ix) => {
                    let mut y = vec![false; self.dim];
                    for k in 0..ix.num_sectors() {
                        let m = ix.members_of(k);
                        if m.iter().any(|&i| cur[i as usize]) {
                            for &i in m {
                                y[i as usize] = true;
                            }
                        }
                    }
                    y
                }
            };
        }
        cur
    }

    /// Writes `row col value` lines (0-based) for every nonzero entry.
    pub fn write_coordinates<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {} {} row-stochastic", self.dim, self.dim)?;
        for i in 0..self.dim {
            for (c, v) in self.row(i) {
                writeln!(out, "{i} {c} {}", v.format())?;
            }
        }
        Ok(())
    }

    pub fn to_f64(&self) -> StochasticChain<f64> {
        StochasticChain {
            dim: self.dim,
            basis: self.basis.clone(),
            kind: self.kind,
            factors: self
                .factors
                .iter()
                .map(|f| match f {
                    Factor::Sparse(m) => Factor::Sparse(m.to_f64()),
                    Factor::SectorAverage(ix) => Factor::SectorAverage(ix.clone()),
                })
                .collect(),
        }
    }
}

fn step_sparse<T: Weight>(f: &Factor<T>, x: &BTreeMap<usize, T>) -> BTreeMap<usize, T> {
    let mut y: BTreeMap<usize, T> = BTreeMap::new();
    match f {
        Factor::Sparse(m) => {
            for (&i, xi) in x {
                for (c, v) in m.row(i) {
                    let e = y.entry(c).or_insert_with(T::zero);
                    *e = e.clone() + xi.clone() * v.clone();
                }
            }
        }
        Factor::SectorAverage(ix) => {
            let mut mass: BTreeMap<usize, T> = BTreeMap::new();
            for (&i, xi) in x {
                let k = ix.sector_of[i] as usize;
                let e = mass.entry(k).or_insert_with(T::zero);
                *e = e.clone() + xi.clone();
            }
            for (k, total) in mass {
                let m = ix.members_of(k);
                let mean = total / T::from_u64_ratio(m.len() as u64, 1);
                for &j in m {
                    y.insert(j as usize, mean.clone());
                }
            }
        }
    }
    y
}

/// Result of checking that the nonlocal chain lumps exactly onto sectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LumpingReport {
    pub n: u32,
    pub len: usize,
    pub states: usize,
    pub sectors: usize,
    /// `V P = P_lumped V`, where row `A` of `V` is uniform on sector `A`.
    pub identity: bool,
}

impl LumpingReport {
    pub fn passed(&self) -> bool {
        self.identity
    }
}

/// Exact rational check that the nonlocal chain lumps onto sectors.
///
/// Starting uniform on sector `A`, one step lands uniform within each sector
/// `B` with total mass `P_lumped(A, B)`. The state-wise version (every state
/// of `A` sending the same mass to `B`) does not hold, because the bath acts
/// before the averaging and sees where the prefix of each state ends.
pub fn check_lumping(n: u32, len: usize, opts: &ChainOptions) -> Result<LumpingReport> {
    use num_rational::BigRational;
    let full = build_full_nonlocal::<BigRational>(n, len, opts)?;
    let lumped = build_lumped::<BigRational>(n, len, opts)?;
    let ix = full.sector_index().expect("nonlocal chain has a sector index").clone();
    let Basis::Lumped { sectors, .. } = lumped.basis() else {
        unreachable!()
    };
    if sectors.as_slice() != ix.sectors.as_slice() {
        return Err(invalid("sector orderings of the two chains differ"));
    }
    let Factor::Sparse(lm) = &lumped.factors()[0] else {
        unreachable!()
    };
    let lumped_row = |k: usize| -> BTreeMap<usize, BigRational> {
        lm.row(k).map(|(c, v)| (c, v.clone())).collect()
    };

    let mut identity = true;
    for a in 0..ix.num_sectors() {
        let m = ix.members_of(a);
        let w = BigRational::new(1.into(), (m.len() as u64).into());
        let mut x: BTreeMap<usize, BigRational> = m.iter().map(|&i| (i as usize, w.clone())).collect();
        for f in full.factors() {
            x = step_sparse(f, &x);
        }
        x.retain(|_, v| !num_traits::Zero::is_zero(v));
        let mut expected: BTreeMap<usize, BigRational> = BTreeMap::new();
        for (b, p) in lumped_row(a) {
            let mb = ix.members_of(b);
            let each = p / BigRational::from_integer((mb.len() as u64).into());
            for &j in mb {
                expected.insert(j as usize, each.clone());
            }
        }
        if x != expected {
            identity = false;
            break;
        }
    }

    Ok(LumpingReport {
        n,
        len,
        states: full.dim(),
        sectors: ix.num_sectors(),
        identity,
    })
}
