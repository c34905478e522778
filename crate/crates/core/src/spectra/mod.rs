//! Spectral gaps, subset expansion and Cheeger checks.
//!
//! Gaps are computed on a symmetric matrix with the same nonzero spectrum as
//! the chain:
//!
//! - lumped chain: `D^{1/2} P D^{-1/2}` with `D = diag(|K_s|)` (reversible);
//! - nonlocal chain `P = B Π` (bath `B`, sector averaging `Π`): `Π B Π`;
//! - local chain `P = B X Y`: exactly one of the layers `X`, `Y` touches the
//!   bath site and the other commutes with `B`, so `P` is similar (up to
//!   zero eigenvalues) to `Y^{1/2} (B X) Y^{1/2}` with `Y` the touching layer.
//!
//! All of these are positive semidefinite, so the spectrum lies in `[0, 1]`
//! and the second-largest eigenvalue is also the second-largest in modulus.
//! Arbitrary chains fall back to a dense nonsymmetric eigensolve.

pub mod lanczos;

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigUint;
use num_rational::BigRational;
use serde::Serialize;

use crate::census::cone::Cone;
use crate::census::{n2_min_expansion, SectorCensus};
use crate::chains::full::{layer_matrix, layer_touches_bath, FullSpace};
use crate::chains::{Basis, ChainKind, Csr, Factor, StochasticChain, Weight, DEFAULT_STATE_CAP};
use crate::error::{invalid, Error, Result};
use crate::numeric::{ratio_f64, rational_f64};
use crate::walks::SectorId;

/// Largest dimension handled by the dense solvers by default.
pub const DEFAULT_DENSE_CAP: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub dense_cap: usize,
    pub krylov: usize,
    /// Verify strong connectivity before solving.
    pub check_irreducible: bool,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iterations: 1_000_000,
            dense_cap: DEFAULT_DENSE_CAP,
            krylov: 300,
            check_irreducible: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapMethod {
    Dense,
    Iterative,
    DenseNonsymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapResult {
    /// `1 - λ₂`.
    pub gap: f64,
    pub lambda2: f64,
    pub method: GapMethod,
    /// `‖S x - λ₂ x‖` for the returned eigenvector of the symmetric form.
    pub residual: f64,
    /// Matrix-vector products (iterative) or matrix dimension (dense).
    pub iterations: usize,
    pub dim: usize,
}

impl GapResult {
    /// `1/Δ`.
    pub fn relaxation_time(&self) -> f64 {
        1.0 / self.gap
    }

    /// `t_rel ln 4`, a lower bound on the mixing time.
    pub fn mixing_time_lower(&self) -> f64 {
        self.relaxation_time() * 4f64.ln()
    }
}

type Operator = Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + Send>;

/// A symmetric operator with a known top eigenvector (eigenvalue 1).
pub struct SymmetricForm {
    pub dim: usize,
    pub top: Vec<f64>,
    apply: Operator,
}

impl SymmetricForm {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.apply)(x)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        let mut e = vec![0.0; self.dim];
        for j in 0..self.dim {
            e[j] = 1.0;
            let col = self.apply(&e);
            e[j] = 0.0;
            for (i, v) in col.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        // symmetrize away rounding asymmetry
        (&m + m.transpose()) * 0.5
    }
}

fn unit_uniform(dim: usize) -> Vec<f64> {
    vec![1.0 / (dim as f64).sqrt(); dim]
}

/// The symmetric form of a pair-flip chain, or `None` for custom chains.
pub fn symmetric_form(chain: &StochasticChain<f64>) -> Result<Option<SymmetricForm>> {
    let dim = chain.dim();
    match (chain.kind(), chain.basis()) {
        (ChainKind::Lumped, Basis::Lumped { n, len, sectors }) => {
            let census = SectorCensus::new(*n, *len)?;
            let Factor::Sparse(p) = &chain.factors()[0] else {
                return Err(invalid("lumped chain must be a single sparse factor"));
            };
            let s = symmetrize_lumped(p, sectors, &census);
            let top = lumped_top(sectors, &census);
            Ok(Some(SymmetricForm {
                dim,
                top,
                apply: Box::new(move |x| s.mul_vec(x)),
            }))
        }
        (ChainKind::Nonlocal, Basis::Full { .. }) => {
            let factors = chain.factors().to_vec();
            let (Factor::Sparse(bath), Factor::SectorAverage(ix)) = (&factors[0], &factors[1]) else {
                return Err(invalid("nonlocal chain must be bath then averaging"));
            };
            let (bath, ix) = (bath.clone(), ix.clone());
            Ok(Some(SymmetricForm {
                dim,
                top: unit_uniform(dim),
                apply: Box::new(move |x| ix.average(&bath.mul_vec(&ix.average(x)))),
            }))
        }
        (ChainKind::Local { gate, order }, Basis::Full { n, len }) => {
            let (n, len) = (*n, *len);
            let space = FullSpace::new(n, len, u64::MAX)?;
            let [first, second] = order.layers();
            let Factor::Sparse(bath) = &chain.factors()[0] else {
                return Err(invalid("local chain must start with the bath"));
            };
            let (touching, other) = if len >= 2 && layer_touches_bath(len, first) {
                (first, second)
            } else {
                (second, first)
            };
            let (a, b) = gate.block::<f64>(n);
            let x = layer_matrix(&space, other, a, b);
            let (ra, rb) = gate.sqrt_block(n);
            let y_half = layer_matrix(&space, touching, ra, rb);
            let bath = bath.clone();
            Ok(Some(SymmetricForm {
                dim,
                top: unit_uniform(dim),
                apply: Box::new(move |v| {
                    let t = y_half.mul_vec(v);
                    let t = x.mul_vec(&t);
                    let t = bath.mul_vec(&t);
                    y_half.mul_vec(&t)
                }),
            }))
        }
        _ => Ok(None),
    }
}

fn depth_ratio_sqrt(census: &SectorCensus, cache: &mut HashMap<(usize, usize), f64>, i: usize, j: usize) -> f64 {
    *cache
        .entry((i, j))
        .or_insert_with(|| ratio_f64(census.dim(i), census.dim(j)).sqrt())
}

fn symmetrize_lumped(p: &Csr<f64>, sectors: &[SectorId], census: &SectorCensus) -> Csr<f64> {
    let mut cache = HashMap::new();
    let rows: Vec<Vec<(usize, f64)>> = (0..p.nrows())
        .map(|i| {
            p.row(i)
                .map(|(j, v)| {
                    let r = depth_ratio_sqrt(census, &mut cache, sectors[i].depth(), sectors[j].depth());
                    (j, v * r)
                })
                .collect()
        })
        .collect();
    Csr::from_rows(p.ncols(), rows)
}

fn lumped_top(sectors: &[SectorId], census: &SectorCensus) -> Vec<f64> {
    let max = census.dim(census.len() % 2).clone();
    let mut v: Vec<f64> = sectors
        .iter()
        .map(|k| ratio_f64(census.sector_dim(k), &max).sqrt())
        .collect();
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    v
}

/// Spectral gap `1 - λ₂` of a chain.
pub fn spectral_gap(chain: &StochasticChain<f64>, opts: &GapOptions) -> Result<GapResult> {
    if chain.dim() < 2 {
        return Err(invalid("a gap needs at least two states"));
    }
    if opts.check_irreducible && !matches!(chain.kind(), ChainKind::Lumped) && !chain.is_irreducible() {
        return Err(invalid("chain is not irreducible"));
    }
    match symmetric_form(chain)? {
        Some(form) => gap_of_form(&form, opts),
        None => dense_nonsymmetric_gap(chain, opts),
    }
}

/// Gap of a symmetric form: dense below `dense_cap`, Lanczos above.
pub fn gap_of_form(form: &SymmetricForm, opts: &GapOptions) -> Result<GapResult> {
    if form.dim <= opts.dense_cap {
        let m = form.to_dense();
        let eig = SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..form.dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let l2 = eig.eigenvalues[order[1]];
        let v = eig.eigenvectors.column(order[1]).into_owned();
        let residual = (&m * &v - &v * l2).norm();
        if residual > opts.tol {
            return Err(Error::NoConvergence {
                iterations: form.dim,
                residual,
            });
        }
        return Ok(GapResult {
            gap: 1.0 - l2,
            lambda2: l2,
            method: GapMethod::Dense,
            residual,
            iterations: form.dim,
            dim: form.dim,
        });
    }
    let op = |x: &[f64]| form.apply(x);
    let top = lanczos::top_eigen(
        &op,
        form.dim,
        std::slice::from_ref(&form.top),
        opts.tol,
        opts.max_iterations,
        opts.krylov,
    )?;
    Ok(GapResult {
        gap: 1.0 - top.value,
        lambda2: top.value,
        method: GapMethod::Iterative,
        residual: top.residual,
        iterations: top.matvecs,
        dim: form.dim,
    })
}

fn dense_nonsymmetric_gap(chain: &StochasticChain<f64>, opts: &GapOptions) -> Result<GapResult> {
    if chain.dim() > opts.dense_cap {
        return Err(Error::CapExceeded {
            what: "dense nonsymmetric eigensolve",
            needed: chain.dim().to_string(),
            cap: opts.dense_cap as u64,
        });
    }
    let m = chain.to_csr(u64::MAX)?.to_dense_f64();
    let mut ev = complex_eigenvalues(m, opts.max_iterations)?;
    ev.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (re, im) = ev[1];
    Ok(GapResult {
        gap: 1.0 - re,
        lambda2: re,
        method: GapMethod::DenseNonsymmetric,
        residual: im.abs(),
        iterations: chain.dim(),
        dim: chain.dim(),
    })
}

/// Eigenvalues `(re, im)` of a general real matrix via a bounded Schur
/// iteration.
pub fn complex_eigenvalues(m: DMatrix<f64>, max_iterations: usize) -> Result<Vec<(f64, f64)>> {
    let dim = m.nrows();
    let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, max_iterations).ok_or(Error::NoConvergence {
        iterations: max_iterations,
        residual: f64::NAN,
    })?;
    let ev = schur.complex_eigenvalues();
    debug_assert_eq!(ev.len(), dim);
    Ok(ev.iter().map(|z| (z.re, z.im)).collect())
}

/// Every eigenvalue of a symmetric form, in decreasing order.
pub fn dense_spectrum(form: &SymmetricForm, cap: usize) -> Result<Vec<f64>> {
    if form.dim > cap {
        return Err(Error::CapExceeded {
            what: "dense spectrum",
            needed: form.dim.to_string(),
            cap: cap as u64,
        });
    }
    let mut ev: Vec<f64> = form.to_dense().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// Nonzero spectrum of the full nonlocal chain `B Π`, computed densely on
/// prefix space: with `B = Q Qᵀ` (`Q` the `N^L × N^{L-1}` prefix map scaled by
/// `1/√N`), the nonzero eigenvalues of `B Π` are those of `Qᵀ Π Q`.
pub fn nonlocal_prefix_spectrum(n: u32, len: usize, cap: usize) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(invalid("prefix form needs L ≥ 2"));
    }
    let space = FullSpace::new(n, len, DEFAULT_STATE_CAP)?;
    let ix = crate::chains::SectorIndex::new(&space)?;
    let np = space.size / n as usize;
    if np > cap {
        return Err(Error::CapExceeded {
            what: "prefix-space dense spectrum",
            needed: np.to_string(),
            cap: cap as u64,
        });
    }
    let nn = n as usize;
    let mut m = DMatrix::<f64>::zeros(np, np);
    // (Qᵀ Π Q)(p, p') = (1/N) Σ_{a, b} [sector(pa) = sector(p'b)] / |sector|
    for p in 0..np {
        for a in 0..nn {
            let k = ix.sector_of[p * nn + a] as usize;
            let w = 1.0 / (nn as f64 * ix.size(k) as f64);
            for &t in ix.members_of(k) {
                m[(p, t as usize / nn)] += w;
            }
        }
    }
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// Eigenvalues above `threshold`, decreasing.
pub fn nonzero(ev: &[f64], threshold: f64) -> Vec<f64> {
    ev.iter().copied().filter(|&x| x > threshold).collect()
}

/// Uniform-start probability flow out of `subset` in one step:
/// `Φ(R) = (1/|R|) Σ_{ψ ∈ R, ψ' ∉ R} P(ψ → ψ')`.
///
/// For lumped chains each sector is weighted by its dimension, so the result
/// equals the expansion of the corresponding union of sectors in full space.
pub fn subset_expansion<T: Weight>(chain: &StochasticChain<T>, subset: &[bool]) -> Result<T> {
    if subset.len() != chain.dim() {
        return Err(invalid("subset mask has the wrong length"));
    }
    let inside = subset.iter().filter(|&&b| b).count();
    if inside == 0 || inside == chain.dim() {
        return Err(invalid("subset must be nonempty and proper"));
    }
    let weights = state_weights(chain)?;
    let start: Vec<T> = weights
        .iter()
        .zip(subset)
        .map(|(w, &b)| if b { w.clone() } else { T::zero() })
        .collect();
    let volume = start.iter().fold(T::zero(), |a, x| a + x.clone());
    let out = chain.step(&start);
    let leaked = out
        .iter()
        .zip(subset)
        .filter(|(_, &b)| !b)
        .fold(T::zero(), |a, (x, _)| a + x.clone());
    Ok(leaked / volume)
}

/// Number of full-space states behind each basis element.
fn state_weights<T: Weight>(chain: &StochasticChain<T>) -> Result<Vec<T>> {
    Ok(match chain.basis() {
        Basis::Lumped { n, len, sectors } => {
            let census = SectorCensus::new(*n, *len)?;
            let one = BigUint::from(1u32);
            sectors
                .iter()
                .map(|k| T::from_ratio(census.sector_dim(k), &one))
                .collect()
        }
        _ => vec![T::one(); chain.dim()],
    })
}

/// Membership mask of a sector set in the chain's own basis.
pub fn mask_of<T: Weight>(chain: &StochasticChain<T>, keep: impl Fn(&SectorId) -> bool) -> Result<Vec<bool>> {
    match chain.basis() {
        Basis::Lumped { sectors, .. } => Ok(sectors.iter().map(keep).collect()),
        Basis::Full { .. } => {
            let ix = match chain.sector_index() {
                Some(ix) => ix.clone(),
                None => {
                    let (n, len) = chain.system().expect("full basis");
                    crate::chains::SectorIndex::new(&FullSpace::new(n, len, u64::MAX)?)?
                }
            };
            let per_sector: Vec<bool> = ix.sectors.iter().map(&keep).collect();
            Ok(ix.sector_of.iter().map(|&k| per_sector[k as usize]).collect())
        }
        Basis::Custom => Err(invalid("custom chains have no sectors")),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheegerCandidate {
    pub name: String,
    pub expansion: f64,
    /// Exact expansion from the census formula, when available.
    pub census_expansion: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheegerReport {
    pub gap: GapResult,
    pub candidates: Vec<CheegerCandidate>,
    pub min_expansion: f64,
    /// `2 Φ_min`; a true upper bound on the gap for any candidate set.
    pub cheeger_upper: f64,
    /// `½ Φ_min²`; a lower bound only if the candidate set contains the true
    /// minimum, which is asserted only for `N = 2`.
    pub cheeger_lower_witness: f64,
    pub upper_holds: bool,
    pub lower_holds: Option<bool>,
    /// For `N = 2`: the boundary-state ratio `Φ*` and the window
    /// `½Φ*² ≤ Δ ≤ 2Φ*` it implies.
    pub n2_phi_star: Option<f64>,
    pub n2_window_holds: Option<bool>,
}

/// Computes the gap and tests it against every cone `C_d` (and the principal
/// branch for odd `L`).
pub fn cheeger_check(chain: &StochasticChain<f64>, opts: &GapOptions) -> Result<CheegerReport> {
    let (n, len) = chain
        .system()
        .ok_or_else(|| invalid("Cheeger candidates need a pair-flip chain"))?;
    let gap = spectral_gap(chain, opts)?;
    let census = SectorCensus::new(n, len)?;
    let mut candidates = Vec::new();
    for d in (2..=len).filter(|d| (len - d) % 2 == 0) {
        let cone = Cone::canonical(n, d)?;
        let mask = mask_of(chain, |k| cone.contains(k))?;
        candidates.push(CheegerCandidate {
            name: format!("C_{d}"),
            expansion: subset_expansion(chain, &mask)?,
            census_expansion: Some(crate::census::cone_stats(&census, d)?.expansion_f64()),
        });
    }
    if len % 2 == 1 {
        let cone = Cone::principal(n)?;
        let mask = mask_of(chain, |k| cone.contains(k))?;
        candidates.push(CheegerCandidate {
            name: "branch".into(),
            expansion: subset_expansion(chain, &mask)?,
            census_expansion: Some(crate::census::principal_branch(&census)?.expansion_f64()),
        });
    }
    let min_expansion = candidates
        .iter()
        .map(|c| c.expansion)
        .fold(f64::INFINITY, f64::min);
    let cheeger_upper = 2.0 * min_expansion;
    let cheeger_lower_witness = 0.5 * min_expansion * min_expansion;
    // the half-line cut is the minimal set only on the sector graph
    let on_sectors = matches!(chain.kind(), ChainKind::Nonlocal | ChainKind::Lumped);
    let (n2_phi_star, n2_window_holds, lower_holds) = if n == 2 && len >= 2 && on_sectors {
        let e = n2_min_expansion(len)?;
        let phi = rational_f64(&e.phi_star);
        (
            Some(phi),
            Some(0.5 * phi * phi <= gap.gap && gap.gap <= 2.0 * phi),
            Some(gap.gap >= cheeger_lower_witness),
        )
    } else {
        (None, None, None)
    };
    Ok(CheegerReport {
        upper_holds: gap.gap <= cheeger_upper,
        gap,
        candidates,
        min_expansion,
        cheeger_upper,
        cheeger_lower_witness,
        lower_holds,
        n2_phi_star,
        n2_window_holds,
    })
}

/// Exact expansion of a sector set on a rational chain.
pub fn exact_expansion(chain: &StochasticChain<BigRational>, keep: impl Fn(&SectorId) -> bool) -> Result<BigRational> {
    let mask = mask_of(chain, keep)?;
    subset_expansion(chain, &mask)
}

/// Probability outside a sector set after `t = 1..=t_max` steps, starting
/// uniform on the set. Lumped chains weight sectors by dimension, so the
/// values equal those of the full nonlocal chain.
pub fn escape_leak<T: Weight>(
    chain: &StochasticChain<T>,
    keep: impl Fn(&SectorId) -> bool,
    t_max: usize,
) -> Result<Vec<T>> {
    let mask = mask_of(chain, keep)?;
    let weights = state_weights(chain)?;
    let mut p: Vec<T> = weights
        .into_iter()
        .zip(&mask)
        .map(|(w, &b)| if b { w } else { T::zero() })
        .collect();
    let volume = p.iter().fold(T::zero(), |a, x| a + x.clone());
    if volume.is_zero() {
        return Err(invalid("empty sector set"));
    }
    p.iter_mut().for_each(|x| *x = x.clone() / volume.clone());
    let mut out = Vec::with_capacity(t_max);
    for _ in 0..t_max {
        p = chain.step(&p);
        let outside = p
            .iter()
            .zip(&mask)
            .filter(|(_, &b)| !b)
            .fold(T::zero(), |a, (x, _)| a + x.clone());
        out.push(outside);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
