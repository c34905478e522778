use num_rational::BigRational;

use super::*;
use crate::census::cone_stats;
use crate::chains::{build_full_local, build_full_nonlocal, build_lumped, ChainOptions, GateKind, LayerOrder};

fn dense_opts() -> GapOptions {
    GapOptions {
        dense_cap: 100_000,
        ..GapOptions::default()
    }
}

/// `tr P^k` for `k = 1..=kmax`.
fn trace_powers(chain: &StochasticChain<f64>, kmax: u32) -> Vec<f64> {
    let m = chain.to_csr(u64::MAX).unwrap().to_dense_f64();
    let mut p = m.clone();
    let mut out = Vec::new();
    for _ in 0..kmax {
        out.push(p.trace());
        p = &p * &m;
    }
    out
}

#[test]
fn two_state_chain() {
    let (p, q) = (0.3, 0.45);
    let m = Csr::from_rows(2, vec![vec![(0, 1.0 - p), (1, p)], vec![(0, q), (1, 1.0 - q)]]);
    let chain = StochasticChain::from_csr(m).unwrap();
    let g = spectral_gap(&chain, &GapOptions::default()).unwrap();
    assert_eq!(g.method, GapMethod::DenseNonsymmetric);
    assert!((g.gap - (p + q)).abs() < 1e-12);
}

#[test]
fn symmetric_form_matches_local_spectrum() {
    for (n, len) in [(2, 4), (2, 5), (3, 3), (3, 4)] {
        for gate in [GateKind::PairFlip, GateKind::TemperleyLieb] {
            for order in [LayerOrder::EvenThenOdd, LayerOrder::OddThenEven] {
                let opts = ChainOptions {
                    order,
                    ..ChainOptions::default()
                };
                let chain = build_full_local::<f64>(n, len, gate, &opts).unwrap();
                let form = symmetric_form(&chain).unwrap().unwrap();
                let sym = dense_spectrum(&form, 10_000).unwrap();
                assert!(sym.iter().all(|&x| x > -1e-10), "PSD fails for {n} {len}");
                // equal power sums for k = 1..8 pin down the nonzero spectrum
                for (k, t) in trace_powers(&chain, 8).into_iter().enumerate() {
                    let s: f64 = sym.iter().map(|x| x.powi(k as i32 + 1)).sum();
                    assert!((s - t).abs() < 1e-9, "N={n} L={len} {gate:?} {order:?} k={}: {s} vs {t}", k + 1);
                }
            }
        }
    }
}

#[test]
fn n2_nonlocal_gap_is_one_over_l() {
    for len in 2..=10 {
        let chain = build_full_nonlocal::<f64>(2, len, &ChainOptions::default()).unwrap();
        let g = spectral_gap(&chain, &dense_opts()).unwrap();
        assert!((g.gap - 1.0 / len as f64).abs() < 1e-9, "L={len}: {}", g.gap);
    }
}

#[test]
fn lumped_gap_equals_full_nonlocal_gap() {
    for (n, len) in [(3, 5), (3, 6), (4, 4)] {
        let full = build_full_nonlocal::<f64>(n, len, &ChainOptions::default()).unwrap();
        let lumped = build_lumped::<f64>(n, len, &ChainOptions::default()).unwrap();
        let a = spectral_gap(&full, &dense_opts()).unwrap();
        let b = spectral_gap(&lumped, &dense_opts()).unwrap();
        assert!((a.gap - b.gap).abs() < 1e-10);
    }
}

#[test]
fn prefix_spectrum_matches_lumped() {
    let (n, len) = (3, 6);
    let prefix = nonzero(&nonlocal_prefix_spectrum(n, len, 10_000).unwrap(), 1e-9);
    let lumped = build_lumped::<f64>(n, len, &ChainOptions::default()).unwrap();
    let form = symmetric_form(&lumped).unwrap().unwrap();
    let ls = nonzero(&dense_spectrum(&form, 10_000).unwrap(), 1e-9);
    // every lumped eigenvalue appears in the full spectrum
    for x in &ls {
        assert!(prefix.iter().any(|y| (x - y).abs() < 1e-9), "{x} missing");
    }
    assert!((prefix[1] - ls[1]).abs() < 1e-10);
}

#[test]
fn lanczos_agrees_with_dense() {
    let lumped = build_lumped::<f64>(3, 9, &ChainOptions::default()).unwrap();
    let dense = spectral_gap(&lumped, &dense_opts()).unwrap();
    let iter = spectral_gap(
        &lumped,
        &GapOptions {
            dense_cap: 0,
            ..GapOptions::default()
        },
    )
    .unwrap();
    assert_eq!(iter.method, GapMethod::Iterative);
    assert!((dense.gap - iter.gap).abs() < 1e-9, "{} vs {}", dense.gap, iter.gap);
}

#[test]
fn cone_expansion_is_exact_on_every_chain() {
    let (n, len) = (3, 4);
    let census = SectorCensus::new(n, len).unwrap();
    let opts = ChainOptions::default();
    for d in [2, 4] {
        let want = cone_stats(&census, d).unwrap().boundary_flow;
        let cone = Cone::canonical(n, d).unwrap();
        let chains: Vec<StochasticChain<BigRational>> = vec![
            build_full_nonlocal(n, len, &opts).unwrap(),
            build_lumped(n, len, &opts).unwrap(),
            build_full_local(n, len, GateKind::PairFlip, &opts).unwrap(),
            build_full_local(n, len, GateKind::TemperleyLieb, &opts).unwrap(),
        ];
        for chain in &chains {
            let got = exact_expansion(chain, |k| cone.contains(k)).unwrap();
            assert_eq!(got, want, "d = {d}, {:?}", chain.kind());
        }
    }
}

#[test]
fn subset_rejects_trivial_sets() {
    let chain = build_lumped::<f64>(3, 4, &ChainOptions::default()).unwrap();
    assert!(subset_expansion(&chain, &vec![false; chain.dim()]).is_err());
    assert!(subset_expansion(&chain, &vec![true; chain.dim()]).is_err());
}

#[test]
fn cheeger_upper_bound_holds() {
    for (n, len) in [(2, 6), (2, 7), (3, 5), (3, 6)] {
        let chain = build_full_local::<f64>(n, len, GateKind::PairFlip, &ChainOptions::default()).unwrap();
        let r = cheeger_check(&chain, &dense_opts()).unwrap();
        assert!(r.upper_holds, "N={n} L={len}");
        for c in &r.candidates {
            assert!((c.expansion - c.census_expansion.unwrap()).abs() < 1e-12);
        }
        assert_eq!(r.n2_window_holds, None);
        let nonlocal = build_full_nonlocal::<f64>(n, len, &ChainOptions::default()).unwrap();
        let r = cheeger_check(&nonlocal, &dense_opts()).unwrap();
        assert!(r.upper_holds);
        if n == 2 {
            assert_eq!(r.n2_window_holds, Some(true));
            assert_eq!(r.lower_holds, Some(true));
        }
    }
}

#[test]
fn escape_leak_bounded_by_linear_flow() {
    let (n, len) = (3, 6);
    let census = SectorCensus::new(n, len).unwrap();
    let phi = cone_stats(&census, 2).unwrap().boundary_flow;
    let cone = Cone::canonical(n, 2).unwrap();
    let opts = ChainOptions::default();
    let lumped: StochasticChain<BigRational> = build_lumped(n, len, &opts).unwrap();
    let full: StochasticChain<BigRational> = build_full_nonlocal(n, len, &opts).unwrap();
    let a = escape_leak(&lumped, |k| cone.contains(k), 12).unwrap();
    let b = escape_leak(&full, |k| cone.contains(k), 12).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0], phi);
    for (t, x) in a.iter().enumerate() {
        assert!(*x <= phi.clone() * BigRational::from_integer((t as i64 + 1).into()));
    }
}
