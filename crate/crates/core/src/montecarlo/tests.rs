use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use proptest::prelude::*;

use super::stats::{chi_square, ChiSquare};
use super::*;
use crate::chains::{build_full_local, ChainOptions};
use crate::walks::{all_strings, reduce_digits};

fn exact_row(start: &SpinString, gate: GateKind, order: LayerOrder) -> Vec<f64> {
    let (n, len) = (start.alphabet(), start.len());
    let opts = ChainOptions {
        order,
        ..ChainOptions::default()
    };
    let chain = build_full_local::<f64>(n, len, gate, &opts).unwrap();
    let mut row = vec![0.0; chain.dim()];
    for (j, v) in chain.row(start.index() as usize) {
        row[j] = v;
    }
    row
}

#[test]
fn one_step_law_from_1122() {
    let start = SpinString::parse(2, "1122").unwrap();
    let counts = one_step_counts(&start, GateKind::PairFlip, LayerOrder::EvenThenOdd, 200_000, 1).unwrap();
    let t = chi_square(&counts, &exact_row(&start, GateKind::PairFlip, LayerOrder::EvenThenOdd)).unwrap();
    assert!(t.p_value > 1e-4, "{t:?}");
}

#[test]
fn one_step_law_all_rows_small() {
    let mut tests = Vec::new();
    for gate in [GateKind::PairFlip, GateKind::TemperleyLieb] {
        for order in [LayerOrder::EvenThenOdd, LayerOrder::OddThenEven] {
            for s in all_strings(3, 3) {
                let counts = one_step_counts(&s, gate, order, 20_000, 9).unwrap();
                tests.push(chi_square(&counts, &exact_row(&s, gate, order)).unwrap());
            }
        }
    }
    let pooled = ChiSquare::pooled(&tests).unwrap();
    assert!(pooled.p_value > 1e-4, "{pooled:?}");
}

#[test]
fn frozen_interior_only_moves_the_bath() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let start: Vec<u8> = vec![0, 1, 2, 0, 1, 2];
    for _ in 0..100 {
        let mut s = start.clone();
        step(&mut s, 3, GateKind::PairFlip, LayerOrder::EvenThenOdd, &mut rng);
        // only a new last symbol equal to its neighbour can trigger a gate
        if s[5] != s[4] && s[4] == start[4] {
            assert_eq!(&s[..5], &start[..5]);
        }
    }
}

#[test]
fn single_symbol_is_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut s = vec![0u8; 8];
    for _ in 0..10 {
        step(&mut s, 1, GateKind::PairFlip, LayerOrder::EvenThenOdd, &mut rng);
        step(&mut s, 1, GateKind::TemperleyLieb, LayerOrder::EvenThenOdd, &mut rng);
    }
    assert_eq!(s, vec![0u8; 8]);
}

#[test]
fn layers_preserve_sectors_along_trajectories() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut s: Vec<u8> = (0..20).map(|_| rng.random_range(0..3)).collect();
    for _ in 0..10_000 {
        let before_bath = reduce_digits(&s);
        let q_before: i64 = Probe::Charge(0).eval(&s, &s, &mut Vec::new());
        bath_step(&mut s, 3, &mut rng);
        let after_bath = reduce_digits(&s);
        let q_bath = Probe::Charge(0).eval(&s, &s, &mut Vec::new());
        for layer in LayerOrder::EvenThenOdd.layers() {
            layer_step(&mut s, layer, 3, GateKind::TemperleyLieb, &mut rng);
            assert_eq!(reduce_digits(&s), after_bath);
        }
        let q_after = Probe::Charge(0).eval(&s, &s, &mut Vec::new());
        assert_eq!(q_after, q_bath);
        let dq = (q_after - q_before).abs();
        assert!(dq <= 1);
        if dq == 1 {
            assert_ne!(before_bath, after_bath);
        }
    }
}

#[test]
fn max_charge_starts_at_one() {
    let cfg = SimConfig {
        trajectories: 10,
        t_max: 3,
        ..SimConfig::new(3, 12)
    };
    let e = run_ensemble(&cfg).unwrap();
    assert_eq!(e.series[0].mean[0], 1.0);
    assert_eq!(e.series[0].std_error[0], 0.0);
    assert_eq!(e.times, vec![0, 1, 2, 3]);
}

#[test]
fn charge_relaxes_to_zero_on_small_system() {
    let cfg = SimConfig {
        n: 2,
        len: 4,
        trajectories: 4000,
        t_max: 200,
        seed: 5,
        ..SimConfig::new(2, 4)
    };
    let e = run_ensemble(&cfg).unwrap();
    let (m, s) = (e.series[0].mean[200], e.series[0].std_error[200]);
    assert!(m.abs() <= 4.0 * s, "{m} ± {s}");
    assert!(e.first_passage.unwrap().t_q.is_some());
}

#[test]
fn seeds_are_reproducible() {
    let cfg = SimConfig {
        trajectories: 37,
        t_max: 50,
        seed: 99,
        observables: vec![Observable::Charge(1), Observable::Depth, Observable::MatchSite(2)],
        ..SimConfig::new(3, 10)
    };
    let a = serde_json::to_string(&run_ensemble(&cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_ensemble(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    let other = SimConfig { seed: 100, ..cfg };
    assert_ne!(a, serde_json::to_string(&run_ensemble(&other).unwrap()).unwrap());
}

#[test]
fn depth_concentrates_near_velocity_times_length() {
    let cfg = SimConfig {
        trajectories: 200,
        t_max: 3000,
        seed: 2,
        observables: vec![Observable::Depth],
        initial: InitialState::Uniform,
        ..SimConfig::new(3, 60)
    };
    let e = run_ensemble(&cfg).unwrap();
    let mean = *e.series[0].mean.last().unwrap();
    let target = crate::census::velocity(3) * 60.0;
    assert!((mean - target).abs() < 60f64.sqrt(), "{mean} vs {target}");
}

#[test]
fn estimate_tq_stops_after_crossing() {
    let cfg = SimConfig {
        trajectories: 500,
        seed: 4,
        ..SimConfig::new(2, 8)
    };
    let r = estimate_tq(&cfg).unwrap();
    let t = r.t_q.unwrap();
    assert!(!r.censored);
    assert!(r.ci_low.unwrap() <= t as f64 && t as f64 <= r.ci_high.unwrap());
    assert!(r.steps_simulated < 10 * t.max(64));
    // same trajectories through the full recorder give the same crossing
    let full = run_ensemble(&SimConfig {
        t_max: r.steps_simulated,
        ..cfg
    })
    .unwrap();
    assert_eq!(full.first_passage.unwrap().t_q, Some(t));
}

#[test]
fn censored_first_passage_is_flagged() {
    let cfg = SimConfig {
        trajectories: 50,
        t_max: 5,
        gamma: 0.01,
        ..SimConfig::new(3, 24)
    };
    let r = estimate_tq(&cfg).unwrap();
    assert!(r.censored);
    assert_eq!(r.t_q, None);
    assert_eq!(r.steps_simulated, 5);
}

#[test]
fn per_trajectory_variant() {
    let cfg = SimConfig {
        trajectories: 200,
        per_trajectory: true,
        seed: 8,
        ..SimConfig::new(2, 8)
    };
    let r = estimate_tq(&cfg).unwrap();
    assert_eq!(r.per_trajectory_censored, 0);
    assert!(r.per_trajectory_mean.unwrap() > 0.0);
}

#[test]
fn escape_starts_at_zero_and_respects_bound() {
    let cfg = SimConfig {
        trajectories: 4000,
        seed: 3,
        ..SimConfig::new(3, 12)
    };
    let r = cone_escape_probability(&cfg, 2, &[0, 1, 5, 20]).unwrap();
    assert_eq!(r.points[0].estimate, 0.0);
    assert!(r.all_within, "{r:?}");
    let census = SectorCensus::new(3, 12).unwrap();
    let phi = cone_stats(&census, 2).unwrap().expansion_f64();
    let p1 = &r.points[1];
    assert!((p1.estimate - phi).abs() <= 4.0 * p1.std_error.max(1e-3));
}

#[test]
fn deep_cones_empty_quickly() {
    let cfg = SimConfig {
        trajectories: 500,
        seed: 6,
        ..SimConfig::new(3, 30)
    };
    let r = cone_escape_probability(&cfg, 20, &[60]).unwrap();
    assert!(r.points[0].estimate > 0.5);
}

#[test]
fn observable_round_trip() {
    for o in [
        Observable::Charge(2),
        Observable::Depth,
        Observable::ConeEscape(4),
        Observable::MatchSite(7),
    ] {
        assert_eq!(o.to_string().parse::<Observable>().unwrap(), o);
    }
    assert!("spin".parse::<Observable>().is_err());
}

#[test]
fn cone_sample_volume_is_integral() {
    let s = sampler::ConeSampler::new(3, 10, &Cone::canonical(3, 4).unwrap()).unwrap();
    let census = SectorCensus::new(3, 10).unwrap();
    assert_eq!(
        s.volume(),
        cone_stats(&census, 4).unwrap().volume.to_f64().unwrap()
    );
}

proptest! {
    #[test]
    fn steps_keep_symbols_in_range(
        n in 2u32..6,
        digits in proptest::collection::vec(0u8..6, 2..30),
        seed in any::<u64>(),
        tl in any::<bool>(),
    ) {
        let mut s: Vec<u8> = digits.into_iter().map(|d| d % n as u8).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gate = if tl { GateKind::TemperleyLieb } else { GateKind::PairFlip };
        let depth_parity = reduce_digits(&s).len() % 2;
        step(&mut s, n, gate, LayerOrder::EvenThenOdd, &mut rng);
        prop_assert!(s.iter().all(|&d| u32::from(d) < n));
        prop_assert_eq!(reduce_digits(&s).len() % 2, depth_parity);
    }
}
