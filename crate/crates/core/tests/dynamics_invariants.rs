mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spread_core::{
    run, GraphSpec, NetworkGraph, RateParams, RunConfig, SpreadState, SpreadTrace32, SpreadTrace64,
    Verdict,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn randomized_runs_keep_invariants(case in common::case_strategy()) {
        if let Err(msg) = common::check_case(&case) {
            prop_assert!(false, "{}", msg);
        }
    }

    #[test]
    fn homogeneous_unconfirmed_state_freezes(
        n in 20usize..200,
        c in 0.0f64..1.0,
        frac in 0.05f64..0.9,
        lambda1 in 0.0f64..1.0,
        lambda2 in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let g = GraphSpec::ba(n, 4.0, seed).generate().unwrap();
        let count = ((n as f64 * frac) as usize).max(1);
        let known: Vec<(u32, f64, f64)> = (0..count as u32).map(|u| (u, c, 0.0)).collect();
        let mut s = SpreadState::from_known(&g, &known).unwrap();
        let before = s.known_count();
        let fresh = s.step(&g, &RateParams::new(lambda1, lambda2).unwrap(), &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(fresh, 0);
        prop_assert_eq!(s.known_count(), before);
    }

    #[test]
    fn correction_bounds(
        confidences in proptest::collection::vec(0.0f64..=1.0, 1..60),
        truth in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let n = confidences.len() + 1;
        let g = NetworkGraph::from_edges(n, (1..n as u32).map(|v| (0, v))).unwrap();
        let known: Vec<(u32, f64, f64)> = confidences.iter().enumerate().map(|(k, &c)| (k as u32 + 1, c, 0.0)).collect();
        let mut s = SpreadState::from_known(&g, &known).unwrap();
        let v = if truth { Verdict::True } else { Verdict::False };
        s.correct_confidence(v, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for (k, &c_old) in confidences.iter().enumerate() {
            let a = s.attrs(k as u32 + 1);
            let c = a.confidence.unwrap();
            // Oracle: distance from the neutral point, signed by correctness.
            let dif = (c_old - 0.5).abs();
            let right = if truth { c_old >= 0.5 } else { c_old <= 0.5 };
            let expect_r = if c_old == 0.5 { 0.0 } else if right { dif } else { -dif };
            prop_assert!((a.credibility - expect_r).abs() < 1e-12, "r {} vs {}", a.credibility, expect_r);
            if truth { prop_assert!((0.5..=1.0).contains(&c)) } else { prop_assert!((0.0..=0.5).contains(&c)) }
        }
        prop_assert_eq!(s.attrs(0).confidence, None);
    }
}

#[test]
fn suppression_direction_over_paired_replicates() {
    let g = GraphSpec::ba(2000, 5.0, 11).generate().unwrap();
    let rate = RateParams::new(0.3875, 0.1194).unwrap();
    for tau in [0.1, 0.2, 0.3] {
        let (mut free_sum, mut false_sum) = (0.0, 0.0);
        for k in 0..50 {
            let free = RunConfig::free(0.005, rate, 900 + k);
            let base = run(&g, &free, None).unwrap();
            let t_a = (tau * base.t_f.unwrap() as f64).round() as usize;
            let announced = RunConfig {
                verdict: Some(Verdict::False),
                ..free
            };
            free_sum += base.final_density();
            false_sum += run(&g, &announced, Some(t_a)).unwrap().final_density();
        }
        assert!(false_sum < free_sum, "tau {tau}: {false_sum} vs {free_sum}");
    }
}

#[test]
fn f32_and_f64_runs_share_the_protocol() {
    let g = GraphSpec::ba(500, 5.0, 4).generate().unwrap();
    let a: SpreadTrace64 = run(
        &g,
        &RunConfig::free(0.02, RateParams::new(0.3875, 0.1194).unwrap(), 8),
        None,
    )
    .unwrap();
    let b: SpreadTrace32 = run(
        &g,
        &RunConfig::free(0.02, RateParams::new(0.3875f32, 0.1194).unwrap(), 8),
        None,
    )
    .unwrap();
    assert_eq!(a.i[0] as f32, b.i[0]);
    assert!(b.i.windows(2).all(|w| w[1] >= w[0]));
    assert!(b.converged);
}
