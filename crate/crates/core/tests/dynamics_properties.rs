use extraction_game::dynamics::{
    classify_multi, fixed_point, GreedyPopulation, MultiPopulation, OutcomeClass, RateParams, Rk4,
};
use extraction_game::oracles::{distance_to_sustained, random_start};
use extraction_game::{in_region_v, Policy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn valid_policy() -> impl Strategy<Value = Policy> {
    (0.1f64..3.0, 0.1f64..3.0)
        .prop_flat_map(|(tr, ps)| (-ps + 1e-3..3.0, -tr + 1e-3..3.0, Just(tr), Just(ps)))
        .prop_map(|(sp, rt, tr, ps)| Policy::new(sp, rt, tr, ps).unwrap())
}

fn rates(m: usize) -> impl Strategy<Value = RateParams> {
    (
        0.1f64..2.0,
        0.1f64..2.0,
        prop::collection::vec((0.0f64..1.0, 0.0f64..2.0), m),
        0.1f64..5.0,
    )
        .prop_map(|(alpha, theta, greedy, eps)| {
            RateParams::new(alpha, theta).with_eps(eps).with_greedy(
                greedy
                    .into_iter()
                    .map(|(a, t)| GreedyPopulation::new(a, t))
                    .collect(),
            )
        })
}

fn start(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..0.99, m + 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trajectories_stay_in_the_unit_cube(
        (p, r, s0) in (valid_policy(), 0usize..4).prop_flat_map(|(p, m)| (Just(p), rates(m), start(m))),
    ) {
        let sys = MultiPopulation::new(&p, &r).unwrap();
        let traj = sys.run(&Rk4::new(0.01, 50.0), &s0).unwrap();
        prop_assert!(traj.max_clamp() < 1e-9);
        for s in traj.states() {
            prop_assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn greedy_shares_decay_monotonically(
        (p, r, s0) in (valid_policy(), 1usize..4).prop_flat_map(|(p, m)| (Just(p), rates(m), start(m))),
    ) {
        let m = r.m();
        let sys = MultiPopulation::new(&p, &r).unwrap();
        let traj = sys.run(&Rk4::new(0.01, 100.0), &s0).unwrap();
        for i in 1..=m {
            let xs = traj.component(i);
            prop_assert!(xs.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(*xs.last().unwrap() < 1e-3);
        }
    }

    #[test]
    fn classification_ignores_eps(p in valid_policy(), r in (0usize..4).prop_flat_map(rates), eps in 0.01f64..100.0) {
        let a = classify_multi(&r, &p).unwrap();
        let b = classify_multi(&r.clone().with_eps(eps), &p).unwrap();
        prop_assert_eq!(a, b);
    }
}

/// Random instances the classifier calls sustained, each integrated from 10
/// interior starts over a long horizon.
#[test]
fn sustained_classification_matches_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cases = Vec::new();
    while cases.len() < 12 {
        let sp = rng.gen_range(0.5..3.0);
        let tr = rng.gen_range(0.5..3.0);
        let ps = rng.gen_range(0.5..3.0);
        let rt = rng.gen_range(-tr + 1e-3..tr / ps * sp);
        let (alpha, theta) = (rng.gen_range(0.1..1.0), rng.gen_range(0.5..2.0));
        let m = rng.gen_range(1..=3);
        let abar = rng.gen_range(0.0..theta);
        let p = Policy::new(sp, rt, tr, ps).unwrap();
        if !in_region_v(&p, alpha, theta, abar).unwrap() {
            continue;
        }
        let r = RateParams::new(alpha, theta).with_symmetric_greedy(m, abar / m as f64, 1.0);
        let starts: Vec<Vec<f64>> = (0..10).map(|_| random_start(m, &mut rng)).collect();
        cases.push((p, r, starts));
    }
    cases.par_iter().for_each(|(p, r, starts)| {
        let OutcomeClass::Sustained { x_star, n_star } = classify_multi(r, p).unwrap() else {
            panic!("expected a sustained classification for {p:?} {r:?}");
        };
        let sys = MultiPopulation::new(p, r).unwrap();
        for s0 in starts {
            let end = sys.endpoint(&Rk4::default(), s0).unwrap();
            let d = distance_to_sustained(&end.state, x_star, n_star);
            assert!(
                d < 1e-3,
                "{p:?} {r:?} from {s0:?}: ended at {:?}",
                end.state
            );
        }
    });
}

#[test]
fn eps_only_changes_the_speed() {
    let cases = [
        (Policy::new(2.0, 0.2, 2.1, 2.0).unwrap(), 0.4, 1.0, 0.5),
        (Policy::new(1.0, -0.5, 3.0, 0.5).unwrap(), 0.5, 1.2, 0.3),
        (Policy::new(2.5, 1.0, 1.5, 1.0).unwrap(), 0.8, 1.5, 1.0),
    ];
    for (p, alpha, theta, abar) in cases {
        let (x_star, n_star) = fixed_point(&p, alpha, theta, abar);
        for eps in [0.1, 1.0, 10.0] {
            let r = RateParams::new(alpha, theta)
                .with_eps(eps)
                .with_symmetric_greedy(2, abar / 2.0, 1.0);
            assert!(matches!(
                classify_multi(&r, &p).unwrap(),
                OutcomeClass::Sustained { .. }
            ));
            let sys = MultiPopulation::new(&p, &r).unwrap();
            let end = sys
                .endpoint(&Rk4::new(0.01, 5000.0), &[0.3, 0.6, 0.6, 0.7])
                .unwrap();
            let d = distance_to_sustained(&end.state, x_star, n_star);
            assert!(
                d < 1e-3,
                "{p:?} eps = {eps}: {:?} vs ({x_star}, {n_star})",
                end.state
            );
        }
    }
}

#[test]
fn oscillating_policy_keeps_moving() {
    // dRT0 above (dTR1/dPS1) dSP0 = 2.1: the orbit approaches the boundary cycle.
    let p = Policy::new(2.0, 2.5, 2.1, 2.0).unwrap();
    let r = RateParams::new(0.4, 1.0);
    let sys = MultiPopulation::new(&p, &r).unwrap();
    let traj = sys
        .run(&Rk4::new(0.01, 4000.0).recording_every(10), &[0.4, 0.6])
        .unwrap();
    assert!(matches!(
        classify_multi(&r, &p).unwrap(),
        OutcomeClass::OscillatingToc {
            closed_orbits: false
        }
    ));
    assert!(traj.trailing_range(1, 0.25) > 0.5);
}
