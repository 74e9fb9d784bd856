mod common;

use ictmc_core::ergodicity::{coefficient_bounds, upper_reachability};
use ictmc_core::harness::{parse_model, serialize_model};
use ictmc_core::transition::{EulerPower, LowerTransition, StepComposition, StochasticMatrix};
use ictmc_core::{
    adaptive_approximate, analytic_transient, check_ergodic, compose_steps, run_uniform_plan, uniform_approximate,
    ApproxOptions, BinaryModel, Gamble, IntervalRateOperator, StateSpace, UniformPlan,
};
use proptest::prelude::*;

fn operator_strategy(max_size: usize) -> impl Strategy<Value = IntervalRateOperator> {
    (1..=max_size).prop_flat_map(|n| {
        prop::collection::vec((0.0..3.0f64, 0.0..3.0f64, 0..4u8), n * n).prop_map(move |cells| {
            let mut lower = vec![vec![0.0; n]; n];
            let mut upper = vec![vec![0.0; n]; n];
            for (i, (a, b, shape)) in cells.into_iter().enumerate() {
                let (x, y) = (i / n, i % n);
                let (l, u) = match shape {
                    0 => (0.0, 0.0),
                    1 => (a, a),
                    _ => (a.min(b), a.max(b)),
                };
                lower[x][y] = l;
                upper[x][y] = u;
            }
            IntervalRateOperator::new(StateSpace::new(n).unwrap(), lower, upper).unwrap()
        })
    })
}

fn gamble_for(n: usize) -> impl Strategy<Value = Gamble> {
    prop::collection::vec(-2.0..2.0f64, n).prop_map(|v| Gamble::new(v).unwrap())
}

fn with_gamble(max_size: usize) -> impl Strategy<Value = (IntervalRateOperator, Gamble)> {
    operator_strategy(max_size).prop_flat_map(|q| {
        let n = q.size();
        (Just(q), gamble_for(n))
    })
}

fn binary_strategy(min_rate: f64) -> impl Strategy<Value = BinaryModel> {
    (min_rate..2.0f64, min_rate..2.0f64, min_rate..2.0f64, min_rate..2.0f64)
        .prop_map(|(a, b, c, d)| BinaryModel::new(a.min(b), a.max(b), c.min(d), c.max(d)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_doubles_exactly((q, f) in with_gamble(4), t in 0.05..1.0f64, n in 1u64..200) {
        let delta = t / n as f64;
        prop_assume!(q.check_step(delta).is_ok());
        let plan = UniformPlan { n, delta, target_epsilon: 1.0 };
        let doubled = UniformPlan { n: 2 * n, delta, target_epsilon: 1.0 };
        let opts = ApproxOptions::tracking(false);
        let once = run_uniform_plan(&q, &f, &plan, &opts).unwrap().result;
        let twice = run_uniform_plan(&q, &once, &plan, &opts).unwrap().result;
        prop_assert_eq!(run_uniform_plan(&q, &f, &doubled, &opts).unwrap().result, twice);
    }

    #[test]
    fn guards_return_f_unchanged((q, f) in with_gamble(4), t in 0.0..2.0f64, c in -1.0..1.0f64) {
        let zero = IntervalRateOperator::new(StateSpace::new(q.size()).unwrap(), vec![vec![0.0; q.size()]; q.size()], vec![vec![0.0; q.size()]; q.size()]).unwrap();
        let constant = Gamble::constant(q.size(), c).unwrap();
        let cases = [(&q, &constant, t), (&zero, &f, t), (&q, &f, 0.0)];
        for (op, g, horizon) in cases {
            for trace in [
                uniform_approximate(op, g, horizon, 1e-3, &ApproxOptions::default()).unwrap(),
                adaptive_approximate(op, g, horizon, 1e-3, 3, &ApproxOptions::default()).unwrap(),
            ] {
                prop_assert_eq!(&trace.result, g);
                prop_assert_eq!(trace.total_iterations, 0);
            }
        }
    }

    #[test]
    fn iterates_stay_in_range((q, f) in with_gamble(4), t in 0.05..2.0f64, m in 1u64..6) {
        let trace = adaptive_approximate(&q, &f, t, 1e-2, m, &ApproxOptions::default()).unwrap();
        let steps = trace.step_sequence();
        let mut g = f.clone();
        for d in steps {
            g = q.euler_step(d, &g).unwrap();
            prop_assert!(g.min() >= f.min() - 1e-12 && g.max() <= f.max() + 1e-12);
        }
        prop_assert_eq!(g, trace.result);
    }

    #[test]
    fn adaptive_steps_grow((q, f) in with_gamble(4), t in 0.05..2.0f64, m in 1u64..6) {
        let trace = adaptive_approximate(&q, &f, t, 1e-2, m, &ApproxOptions::default()).unwrap();
        let body = trace.steps.len().saturating_sub(1);
        for w in trace.steps[..body].windows(2) {
            prop_assert!(w[0].0 <= w[1].0);
        }
    }

    #[test]
    fn early_stop_keeps_guarantee(model in binary_strategy(0.0), t in 0.1..3.0f64, f in gamble_for(2), eps in 1e-3..1e-1f64) {
        let q = model.to_operator();
        let opts = ApproxOptions { early_stop: true, ..ApproxOptions::default() };
        let exact = analytic_transient(&model, &f, t).unwrap();
        for trace in [
            uniform_approximate(&q, &f, t, eps, &opts).unwrap(),
            adaptive_approximate(&q, &f, t, eps, 2, &opts).unwrap(),
        ] {
            prop_assert!(exact.distance(&trace.result) <= trace.epsilon_prime + 1e-15);
            prop_assert!(trace.epsilon_prime <= eps * (1.0 + 1e-12));
        }
    }

    #[test]
    fn bounds_bracket_exact_binary(model in binary_strategy(0.0), frac in 0.0..=1.0f64, m in 1u64..4) {
        let q = model.to_operator();
        let delta = frac * 2.0 / q.norm().max(1e-12);
        let op = EulerPower::new(&q, delta, m).unwrap();
        let b = coefficient_bounds(&op).unwrap();
        let exact = b.exact.unwrap();
        prop_assert!(b.lower <= exact + 1e-12 && exact <= b.upper + 1e-12);
    }

    #[test]
    fn bounds_from_conjugate_agree((q, _f) in with_gamble(4), frac in 0.0..=1.0f64) {
        // the scan over A of the upper operator equals the scan over the complements
        let delta = frac * 2.0 / q.norm().max(1e-12);
        let op = EulerPower::new(&q, delta, 1).unwrap();
        let n = q.size();
        prop_assume!(n >= 2);
        let mut from_lower: f64 = 0.0;
        let mut from_upper: f64 = 0.0;
        for mask in 1..(1u32 << n) - 1 {
            let set: Vec<usize> = (0..n).filter(|x| mask >> x & 1 == 1).collect();
            let rest: Vec<usize> = (0..n).filter(|x| mask >> x & 1 == 0).collect();
            from_lower = from_lower.max(op.apply_lower(&Gamble::indicator(n, &set).unwrap()).unwrap().variation());
            from_upper = from_upper.max(op.apply_upper(&Gamble::indicator(n, &rest).unwrap()).unwrap().variation());
        }
        prop_assert!((from_lower - from_upper).abs() <= 1e-12);
        prop_assert!((coefficient_bounds(&op).unwrap().lower - from_lower).abs() <= 1e-12);
    }

    #[test]
    fn ergodic_compositions_contract(model in binary_strategy(0.05), fracs in prop::collection::vec(0.01..0.99f64, 1..6)) {
        let q = model.to_operator();
        prop_assert!(check_ergodic(&q).ergodic);
        let steps: Vec<f64> = fracs.iter().map(|s| s * 2.0 / q.norm()).collect();
        let op = StepComposition::new(&q, steps).unwrap();
        prop_assert!(op.exact_coefficient().unwrap() < 1.0);
    }

    #[test]
    fn linear_ergodic_compositions_contract(seed in any::<u64>(), size in 2usize..5, k in 0usize..3) {
        let mut rng = common::rng(seed);
        let q = common::positive_operator(&mut rng, size, 2.0);
        // degenerate intervals: a precise rate matrix
        let m = q.dominating_matrix_for(&Gamble::constant(size, 0.0).unwrap()).unwrap();
        let q = IntervalRateOperator::from_rate_matrix(&m);
        prop_assert!(check_ergodic(&q).ergodic);
        let op = EulerPower::new(&q, 1.0 / q.norm(), (size - 1 + k) as u64).unwrap();
        prop_assert!(op.exact_coefficient().unwrap() < 1.0);
    }

    #[test]
    fn ergodic_lower_bound_below_one(seed in any::<u64>(), size in 3usize..5, frac in 0.05..0.95f64) {
        let mut rng = common::rng(seed);
        let q = common::positive_operator(&mut rng, size, 2.0);
        prop_assert!(check_ergodic(&q).ergodic);
        let op = EulerPower::new(&q, frac * 2.0 / q.norm(), (size - 1) as u64).unwrap();
        prop_assert!(coefficient_bounds(&op).unwrap().lower < 1.0);
    }

    #[test]
    fn disconnected_models_do_not_contract(a in prop::collection::vec(0.0..2.0f64, 4), frac in 0.0..=1.0f64, k in 1u64..4) {
        // two closed pairs {0, 1} and {2, 3}
        let mut lower = vec![vec![0.0; 4]; 4];
        let mut upper = vec![vec![0.0; 4]; 4];
        for (i, (x, y)) in [(0, 1), (1, 0), (2, 3), (3, 2)].into_iter().enumerate() {
            lower[x][y] = a[i] / 2.0;
            upper[x][y] = a[i];
        }
        let q = IntervalRateOperator::new(StateSpace::new(4).unwrap(), lower, upper).unwrap();
        prop_assert!(!check_ergodic(&q).ergodic);
        let delta = frac * 2.0 / q.norm().max(1e-12);
        let b = coefficient_bounds(&EulerPower::new(&q, delta, k).unwrap()).unwrap();
        prop_assert_eq!(b.lower, 1.0);
    }

    #[test]
    fn limit_envelope_is_monotone(model in binary_strategy(0.05), f in gamble_for(2), frac in 0.05..1.0f64) {
        let q = model.to_operator();
        let delta = frac * 2.0 / q.norm();
        let mut g = f;
        for _ in 0..200 {
            let next = q.euler_step(delta, &g).unwrap();
            prop_assert!(next.max() <= g.max() + 1e-12 && next.min() >= g.min() - 1e-12);
            g = next;
        }
    }

    #[test]
    fn stochastic_coefficient_submultiplicative(seed in any::<u64>(), size in 2usize..7) {
        let mut rng = common::rng(seed);
        let (a, b) = (common::stochastic(&mut rng, size), common::stochastic(&mut rng, size));
        let (ta, tb) = (StochasticMatrix::new(a).unwrap(), StochasticMatrix::new(b).unwrap());
        let ab = ta.product(&tb).unwrap();
        let (ra, rb, rab) = (ta.exact_coefficient().unwrap(), tb.exact_coefficient().unwrap(), ab.exact_coefficient().unwrap());
        prop_assert!(rab <= ra * rb + 1e-12);
        let bounds = coefficient_bounds(&ta).unwrap();
        prop_assert!((bounds.lower - ra).abs() <= 1e-12 && (bounds.upper - ra).abs() <= 1e-12);
    }

    #[test]
    fn reachability_is_reflexive_and_transitive(q in operator_strategy(5)) {
        let r = upper_reachability(&q);
        let n = q.size();
        for a in 0..n {
            prop_assert!(r.reachable(a, a));
            for b in 0..n {
                for c in 0..n {
                    if r.reachable(a, b) && r.reachable(b, c) {
                        prop_assert!(r.reachable(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn model_files_round_trip(q in operator_strategy(5)) {
        let labels: Vec<String> = (0..q.size()).map(|x| format!("s{x}")).collect();
        let n = q.size();
        let rows = |bound: &dyn Fn(usize, usize) -> f64| (0..n).map(|x| (0..n).map(|y| if x == y { 0.0 } else { bound(x, y) }).collect()).collect();
        let labelled = IntervalRateOperator::new(
            StateSpace::with_labels(labels).unwrap(),
            rows(&|x, y| q.lower(x, y)),
            rows(&|x, y| q.upper(x, y)),
        ).unwrap();
        prop_assert_eq!(parse_model(&serialize_model(&labelled)).unwrap(), labelled);
    }

    #[test]
    fn compose_matches_trace((q, f) in with_gamble(4), t in 0.05..2.0f64, m in 1u64..5) {
        let trace = adaptive_approximate(&q, &f, t, 5e-2, m, &ApproxOptions::default()).unwrap();
        prop_assert_eq!(compose_steps(&q, &f, &trace.step_sequence()).unwrap(), trace.result);
    }
}
