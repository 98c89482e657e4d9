mod common;

use common::*;
use noregret::control::{self, ControllerConfig, ModelErrorMixture, PendulumParams, Scenario};
use noregret::dynamics;
use noregret::geometry::{euclidean_distance, FeasibleSet};
use noregret::ip::{self, IpQuery, IpTarget, SequenceTrace};
use noregret::ocp::{OcpState, RegretLedger};
use noregret::regression::{self, RbfFeatureMap, RbfPredictor, RegressionExperimentConfig};
use proptest::prelude::*;

fn arb_box(dim: usize) -> impl Strategy<Value = FeasibleSet> {
    (prop::collection::vec(-10.0..0.0f64, dim), prop::collection::vec(0.0..10.0f64, dim))
        .prop_map(|(lo, w)| {
            let hi = lo.iter().zip(&w).map(|(l, w)| l + w).collect();
            FeasibleSet::new_box(lo, hi).unwrap()
        })
}

fn arb_ball(dim: usize) -> impl Strategy<Value = FeasibleSet> {
    (prop::collection::vec(-5.0..5.0f64, dim), 0.0..8.0f64)
        .prop_map(|(c, r)| FeasibleSet::new_ball(c, r).unwrap())
}

fn arb_set_and_points() -> impl Strategy<Value = (FeasibleSet, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..5).prop_flat_map(|d| {
        let point = || prop::collection::vec(-30.0..30.0f64, d);
        (prop_oneof![arb_box(d), arb_ball(d)], point(), point(), point())
    })
}

fn arb_trace(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![3 => 0.0..0.05f64, 1 => 0.0..1.0f64], 1..max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_properties((set, a, b, z) in arb_set_and_points()) {
        let pa = set.project(&a).unwrap();
        let pb = set.project(&b).unwrap();
        prop_assert!(set.contains(&pa, 1e-12).unwrap());
        let again = set.project(&pa).unwrap();
        for (u, v) in again.iter().zip(&pa) {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
        prop_assert!(euclidean_distance(&pa, &pb) <= euclidean_distance(&a, &b) + 1e-12);
        // no feasible point is closer to `a` than its projection
        let pz = set.project(&z).unwrap();
        prop_assert!(euclidean_distance(&pa, &a) <= euclidean_distance(&pz, &a) + 1e-12);
    }

    #[test]
    fn gp_step_stays_feasible(
        (set, start, _, _) in arb_set_and_points(),
        grads in prop::collection::vec(prop::collection::vec(-100.0..100.0f64, 4), 1..30),
        eta in 0.0..5.0f64,
    ) {
        let d = set.dimension();
        let mut state = OcpState::new(start, eta, set.clone()).unwrap();
        for (k, g) in grads.iter().enumerate() {
            let next = state.gp_step(&g[..d]).unwrap();
            prop_assert_eq!(next.stage(), state.stage() + 1);
            prop_assert!(set.contains(next.action(), 1e-9).unwrap());
            let expected = set
                .project(&state.action().iter().zip(&g[..d]).map(|(a, g)| a - eta / ((k + 1) as f64).sqrt() * g).collect::<Vec<_>>())
                .unwrap();
            prop_assert_eq!(next.action(), expected.as_slice());
            state = next;
        }
    }

    #[test]
    fn witness_is_minimal(values in arb_trace(400), eps in 0.01..0.5f64, d in 1usize..20, start in 1usize..50) {
        let trace = SequenceTrace::new(values.clone()).unwrap();
        let q = IpQuery::new(eps, d, start, IpTarget::Point(0.0)).unwrap();
        match ip::ip_witness(&trace, &q) {
            Ok(w) => prop_assert_eq!(w, brute_force_witness(&values, eps, d, start, |s| s.abs())),
            Err(e) => {
                prop_assert_eq!(e.kind(), "query_infeasible");
                prop_assert!(start + d > values.len());
            }
        }
    }

    #[test]
    fn interval_witness_matches_rescan(values in arb_trace(300), r in 0.0..0.5f64, eps in 0.001..0.2f64, d in 1usize..10) {
        let trace = SequenceTrace::new(values.clone()).unwrap();
        let q = IpQuery::new(eps, d, 1, IpTarget::Interval(r)).unwrap();
        if let Ok(w) = ip::ip_witness(&trace, &q) {
            prop_assert_eq!(w, brute_force_witness(&values, eps, d, 1, |s| (s - r).max(0.0)));
        }
    }

    #[test]
    fn interval_distance(s in 0.0..10.0f64, r in 0.0..10.0f64) {
        let dist = IpTarget::Interval(r).distance(s);
        prop_assert_eq!(dist == 0.0, s <= r);
        if s > r {
            prop_assert_eq!(dist, s - r);
        }
    }

    #[test]
    fn classical_implies_ip(values in arb_trace(600), eps in 0.02..0.5f64, d in 1usize..30, shift in 0usize..20) {
        let trace = SequenceTrace::new(values.clone()).unwrap();
        if let Some(n) = ip::classical_tail_check(&trace, 0.0, eps).unwrap().converged_from {
            let start = n + shift;
            if start + d <= values.len() {
                let q = IpQuery::new(eps, d, start, IpTarget::Point(0.0)).unwrap();
                prop_assert_eq!(ip::ip_witness(&trace, &q).unwrap(), Some(start));
            }
        }
    }

    #[test]
    fn cesaro_matches_naive_mean(values in prop::collection::vec(0.0..1e3f64, 1..500)) {
        let ces = ip::cesaro_averages(&SequenceTrace::new(values.clone()).unwrap());
        let mut sum = 0.0;
        for (t, v) in values.iter().enumerate() {
            sum += v;
            let naive = sum / (t + 1) as f64;
            prop_assert!((ces.values()[t] - naive).abs() <= 1e-12 * (1.0 + naive));
        }
    }

    #[test]
    fn regression_gradient_matches_finite_differences(seed in any::<u64>()) {
        let mut stream = noregret::rng::SeededStream::new(seed);
        let (pred, x, y) = random_regression_case(&mut stream);
        let g = pred.stage_gradient(&x, &[y]).unwrap();
        let fd = central_difference(pred.weights(), 1e-6, |w| {
            let mut p = pred.clone();
            p.set_weights(w).unwrap();
            p.stage_loss(&x, &[y]).unwrap()
        });
        prop_assert!(relative_error(&g, &fd) <= 1e-6);
    }

    #[test]
    fn control_gradient_matches_finite_differences(seed in any::<u64>()) {
        let mut stream = noregret::rng::SeededStream::new(seed);
        let (mix, params, theta, x, accel, u) = random_control_case(&mut stream);
        let (_, g) = control::learning_feedback(&mix, &theta, &params, &x, accel, u).unwrap();
        let fd = central_difference(&theta, 1e-6, |w| control::learning_feedback(&mix, w, &params, &x, accel, u).unwrap().0);
        prop_assert!(relative_error(&g, &fd) <= 1e-6);
    }

    #[test]
    fn stage_loss_is_convex_in_weights(
        seed in any::<u64>(),
        t1 in prop::collection::vec(-10.0..10.0f64, 6),
        t2 in prop::collection::vec(-10.0..10.0f64, 6),
        lam in 0.0..1.0f64,
    ) {
        let mut stream = noregret::rng::SeededStream::new(seed);
        let (pred, x, y) = random_regression_case(&mut stream);
        let m = pred.weights().len();
        let loss = |w: &[f64]| {
            let mut p = pred.clone();
            p.set_weights(w).unwrap();
            p.stage_loss(&x, &[y]).unwrap()
        };
        let mix: Vec<f64> = t1[..m].iter().zip(&t2[..m]).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
        let rhs = lam * loss(&t1[..m]) + (1.0 - lam) * loss(&t2[..m]);
        prop_assert!(loss(&mix) <= rhs + 1e-9 * (1.0 + rhs));
    }

    #[test]
    fn best_fixed_action_beats_candidates(
        stages in prop::collection::vec((prop::collection::vec(-2.0..2.0f64, 2), -3.0..3.0f64), 1..40),
        candidates in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 2), 20),
        ball in any::<bool>(),
    ) {
        let set = if ball {
            FeasibleSet::new_ball(vec![0.0, 0.0], 1.0).unwrap()
        } else {
            FeasibleSet::cube(2, -0.7, 0.7).unwrap()
        };
        let mut ledger = RegretLedger::new();
        for (phi, y) in &stages {
            ledger.record(&[0.0, 0.0], phi.clone(), *y).unwrap();
        }
        let best = ledger.best_fixed_action(&set).unwrap().action;
        prop_assert!(set.contains(&best, 1e-9).unwrap());
        let r_best = ledger.external_regret(&best).unwrap();
        for c in &candidates {
            let c = set.project(c).unwrap();
            let r = ledger.external_regret(&c).unwrap();
            prop_assert!(r_best >= r - 1e-9 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn sigma_tail_is_certified(a in -0.9..0.9f64, b in -0.9..0.9f64, c in -0.9..0.9f64, d in -0.9..0.9f64) {
        let rows = vec![vec![a, b], vec![c, d]];
        let m = dynamics::matrix_from_rows(&rows).unwrap();
        prop_assume!(radius_2x2_oracle(&rows) < 0.95);
        let tol = 1e-8;
        let s = dynamics::sigma_sum(&m, tol).unwrap();
        let doubled = dynamics::sigma_sum_at(&m, 2 * s.terms).unwrap();
        prop_assert!((s.value - doubled.value).abs() < 2.0 * tol);
        let oracle = sigma_oracle_2x2(&rows, 2000);
        prop_assert!(s.value + 1e-12 >= oracle && s.value - oracle <= 2.0 * tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn regression_replay_and_feasibility(seed in any::<u64>(), eta in 0.1..3.0f64) {
        let cfg = RegressionExperimentConfig { eta0: eta, horizon: 200, ..Default::default() };
        let run = regression::run_online_regression(&cfg, seed).unwrap();
        let again = regression::run_online_regression(&cfg, seed).unwrap();
        prop_assert_eq!(&run.records, &again.records);
        for r in &run.records {
            prop_assert!(r.loss >= 0.0);
            prop_assert!(run.feasible_set.contains(&r.theta, 1e-9).unwrap());
            let p = RbfPredictor::new(run.hypothesis.clone(), r.theta.clone()).unwrap();
            prop_assert_eq!(p.stage_loss(&r.x, &[r.y]).unwrap(), r.loss);
        }
        let losses = run.losses();
        prop_assert_eq!(run.ledger.stage_losses(), losses.as_slice());
    }

    #[test]
    fn pendulum_bookkeeping(kp in 1.0..10.0f64, kd in 1.0..5.0f64, eta in 0.05..1.0f64) {
        let params = PendulumParams { horizon: 600, ..Default::default() };
        let mix = ModelErrorMixture::default();
        let cfg = ControllerConfig { kp, kd, eta0: eta, scenario: Scenario::GpAdaptive, ..Default::default() };
        prop_assume!(control::error_matrix(&cfg, &params).is_ok());
        let bundle = control::run_pendulum_experiment(&params, &mix, &cfg).unwrap();
        let set = bundle.config.resolved_feasible_set(mix.len()).unwrap();
        for r in &bundle.records {
            prop_assert_eq!(r.e, [r.x_ref[0] - r.x[0], r.x_ref[1] - r.x[1]]);
            let f = mix.value(&r.x);
            let f_hat: f64 = mix.features(&r.x).iter().zip(&r.theta).map(|(p, t)| p * t).sum();
            prop_assert!((r.d - params.tau * (f - f_hat)).abs() <= 1e-12);
            prop_assert!((r.loss - (f - f_hat) * (f - f_hat)).abs() <= 1e-12 * (1.0 + r.loss));
            prop_assert!(set.contains(&r.theta, 1e-9).unwrap());
        }
        let exact = control::run_pendulum_experiment(&params, &mix, &cfg.with_scenario(Scenario::TrueModel)).unwrap();
        prop_assert!(control::recurrence_residual(&exact).unwrap() <= 1e-9);
    }
}

#[test]
fn sparse_spike_family_long_traces() {
    // Cesaro mean <= eps * delta over 1e4 samples forces a window of length delta * 1e3 after N <= 1e3
    let mut stream = noregret::rng::SeededStream::new(11);
    for _ in 0..50 {
        let v = sparse_spike_trace(&mut stream, 10_000);
        let t = SequenceTrace::new(v.clone()).unwrap();
        assert!(ip::cesaro_averages(&t).at(10_000) <= 1e-3);
        for start in [1, 999, 1000] {
            let q = IpQuery::new(0.1, 10, start, IpTarget::Point(0.0)).unwrap();
            let w = ip::ip_witness(&t, &q).unwrap();
            assert!(w.is_some());
            assert_eq!(w, brute_force_witness(&v, 0.1, 10, start, |s| s.abs()));
        }
    }
}

#[test]
fn witness_minimality_on_long_trace() {
    let v = ip::power_spike_sequence(10_000).unwrap();
    for (eps, d, n) in [(0.1, 10, 100), (0.01, 50, 1), (1e-6, 5, 2000)] {
        let q = IpQuery::new(eps, d, n, IpTarget::Point(0.0)).unwrap();
        assert_eq!(ip::ip_witness(&v, &q).unwrap(), brute_force_witness(v.values(), eps, d, n, |s| s.abs()));
    }
}

#[test]
fn representational_error_of_constant_map_is_variance() {
    // E[(c - x)^2] over U[-1, 1] is minimised at c = 0 with value 1/3
    let map = RbfFeatureMap::new(vec![vec![0.0]], vec![1e6]).unwrap();
    let re = regression::representational_error(&map, &|x: &[f64]| x[0], &[-1.0], &[1.0], 100_000, 3).unwrap();
    assert!((re.estimate - 1.0 / 3.0).abs() <= 0.02, "{}", re.estimate);
}
