use bwcr_core::algorithms::{simulate, AlgorithmConfig, Variant};
use bwcr_core::benchmark::{compute_opt, compute_opt_grid, decompose_regret, final_regrets, regret_trace};
use bwcr_core::confidence::default_gamma;
use bwcr_core::geometry::{ConvexSet, Norm};
use bwcr_core::math;
use bwcr_core::model::{InstanceModel, OutcomeKind, PolicyDistribution};
use bwcr_core::objective::{Objective, ScalarTerm};
use bwcr_core::rng::{substream, Stream};
use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use rand::Rng;

fn instance(outcome: OutcomeKind) -> InstanceModel {
    let means = dmatrix![0.9, 0.7, 0.5, 0.3, 0.1; 0.8, 0.4, 0.6, 0.2, 0.1; 0.3, 0.6, 0.2, 0.7, 0.1];
    InstanceModel::new(means, outcome).unwrap()
}

fn objective() -> Objective {
    Objective::separable(vec![
        ScalarTerm::Quadratic { weight: 1.0, center: 1.0 },
        ScalarTerm::Log1p { weight: 1.0 },
        ScalarTerm::Linear { weight: 0.5 },
    ])
    .unwrap()
}

fn target() -> ConvexSet {
    ConvexSet::halfspaces(dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, -1.0], dvector![0.5, -0.45]).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn simulation_is_reproducible() {
    let inst = instance(OutcomeKind::Bernoulli);
    let cfg = AlgorithmConfig::new(Variant::UcbBwcr, 300, 3.0).with_objective(objective()).with_set(target());
    assert_eq!(simulate(&inst, &cfg, 11).unwrap(), simulate(&inst, &cfg, 11).unwrap());
    assert_ne!(simulate(&inst, &cfg, 11).unwrap().history, simulate(&inst, &cfg, 12).unwrap().history);
}

#[test]
fn fixed_policy_average_concentrates() {
    let inst = instance(OutcomeKind::Bernoulli);
    let policy = PolicyDistribution::new(dvector![0.1, 0.2, 0.3, 0.2, 0.2], false).unwrap();
    let expected = inst.mean_outcome(&policy);
    let (t, delta, trials) = (1000usize, 0.1, 200u64);
    let bound = 4.0 * math::sqrt(math::ln(2.0 * 3.0 / delta) / t as f64);
    let mut failures = 0;
    for seed in 0..trials {
        let mut draws = substream(seed, Stream::Arms);
        let mut outcomes = substream(seed, Stream::Outcomes);
        let mut sum = DVector::zeros(3);
        for _ in 0..t {
            let arm = policy.draw_arm(&mut draws).unwrap();
            sum += inst.sample_observation(arm, &mut outcomes).unwrap();
        }
        let dev = (sum / t as f64 - &expected).amax();
        if dev > bound {
            failures += 1;
        }
    }
    assert!(failures as f64 <= delta * trials as f64, "{failures} failures");
}

/// `‖Σ_t (Ã_t p_t − v_t)‖_∞` for the estimates chosen by an adaptive algorithm.
fn estimation_drift(horizon: usize, seed: u64) -> f64 {
    let inst = instance(OutcomeKind::Bernoulli);
    let gamma = default_gamma(5, horizon, 3, 0.05);
    let cfg = AlgorithmConfig::new(Variant::FwPrimal, horizon, gamma).with_objective(objective());
    let rec = simulate(&inst, &cfg, seed).unwrap();
    let mut total = DVector::zeros(3);
    for (est, v) in rec.estimates.iter().zip(&rec.history.observations) {
        total += est - v;
    }
    total.amax()
}

#[test]
fn estimation_drift_grows_like_square_root() {
    let small = median((0..20).map(|s| estimation_drift(1000, s)).collect());
    let large = median((0..20).map(|s| estimation_drift(4000, s)).collect());
    let ratio = large / small;
    // Square-root growth gives 2; linear growth would give 4.
    assert!((1.6..3.2).contains(&ratio), "ratio {ratio} ({small} -> {large})");
}

#[test]
fn regret_decomposition_dominates() {
    let inst = instance(OutcomeKind::Bernoulli);
    let f = objective();
    let bench = compute_opt(&inst, Some(&f), None).unwrap();
    let opt = bench.opt_value.unwrap();
    for variant in [Variant::DualOco, Variant::FwPrimal, Variant::UcbBwcr] {
        let cfg = AlgorithmConfig::new(variant, 500, default_gamma(5, 500, 3, 0.05)).with_objective(f.clone());
        for seed in 0..5 {
            let rec = simulate(&inst, &cfg, seed).unwrap();
            let mean = rec.history.observation_sum(500).unwrap() / 500.0;
            let parts = decompose_regret(opt, &f, Norm::L2, &rec.estimate_average, &mean);
            assert!(parts.holds(1e-9), "{variant:?} {parts:?}");
        }
    }
}

#[test]
fn benchmark_dominates_fixed_policies() {
    let inst = instance(OutcomeKind::Fixed);
    let (f, s) = (objective(), target());
    let bench = compute_opt(&inst, Some(&f), Some(&s)).unwrap();
    let opt = bench.opt_value.unwrap();
    let mut rng = substream(5, Stream::Auxiliary);
    let mut checked = 0;
    while checked < 100 {
        let raw = DVector::from_fn(5, |_, _| rng.random::<f64>());
        let policy = PolicyDistribution::from_raw(raw, false).unwrap();
        // Fixed outcomes: replaying the policy observes exactly V p on average.
        let x = inst.mean_outcome(&policy);
        if !s.contains(&x, 1e-9) {
            let anchor = PolicyDistribution::point_mass(5, 3);
            let mix = (policy.weights() + anchor.weights()) * 0.5;
            let p2 = PolicyDistribution::from_raw(mix, false).unwrap();
            let x2 = inst.mean_outcome(&p2);
            if !s.contains(&x2, 1e-9) {
                continue;
            }
            assert!(f.value(&x2) <= opt + 1e-6);
        } else {
            assert!(f.value(&x) <= opt + 1e-6);
        }
        checked += 1;
    }
}

#[test]
fn grid_and_exact_benchmarks_agree() {
    let mut rng = substream(21, Stream::Generator);
    for _ in 0..10 {
        let means = DMatrix::from_fn(2, 3, |_, _| rng.random::<f64>());
        let inst = InstanceModel::new(means, OutcomeKind::Fixed).unwrap();
        let f = Objective::separable(vec![ScalarTerm::Log1p { weight: 1.0 }, ScalarTerm::Quadratic { weight: 1.0, center: 0.4 }]).unwrap();
        let anchor = inst.means().column_mean();
        let set = ConvexSet::boxed(anchor.map(|a| (a - 0.05).max(0.0)), anchor.map(|a| (a + 0.05).min(1.0))).unwrap();
        let exact = compute_opt(&inst, Some(&f), Some(&set)).unwrap();
        let grid = compute_opt_grid(&inst, Some(&f), Some(&set), 1e-2, 1e-5).unwrap();
        assert!(exact.feasible && grid.feasible);
        assert!((exact.opt_value.unwrap() - grid.opt_value.unwrap()).abs() < 1e-2);
    }
}

#[test]
fn traces_are_well_formed() {
    let inst = instance(OutcomeKind::Bernoulli);
    let (f, s) = (objective(), target());
    let bench = compute_opt(&inst, Some(&f), Some(&s)).unwrap();
    let cfg = AlgorithmConfig::new(Variant::Combined, 300, 2.0).with_objective(f.clone()).with_set(s.clone());
    let rec = simulate(&inst, &cfg, 4).unwrap();
    let trace = regret_trace(&rec.history, &bench, Some(&f), Some(&s), Norm::L2).unwrap();
    assert_eq!(trace.areg1.len(), 300);
    assert!(trace.areg2.iter().all(|&d| d >= 0.0));
    let (a1, a2) = final_regrets(&rec.history, &bench, Some(&f), Some(&s), Norm::L2).unwrap();
    assert!((a1.unwrap() - trace.final_areg1().unwrap()).abs() < 1e-12);
    assert!((a2.unwrap() - trace.final_areg2().unwrap()).abs() < 1e-12);
}

#[test]
fn knapsack_runs_respect_budget() {
    let inst = instance(OutcomeKind::Bernoulli);
    for variant in [Variant::UcbBwk, Variant::GreedyBwk] {
        for eps in [None, Some(0.0)] {
            let mut cfg = AlgorithmConfig::new(variant, 2000, default_gamma(5, 2000, 3, 0.05)).with_budget(500.0);
            if let Some(e) = eps {
                cfg = cfg.with_eps(e);
            }
            for seed in 0..10 {
                let rec = simulate(&inst, &cfg, seed).unwrap();
                assert!(rec.budget_spent.iter().all(|&b| b <= 501.0));
                assert!(rec.history.stop_time <= 2001);
                assert_eq!(rec.history.len(), rec.history.stop_time - 1);
            }
        }
    }
}
