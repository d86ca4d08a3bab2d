mod common;

use common::{binomial_se, direct_stats, enumerate_outcomes, frequency_at, support};
use cumcal::inference::{
    bb_test, bm_test, conditional_bm_test, monte_carlo_test_with, simulate_null, McStatistic,
};
use cumcal::sim::{generate_dataset, SimulationScenario};
use cumcal::{build_dataset, Execution};

const FIVE: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[test]
fn simulated_null_matches_exhaustive_enumeration() {
    let law = enumerate_outcomes(&FIVE);
    let total: f64 = law.iter().map(|(_, p)| p).sum();
    assert!((total - 1.0).abs() < 1e-14);
    let exact: Vec<_> = law
        .iter()
        .map(|(y, p)| (direct_stats(&FIVE, y), *p))
        .collect();

    let data = build_dataset(&FIVE, &[0; 5], None).unwrap();
    let reps = 1_000_000;
    let null = simulate_null(&data, reps, 2024, Execution::default()).unwrap();
    let tol = 1e-9;

    let checks: [(&str, Vec<(f64, f64)>, &[f64]); 3] = [
        ("S*", exact.iter().map(|(s, p)| (s.s_star, *p)).collect(), &null.s_star),
        ("B*", exact.iter().map(|(s, p)| (s.b_star, *p)).collect(), &null.b_star),
        ("S_n", exact.iter().map(|(s, p)| (s.s_n, *p)).collect(), &null.s_n),
    ];
    for (name, points, sample) in checks {
        let pmf = support(points, tol);
        let mut covered = 0.0;
        for (x, p) in pmf {
            let freq = frequency_at(sample, x, tol);
            covered += freq;
            let se = binomial_se(p, reps);
            assert!((freq - p).abs() <= 3.0 * se, "{name} at {x}: {freq} vs {p}");
        }
        // every simulated value lands on an enumerated support point
        assert!((covered - 1.0).abs() < 1e-12, "{name}: {covered}");
    }
}

#[test]
fn asymptotic_p_values_are_probabilities_on_every_outcome() {
    for (y, _) in enumerate_outcomes(&FIVE) {
        let d = build_dataset(&FIVE, &y, None).unwrap();
        let bm = bm_test(&d);
        let bb = bb_test(&d);
        let cond = conditional_bm_test(&d);
        for p in [bm.p_value, bb.p_a, bb.p_b, bb.p_unified, cond.p_a, cond.p_conditional] {
            assert!((0.0..=1.0).contains(&p), "{y:?}: {p}");
        }
        let s = direct_stats(&FIVE, &y);
        assert!((bm.s_star - s.s_star).abs() < 1e-12);
        assert!((bb.b_star - s.b_star).abs() < 1e-12);
        assert!((bb.s_n - s.s_n).abs() < 1e-12);
    }
}

#[test]
fn monte_carlo_tests_are_reproducible() {
    let s = SimulationScenario::null(-1.0, 200, 1, 5);
    let d = generate_dataset(&s, 0).unwrap();
    for which in [McStatistic::Bm, McStatistic::Bb] {
        let a = monte_carlo_test_with(&d, which, 2_000, 7, Execution::Sequential).unwrap();
        let b = monte_carlo_test_with(&d, which, 2_000, 7, Execution::default()).unwrap();
        let c = monte_carlo_test_with(&d, which, 2_000, 8, Execution::default()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.p_value, c.p_value);
        assert!(a.p_value >= 1.0 / 2_001.0 && a.p_value <= 1.0);
    }
}

#[test]
fn add_one_p_value_has_a_floor() {
    // an extreme observed walk is never matched by the replicates
    let preds = vec![0.05; 40];
    let d = build_dataset(&preds, &[1; 40], None).unwrap();
    let r = monte_carlo_test_with(&d, McStatistic::Bm, 999, 3, Execution::default()).unwrap();
    assert_eq!(r.p_value, 1.0 / 1000.0);
    let bb = monte_carlo_test_with(&d, McStatistic::Bb, 999, 3, Execution::default()).unwrap();
    assert_eq!(bb.p_a, Some(1.0 / 1000.0));
}

#[test]
fn zero_replications_is_an_error() {
    let d = build_dataset(&FIVE, &[0, 1, 0, 1, 1], None).unwrap();
    assert!(simulate_null(&d, 0, 1, Execution::default()).is_err());
}

#[test]
fn simulated_and_asymptotic_p_values_agree_at_scale() {
    // the discrete walk sits slightly below the continuous supremum, so the
    // simulated p-values run about 0.01 lower; enough replicates keep the
    // Monte Carlo error well inside the remaining margin
    let datasets = 200;
    let reps = 20_000;
    let scenario = SimulationScenario::null(-1.0, 1000, datasets, 31);
    let close = (0..datasets)
        .filter(|&i| {
            let d = generate_dataset(&scenario, i).unwrap();
            let mc = monte_carlo_test_with(&d, McStatistic::Bm, reps, i as u64, Execution::default())
                .unwrap();
            (mc.p_value - bm_test(&d).p_value).abs() <= 0.02
        })
        .count();
    assert!(close * 100 >= 95 * datasets, "{close}/{datasets}");
}
