mod common;

use common::correlation;
use cumcal::inference::expit;
use cumcal::sim::{
    ecdf_sup_deviation, generate_dataset, mean_prediction, pvalue_ecdf, run_cell, run_null_study,
    run_power_study, Family, SimulationScenario, SimulationSummary, StudyOptions, TestKind,
};
use cumcal::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn recorded() -> StudyOptions {
    StudyOptions {
        record_p_values: true,
        ..StudyOptions::default()
    }
}

/// `x ≥ y` up to two standard errors of the difference.
fn at_least(cell: &SimulationSummary, x: TestKind, y: TestKind) -> bool {
    let (sx, sy) = (cell.test(x).unwrap(), cell.test(y).unwrap());
    sx.proportion >= sy.proportion - 2.0 * (sx.se.powi(2) + sy.se.powi(2)).sqrt()
}

#[test]
fn null_design_event_rates() {
    for (beta0, want) in [(-2.0, 0.155), (-1.0, 0.303), (0.0, 0.500)] {
        let s = SimulationScenario::null(beta0, 1_000_000, 1, 17);
        let m = mean_prediction(&s, 0).unwrap();
        assert!((m - want).abs() < 0.002, "β0 = {beta0}: {m}");
    }
}

#[test]
fn event_rates_by_quadrature() {
    // E[expit(β0 + X)] for X ~ N(0, 1) by a fine midpoint rule
    for (beta0, want) in [(-2.0, 0.155), (-1.0, 0.303), (0.0, 0.500)] {
        let h = 1e-3;
        let mut acc = 0.0;
        let mut x = -10.0 + h / 2.0;
        while x < 10.0 {
            acc += expit(beta0 + x) * (-0.5 * x * x).exp() * h;
            x += h;
        }
        let mean = acc / (2.0 * std::f64::consts::PI).sqrt();
        assert!((mean - want).abs() < 1e-3, "β0 = {beta0}: {mean}");
    }
}

#[test]
fn generator_draws_match_an_independent_stream_model() {
    // same X feeds prediction and truth: in the null family they coincide
    let s = SimulationScenario::null(-1.0, 5000, 1, 3);
    let d = generate_dataset(&s, 0).unwrap();
    let rate = d.events() as f64 / d.len() as f64;
    assert!((rate - d.mean_prediction()).abs() < 3.0 * (0.21 / 5000.0_f64).sqrt() + 1e-3);
    // and a plain stream with the same design has the same mean
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let m: f64 = (0..200_000)
        .map(|_| expit(-1.0 + rng.sample::<f64, _>(StandardNormal)))
        .sum::<f64>()
        / 200_000.0;
    assert!((m - 0.303).abs() < 0.003);
}

#[test]
fn null_rejection_stays_in_the_nominal_band() {
    let study = run_null_study(&[-2.0, -1.0, 0.0], &[250, 1000], 10_000, 1, &StudyOptions::default())
        .unwrap();
    for cell in &study.cells {
        for kind in [TestKind::Bm, TestKind::Bb] {
            let p = cell.proportion(kind).unwrap();
            assert!(
                (0.039..=0.061).contains(&p),
                "{kind:?} β0 = {} n = {}: {p}",
                cell.scenario.beta0,
                cell.scenario.n
            );
        }
    }
    // p-value ECDFs hug the diagonal at n = 1000. The asymptotic p-values
    // are slightly conservative at finite n (mean p near 0.51), most
    // visibly at β0 = -2 where the total variance is only about 110.
    for cell in study.cells.iter().filter(|c| c.scenario.n == 1000) {
        let bound = if cell.scenario.beta0 == -1.0 { 0.02 } else { 0.03 };
        for kind in [TestKind::Bm, TestKind::Bb] {
            let p = cell.test(kind).unwrap().p_values.as_ref().unwrap();
            let d = ecdf_sup_deviation(p).unwrap();
            assert!(d <= bound, "{kind:?} β0 = {}: {d}", cell.scenario.beta0);
        }
    }
}

#[test]
fn small_samples_are_conservative() {
    let study = run_null_study(&[-2.0, -1.0, 0.0], &[50], 10_000, 2, &StudyOptions::default())
        .unwrap();
    for cell in &study.cells {
        for kind in [TestKind::Bm, TestKind::Bb] {
            let p = cell.proportion(kind).unwrap();
            assert!(p <= 0.055, "{kind:?} β0 = {}: {p}", cell.scenario.beta0);
        }
    }
}

#[test]
fn bridge_components_are_uncorrelated() {
    let s = SimulationScenario::null(-1.0, 1000, 5_000, 21);
    let cell = run_cell(&s, &recorded()).unwrap();
    let comps = cell.bridge_components.unwrap();
    let r = correlation(&comps.p_a, &comps.p_b);
    assert!(r.abs() < 0.05, "{r}");
}

#[test]
fn single_replicate_cell() {
    let s = SimulationScenario::power(Family::LogitPower, 0.25, 2.0, 100, 1, 9);
    let cell = run_cell(&s, &recorded()).unwrap();
    assert_eq!(cell.tests.len(), 4);
    for t in &cell.tests {
        assert!(t.rejections <= 1);
        assert_eq!(t.p_values.as_ref().unwrap().len(), 1);
    }
}

#[test]
fn ecdf_of_known_values() {
    let e = pvalue_ecdf(&[0.1, 0.5, 0.5, 0.9]).unwrap();
    let at = |x: f64| {
        let k = e.grid.iter().position(|&g| g >= x).unwrap();
        e.values[k]
    };
    assert_eq!(e.grid.first(), Some(&0.0));
    assert_eq!(e.grid.last(), Some(&1.0));
    assert_eq!(at(0.0), 0.0);
    assert_eq!(*e.values.last().unwrap(), 1.0);
    assert!(at(0.6) == 0.75);
    assert!((ecdf_sup_deviation(&[0.5]).unwrap() - 0.5).abs() < 1e-15);
    assert!((ecdf_sup_deviation(&[0.25, 0.75]).unwrap() - 0.25).abs() < 1e-15);
}

#[test]
fn studies_are_reproducible_across_execution_modes() {
    let seq = StudyOptions {
        exec: Execution::Sequential,
        ..recorded()
    };
    let par = recorded();
    let a = run_power_study(Family::LogitLinear, &[0.0, 0.25], &[1.0, 2.0], &[100], 200, 5, &seq)
        .unwrap();
    let b = run_power_study(Family::LogitLinear, &[0.0, 0.25], &[1.0, 2.0], &[100], 200, 5, &par)
        .unwrap();
    let c = run_power_study(Family::LogitLinear, &[0.0, 0.25], &[1.0, 2.0], &[100], 200, 6, &par)
        .unwrap();
    assert!(a.same_results(&b));
    assert!(!a.same_results(&c));
    // a cell does not depend on its neighbours in the grid
    let alone = run_cell(&SimulationScenario::power(Family::LogitLinear, 0.25, 2.0, 100, 200, 5), &seq)
        .unwrap();
    assert!(alone.same_results(&a.cells[3]));
}

#[test]
fn standard_errors_are_bounded_at_the_power_study_size() {
    let s = SimulationScenario::power(Family::LogitPower, 0.0, 1.0, 100, 2_500, 12);
    let cell = run_cell(&s, &StudyOptions::default()).unwrap();
    for t in &cell.tests {
        assert!(t.se <= 0.01 + 1e-15, "{:?}: {}", t.test, t.se);
    }
}

#[test]
fn power_ordering_under_strong_miscalibration() {
    let s = SimulationScenario::power(Family::LogitLinear, 0.25, 2.0, 1000, 500, 13);
    let cell = run_cell(&s, &StudyOptions::default()).unwrap();
    assert!(at_least(&cell, TestKind::Lr, TestKind::Bb));
    assert!(at_least(&cell, TestKind::Bb, TestKind::Bm));
    assert!(cell.proportion(TestKind::Lr).unwrap() > 0.5);
}

#[test]
fn power_grows_with_sample_size() {
    let study = run_power_study(
        Family::LogitPower,
        &[0.0],
        &[0.75],
        &[100, 1000],
        1_000,
        14,
        &StudyOptions::default(),
    )
    .unwrap();
    for kind in [TestKind::Lr, TestKind::Bm, TestKind::Bb] {
        let small = study.cells[0].proportion(kind).unwrap();
        let large = study.cells[1].proportion(kind).unwrap();
        assert!(large > small, "{kind:?}: {small} -> {large}");
    }
}

#[test]
fn invalid_designs_are_rejected() {
    assert!(run_null_study(&[], &[100], 10, 1, &StudyOptions::default()).is_err());
    assert!(run_power_study(Family::Null, &[0.0], &[1.0], &[100], 10, 1, &StudyOptions::default())
        .is_err());
    let zero = SimulationScenario::null(0.0, 100, 0, 1);
    assert!(run_cell(&zero, &StudyOptions::default()).is_err());
}
