//! Simulation studies: null behaviour of the BM and BB tests and power
//! under logit-linear and logit-power miscalibration.
//!
//! For every replicate a covariate `X ~ N(0, 1)` is drawn per observation.
//! In the null family the prediction is `π = expit(β0 + X)` and `Y ~ Bernoulli(π)`.
//! In the power families the true risk is `p = expit(X)`, `Y ~ Bernoulli(p)`,
//! and the prediction is
//!
//! * logit-linear: `logit(π) = a + bX`,
//! * logit-power:  `logit(π) = a + b·sign(X)|X|^{1/b}`.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{replicate_rng, stream_key, Execution};
use crate::inference::{
    hosmer_lemeshow_test, weak_calibration_lr_test, BbTestResult, BmTestResult, DfRule,
};
use crate::inference::expit;
use crate::process::{build_dataset, cumulative_process, walk_statistics, CalibrationDataset};

pub const NULL_REPLICATIONS: usize = 10_000;
pub const POWER_REPLICATIONS: usize = 2_500;
pub const ECDF_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Null,
    LogitLinear,
    LogitPower,
}

impl Family {
    fn tag(self) -> u64 {
        match self {
            Family::Null => 1,
            Family::LogitLinear => 2,
            Family::LogitPower => 3,
        }
    }
}

/// One cell of a simulation design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationScenario {
    pub family: Family,
    /// Intercept of the null family.
    pub beta0: f64,
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub replications: usize,
    /// Root seed of the study this cell belongs to.
    pub seed: u64,
    pub alpha: f64,
}

impl SimulationScenario {
    pub fn null(beta0: f64, n: usize, replications: usize, seed: u64) -> Self {
        Self {
            family: Family::Null,
            beta0,
            a: 0.0,
            b: 1.0,
            n,
            replications,
            seed,
            alpha: 0.05,
        }
    }

    pub fn power(family: Family, a: f64, b: f64, n: usize, replications: usize, seed: u64) -> Self {
        Self {
            family,
            beta0: 0.0,
            a,
            b,
            n,
            replications,
            seed,
            alpha: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScenario(m.to_string()));
        if self.n < 1 {
            return bad("n must be at least 1");
        }
        if self.replications < 1 {
            return bad("replications must be at least 1");
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return bad("b must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.a.is_finite() && self.beta0.is_finite()) {
            return bad("a and beta0 must be finite");
        }
        Ok(())
    }

    /// Stream key of this cell: depends on the design point, not on the
    /// replication count or on where the cell sits in a grid.
    pub fn stream_key(&self) -> u64 {
        stream_key(&[
            self.family.tag(),
            self.beta0.to_bits(),
            self.a.to_bits(),
            self.b.to_bits(),
            self.n as u64,
        ])
    }

    /// Predicted risk for covariate value `x`.
    pub fn prediction(&self, x: f64) -> f64 {
        match self.family {
            Family::Null => expit(self.beta0 + x),
            Family::LogitLinear => expit(self.a + self.b * x),
            Family::LogitPower => expit(self.a + self.b * x.signum() * x.abs().powf(1.0 / self.b)),
        }
    }

    /// True risk for covariate value `x`.
    pub fn true_risk(&self, x: f64) -> f64 {
        match self.family {
            Family::Null => self.prediction(x),
            Family::LogitLinear | Family::LogitPower => expit(x),
        }
    }
}

/// Draws replicate `replicate_index` of a scenario.
pub fn generate_dataset(
    scenario: &SimulationScenario,
    replicate_index: usize,
) -> Result<CalibrationDataset> {
    scenario.validate()?;
    let mut rng = replicate_rng(scenario.seed, scenario.stream_key(), replicate_index as u64);
    let mut preds = Vec::with_capacity(scenario.n);
    let mut outcomes = Vec::with_capacity(scenario.n);
    for _ in 0..scenario.n {
        let x: f64 = rng.sample(StandardNormal);
        let risk = scenario.true_risk(x);
        preds.push(scenario.prediction(x));
        outcomes.push(u8::from(rng.random::<f64>() < risk));
    }
    build_dataset(&preds, &outcomes, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// Likelihood-ratio test of weak calibration.
    Lr,
    /// Hosmer–Lemeshow on deciles.
    Hl,
    Bm,
    Bb,
}

impl TestKind {
    pub fn label(self) -> &'static str {
        match self {
            TestKind::Lr => "LR",
            TestKind::Hl => "HL",
            TestKind::Bm => "BM",
            TestKind::Bb => "BB",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub test: TestKind,
    pub rejections: usize,
    pub proportion: f64,
    /// `√(p̂(1-p̂)/replications)`.
    pub se: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_values: Option<Vec<f64>>,
}

/// Replicates where a test could not produce a p-value; they count as
/// non-rejections.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub lr_not_converged: usize,
    pub hl_failed: usize,
}

/// Per-replicate `p_a` and `p_b` of the BB test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeComponents {
    pub p_a: Vec<f64>,
    pub p_b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub scenario: SimulationScenario,
    pub tests: Vec<TestSummary>,
    pub diagnostics: Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bridge_components: Option<BridgeComponents>,
    /// Excluded from reproducibility comparisons.
    pub wall_time_secs: f64,
}

impl SimulationSummary {
    pub fn test(&self, kind: TestKind) -> Option<&TestSummary> {
        self.tests.iter().find(|t| t.test == kind)
    }

    pub fn proportion(&self, kind: TestKind) -> Option<f64> {
        self.test(kind).map(|t| t.proportion)
    }

    /// Equality ignoring wall time.
    pub fn same_results(&self, other: &Self) -> bool {
        self.scenario == other.scenario
            && self.tests == other.tests
            && self.diagnostics == other.diagnostics
            && self.bridge_components == other.bridge_components
    }
}

/// Knobs shared by the study runners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyOptions {
    pub exec: Execution,
    pub record_p_values: bool,
    pub hl_groups: usize,
    /// Predictions in every design come from a fixed model rather than a
    /// fit to the replicate, so the statistic is referred to `G` df.
    pub hl_df_rule: DfRule,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            exec: Execution::default(),
            record_p_values: false,
            hl_groups: 10,
            hl_df_rule: DfRule::G,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ReplicateOutcome {
    p: [Option<f64>; 4],
    p_a: f64,
    p_b: f64,
}

/// Tests run for a family: BM and BB under the null design, all four in
/// the power designs.
pub fn tests_for(family: Family) -> &'static [TestKind] {
    match family {
        Family::Null => &[TestKind::Bm, TestKind::Bb],
        Family::LogitLinear | Family::LogitPower => {
            &[TestKind::Lr, TestKind::Hl, TestKind::Bm, TestKind::Bb]
        }
    }
}

fn evaluate_replicate(
    scenario: &SimulationScenario,
    index: usize,
    tests: &[TestKind],
    opts: &StudyOptions,
) -> Result<ReplicateOutcome> {
    let data = generate_dataset(scenario, index)?;
    let stats = walk_statistics(&cumulative_process(&data));
    let bb = BbTestResult::from_statistics(&stats);
    let mut p = [None; 4];
    for (slot, &kind) in p.iter_mut().zip(tests) {
        *slot = match kind {
            TestKind::Bm => Some(BmTestResult::from_statistics(&stats).p_value),
            TestKind::Bb => Some(bb.p_unified),
            TestKind::Lr => weak_calibration_lr_test(&data).p_value,
            TestKind::Hl => hosmer_lemeshow_test(&data, opts.hl_groups, opts.hl_df_rule)
                .ok()
                .map(|r| r.p_value),
        };
    }
    Ok(ReplicateOutcome {
        p,
        p_a: bb.p_a,
        p_b: bb.p_b,
    })
}

/// Runs every replicate of one scenario.
pub fn run_cell(scenario: &SimulationScenario, opts: &StudyOptions) -> Result<SimulationSummary> {
    scenario.validate()?;
    let started = Instant::now();
    let tests = tests_for(scenario.family);
    let outcomes: Vec<ReplicateOutcome> = opts
        .exec
        .map(scenario.replications, |i| {
            evaluate_replicate(scenario, i, tests, opts)
        })
        .into_iter()
        .collect::<Result<_>>()?;

    let reps = scenario.replications as f64;
    let mut diagnostics = Diagnostics::default();
    let summaries = tests
        .iter()
        .enumerate()
        .map(|(slot, &kind)| {
            let mut rejections = 0;
            let mut failed = 0;
            for o in &outcomes {
                match o.p[slot] {
                    Some(p) if p < scenario.alpha => rejections += 1,
                    Some(_) => {}
                    None => failed += 1,
                }
            }
            match kind {
                TestKind::Lr => diagnostics.lr_not_converged = failed,
                TestKind::Hl => diagnostics.hl_failed = failed,
                _ => {}
            }
            let proportion = rejections as f64 / reps;
            TestSummary {
                test: kind,
                rejections,
                proportion,
                se: (proportion * (1.0 - proportion) / reps).sqrt(),
                p_values: opts
                    .record_p_values
                    .then(|| outcomes.iter().map(|o| o.p[slot].unwrap_or(1.0)).collect()),
            }
        })
        .collect();

    let bridge_components = opts.record_p_values.then(|| BridgeComponents {
        p_a: outcomes.iter().map(|o| o.p_a).collect(),
        p_b: outcomes.iter().map(|o| o.p_b).collect(),
    });

    Ok(SimulationSummary {
        scenario: *scenario,
        tests: summaries,
        diagnostics,
        bridge_components,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Null,
    Power,
}

/// A full study grid, in row-major order of the input grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub kind: StudyKind,
    pub seed: u64,
    pub replications: usize,
    pub cells: Vec<SimulationSummary>,
}

impl StudyResult {
    pub fn same_results(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.seed == other.seed
            && self.replications == other.replications
            && self.cells.len() == other.cells.len()
            && self.cells.iter().zip(&other.cells).all(|(a, b)| a.same_results(b))
    }
}

/// Null study over `beta0_grid × n_grid`. P-values are always recorded.
pub fn run_null_study(
    beta0_grid: &[f64],
    n_grid: &[usize],
    replications: usize,
    seed: u64,
    opts: &StudyOptions,
) -> Result<StudyResult> {
    if beta0_grid.is_empty() {
        return Err(Error::EmptyGrid("beta0"));
    }
    if n_grid.is_empty() {
        return Err(Error::EmptyGrid("n"));
    }
    let opts = StudyOptions {
        record_p_values: true,
        ..*opts
    };
    let mut cells = Vec::with_capacity(beta0_grid.len() * n_grid.len());
    for &n in n_grid {
        for &beta0 in beta0_grid {
            let scenario = SimulationScenario::null(beta0, n, replications, seed);
            cells.push(run_cell(&scenario, &opts)?);
        }
    }
    Ok(StudyResult {
        kind: StudyKind::Null,
        seed,
        replications,
        cells,
    })
}

/// Power study over `a_grid × b_grid × n_grid` for a miscalibration family.
pub fn run_power_study(
    family: Family,
    a_grid: &[f64],
    b_grid: &[f64],
    n_grid: &[usize],
    replications: usize,
    seed: u64,
    opts: &StudyOptions,
) -> Result<StudyResult> {
    if family == Family::Null {
        return Err(Error::InvalidScenario(
            "power studies need a miscalibration family".into(),
        ));
    }
    for (name, empty) in [
        ("a", a_grid.is_empty()),
        ("b", b_grid.is_empty()),
        ("n", n_grid.is_empty()),
    ] {
        if empty {
            return Err(Error::EmptyGrid(name));
        }
    }
    let mut cells = Vec::with_capacity(a_grid.len() * b_grid.len() * n_grid.len());
    for &n in n_grid {
        for &a in a_grid {
            for &b in b_grid {
                let scenario = SimulationScenario::power(family, a, b, n, replications, seed);
                cells.push(run_cell(&scenario, opts)?);
            }
        }
    }
    Ok(StudyResult {
        kind: StudyKind::Power,
        seed,
        replications,
        cells,
    })
}

/// Right-continuous empirical CDF sampled at `k/511`, `k = 0..512`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ecdf {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn pvalue_ecdf(pvalues: &[f64]) -> Result<Ecdf> {
    if pvalues.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len() as f64;
    let grid: Vec<f64> = (0..ECDF_POINTS)
        .map(|k| k as f64 / (ECDF_POINTS - 1) as f64)
        .collect();
    let values = grid
        .iter()
        .map(|&x| sorted.partition_point(|&p| p <= x) as f64 / total)
        .collect();
    Ok(Ecdf { grid, values })
}

/// Exact sup-norm distance between the ECDF of `pvalues` and the uniform CDF.
pub fn ecdf_sup_deviation(pvalues: &[f64]) -> Result<f64> {
    if pvalues.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &p) in sorted.iter().enumerate() {
        let p = p.clamp(0.0, 1.0);
        d = d.max((i + 1) as f64 / n - p).max(p - i as f64 / n);
    }
    Ok(d)
}

/// Sample mean of predictions of a null-family replicate; used to check
/// the design's average event probability.
pub fn mean_prediction(scenario: &SimulationScenario, replicate_index: usize) -> Result<f64> {
    generate_dataset(scenario, replicate_index).map(|d| d.mean_prediction())
}
