//! Simulation-based versions of the BM and BB tests.
//!
//! Predictions are held fixed and outcome vectors are redrawn as independent
//! `Bernoulli(π_i)` variables, giving the exact finite-sample null
//! distribution of `S*`, `S_n` and `B*` up to Monte Carlo error.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::brownian::fisher_combine;
use crate::error::{Error, Result};
use crate::exec::{replicate_rng, stream_key, Execution};
use crate::process::{cumulative_process, walk_statistics, CalibrationDataset, WalkKernel};

const MC_STREAM: u64 = 0x4d43_4e55_4c4c; // "MCNULL"

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McStatistic {
    /// `S*` alone.
    Bm,
    /// `|S_n|` and `B*`, Fisher-combined.
    Bb,
}

/// Replicate statistics under the null, in replicate order.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSample {
    pub s_star: Vec<f64>,
    pub s_n: Vec<f64>,
    pub b_star: Vec<f64>,
}

impl NullSample {
    pub fn len(&self) -> usize {
        self.s_star.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_star.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McTestResult {
    pub statistic: McStatistic,
    pub replications: usize,
    pub seed: u64,
    pub p_value: f64,
    /// Empirical two-sided p-value of `S_n` (BB only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_a: Option<f64>,
    /// Empirical p-value of `B*` (BB only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_b: Option<f64>,
}

/// Draws `replications` outcome vectors and records the walk statistics of
/// each. Replicate `r` uses its own stream derived from `(seed, r)`.
pub fn simulate_null(
    data: &CalibrationDataset,
    replications: usize,
    seed: u64,
    exec: Execution,
) -> Result<NullSample> {
    if replications < 1 {
        return Err(Error::InvalidReplications);
    }
    let process = cumulative_process(data);
    let kernel = WalkKernel::new(&process);
    let key = stream_key(&[MC_STREAM, data.len() as u64]);
    let n = data.len();

    let draws = exec.map_with(
        replications,
        || (vec![0u8; n], Vec::with_capacity(n)),
        |(outcomes, walk), r| {
            let mut rng = replicate_rng(seed, key, r as u64);
            for (y, &p) in outcomes.iter_mut().zip(kernel.predictions()) {
                *y = u8::from(rng.random::<f64>() < p);
            }
            kernel.extremes(outcomes, walk)
        },
    );

    Ok(NullSample {
        s_star: draws.iter().map(|e| e.s_star).collect(),
        s_n: draws.iter().map(|e| e.s_n).collect(),
        b_star: draws.iter().map(|e| e.b_star).collect(),
    })
}

/// Add-one upper-tail p-value `(1 + #{x_r ≥ observed}) / (R + 1)`.
fn upper_tail(sample: impl Iterator<Item = f64>, observed: f64, total: usize) -> f64 {
    // replicate and observed statistics share one code path; the relative
    // slack only absorbs ties that differ in the last bit
    let cut = observed - 1e-12 * observed.abs();
    let hits = sample.filter(|&x| x >= cut).count();
    (1 + hits) as f64 / (total + 1) as f64
}

pub fn monte_carlo_test(
    data: &CalibrationDataset,
    which: McStatistic,
    replications: usize,
    seed: u64,
) -> Result<f64> {
    monte_carlo_test_with(data, which, replications, seed, Execution::default()).map(|r| r.p_value)
}

pub fn monte_carlo_test_with(
    data: &CalibrationDataset,
    which: McStatistic,
    replications: usize,
    seed: u64,
    exec: Execution,
) -> Result<McTestResult> {
    let observed = walk_statistics(&cumulative_process(data));
    let null = simulate_null(data, replications, seed, exec)?;
    let r = null.len();
    Ok(match which {
        McStatistic::Bm => McTestResult {
            statistic: which,
            replications,
            seed,
            p_value: upper_tail(null.s_star.iter().copied(), observed.s_star, r),
            p_a: None,
            p_b: None,
        },
        McStatistic::Bb => {
            let p_a = upper_tail(null.s_n.iter().map(|s| s.abs()), observed.s_n.abs(), r);
            let p_b = upper_tail(null.b_star.iter().copied(), observed.b_star, r);
            McTestResult {
                statistic: which,
                replications,
                seed,
                p_value: fisher_combine(p_a, p_b),
                p_a: Some(p_a),
                p_b: Some(p_b),
            }
        }
    })
}
