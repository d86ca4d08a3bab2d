//! Brownian-motion (BM) and Brownian-bridge (BB) tests on the cumulative walk.

use serde::{Deserialize, Serialize};

use crate::dist;
use crate::process::{
    cumulative_process, walk_statistics, CalibrationDataset, WalkLocation, WalkStatistics,
};

/// `S* = max|S_i|` against the law of `sup|W(t)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmTestResult {
    pub c_star: f64,
    pub s_star: f64,
    pub location: WalkLocation,
    pub p_value: f64,
}

impl BmTestResult {
    pub fn from_statistics(stats: &WalkStatistics) -> Self {
        Self {
            c_star: stats.c_star,
            s_star: stats.s_star,
            location: stats.argmax_bm,
            p_value: dist::sup_abs_bm_sf(stats.s_star).expect("s_star is non-negative"),
        }
    }
}

/// Terminal value `S_n` (mean calibration) and bridged maximum `B*`,
/// combined by Fisher's method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BbTestResult {
    pub c_n: f64,
    pub s_n: f64,
    /// `2Φ(-|S_n|)`.
    pub p_a: f64,
    pub b_star: f64,
    /// `1 - G(B*)`.
    pub p_b: f64,
    pub location_bridge: WalkLocation,
    pub p_unified: f64,
}

impl BbTestResult {
    pub fn from_statistics(stats: &WalkStatistics) -> Self {
        let ln_a = dist::ln_two_sided_normal_p(stats.s_n);
        let ln_b = dist::ln_kolmogorov_sf(stats.b_star);
        Self {
            c_n: stats.c_n,
            s_n: stats.s_n,
            p_a: 2.0 * dist::std_normal_cdf(-stats.s_n.abs()),
            b_star: stats.b_star,
            p_b: dist::kolmogorov_sf(stats.b_star).expect("b_star is non-negative"),
            location_bridge: stats.argmax_bb,
            p_unified: fisher_combine_ln(ln_a, ln_b),
        }
    }
}

/// Marginal test on `S_n` and the conditional test on `S*` given `S_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalBmResult {
    pub p_a: f64,
    pub p_conditional: f64,
}

/// Fisher's combination of two independent p-values (chi-square, 4 df).
pub fn fisher_combine(p_a: f64, p_b: f64) -> f64 {
    fisher_combine_ln(p_a.ln(), p_b.ln())
}

/// [`fisher_combine`] from log p-values, so underflowed components still
/// give a well-defined result.
pub fn fisher_combine_ln(ln_a: f64, ln_b: f64) -> f64 {
    let x = (-2.0 * (ln_a + ln_b)).max(0.0);
    if x.is_infinite() {
        return 0.0;
    }
    dist::chi_square4_sf(x).expect("statistic is non-negative")
}

pub fn bm_test(data: &CalibrationDataset) -> BmTestResult {
    BmTestResult::from_statistics(&walk_statistics(&cumulative_process(data)))
}

pub fn bb_test(data: &CalibrationDataset) -> BbTestResult {
    BbTestResult::from_statistics(&walk_statistics(&cumulative_process(data)))
}

pub fn conditional_bm_test(data: &CalibrationDataset) -> ConditionalBmResult {
    conditional_from_statistics(&walk_statistics(&cumulative_process(data)))
}

pub fn conditional_from_statistics(stats: &WalkStatistics) -> ConditionalBmResult {
    debug_assert!(stats.s_star >= stats.s_n.abs());
    let cdf = dist::conditional_sup_cdf(stats.s_star, stats.s_n).expect("s_star is non-negative");
    ConditionalBmResult {
        p_a: 2.0 * dist::std_normal_cdf(-stats.s_n.abs()),
        p_conditional: (1.0 - cdf).clamp(0.0, 1.0),
    }
}
