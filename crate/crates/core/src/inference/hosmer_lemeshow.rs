//! Hosmer–Lemeshow test on quantile groups of predicted risk.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::dist;
use crate::error::{Error, Result};
use crate::process::CalibrationDataset;

/// Degrees-of-freedom convention.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DfRule {
    /// `groups - 2`, the convention for models fitted on the same data.
    #[default]
    GMinus2,
    /// `groups`, for fully external predictions.
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HlGroup {
    pub size: usize,
    pub observed: f64,
    pub expected: f64,
    pub mean_prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HlTestResult {
    pub statistic: f64,
    pub groups: usize,
    pub df: u32,
    pub p_value: f64,
    pub group_table: Vec<HlGroup>,
}

/// Linear-interpolation sample quantile of sorted data (Hyndman–Fan type 7).
fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Splits the sorted predictions at the `k/groups` quantiles. An observation
/// equal to a cut point belongs to the lower group. Duplicate cut points
/// (heavy ties) and empty intervals are dropped, so fewer than `groups`
/// ranges may come back.
pub fn quantile_groups(data: &CalibrationDataset, groups: usize) -> Result<Vec<Range<usize>>> {
    if groups < 2 {
        return Err(Error::InvalidGroups(format!("need at least 2 groups, got {groups}")));
    }
    let preds = data.predictions();
    if preds.len() < groups {
        return Err(Error::InvalidGroups(format!(
            "{groups} groups requested for {} observations",
            preds.len()
        )));
    }
    let mut breaks: Vec<f64> = (1..groups)
        .map(|k| quantile_sorted(preds, k as f64 / groups as f64))
        .collect();
    breaks.dedup();

    let mut ranges = Vec::with_capacity(groups);
    let mut start = 0;
    for b in breaks {
        let end = preds.partition_point(|&p| p <= b);
        if end > start {
            ranges.push(start..end);
            start = end;
        }
    }
    if start < preds.len() {
        ranges.push(start..preds.len());
    }
    Ok(ranges)
}

/// Tallies size, observed and expected events and mean prediction per group.
pub fn group_table(data: &CalibrationDataset, ranges: &[Range<usize>]) -> Vec<HlGroup> {
    ranges
        .iter()
        .map(|r| {
            let size = r.len();
            let expected: f64 = data.predictions()[r.clone()].iter().sum();
            let observed = data.outcomes()[r.clone()]
                .iter()
                .map(|&y| f64::from(y))
                .sum();
            HlGroup {
                size,
                observed,
                expected,
                mean_prediction: expected / size as f64,
            }
        })
        .collect()
}

/// `Σ_g (O_g - E_g)² / (E_g (1 - E_g/n_g))`.
pub fn hl_statistic(groups: &[HlGroup]) -> Result<f64> {
    let mut stat = 0.0;
    for (g, grp) in groups.iter().enumerate() {
        let denom = grp.expected * (1.0 - grp.expected / grp.size as f64);
        if !(denom > 0.0) {
            return Err(Error::DegenerateGroup {
                group: g,
                expected: grp.expected,
                size: grp.size,
            });
        }
        let diff = grp.observed - grp.expected;
        stat += diff * diff / denom;
    }
    Ok(stat)
}

pub fn hosmer_lemeshow_test(
    data: &CalibrationDataset,
    groups: usize,
    df_rule: DfRule,
) -> Result<HlTestResult> {
    let ranges = quantile_groups(data, groups)?;
    let table = group_table(data, &ranges);
    let statistic = hl_statistic(&table)?;
    let g = table.len();
    let df = match df_rule {
        DfRule::GMinus2 => g.saturating_sub(2),
        DfRule::G => g,
    };
    if df == 0 {
        return Err(Error::InvalidGroups(format!(
            "only {g} distinct groups; no degrees of freedom left"
        )));
    }
    let df = df as u32;
    Ok(HlTestResult {
        statistic,
        groups: g,
        df,
        p_value: dist::chi_square_sf(statistic, df)?,
        group_table: table,
    })
}
