//! Sorted calibration data and the standardized cumulative prediction-error walk.
//!
//! Observations are ordered by predicted risk. Each step of the walk moves
//! right by `π_i(1-π_i)/T` and up by `(Y_i - π_i)/√T`, where
//! `T = Σ π_i(1-π_i)`, so that under perfect calibration the walk behaves
//! like standard Brownian motion on `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Predicted risks and binary outcomes, co-sorted by ascending prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDataset {
    predictions: Vec<f64>,
    outcomes: Vec<u8>,
    tie_flag: bool,
}

impl CalibrationDataset {
    /// Validates and sorts without clamping.
    pub fn new(predictions: &[f64], outcomes: &[u8]) -> Result<Self> {
        build_dataset(predictions, outcomes, None)
    }

    pub fn predictions(&self) -> &[f64] {
        &self.predictions
    }

    pub fn outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    /// Always false for a constructed dataset; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    /// True when at least two predictions are exactly equal. The walk then
    /// depends on the (stable) within-tie input order.
    pub fn tie_flag(&self) -> bool {
        self.tie_flag
    }

    pub fn events(&self) -> usize {
        self.outcomes.iter().filter(|&&y| y == 1).count()
    }

    pub fn mean_prediction(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for &p in &self.predictions {
            acc.add(p);
        }
        acc.value() / self.len() as f64
    }

    /// `T = Σ π_i(1-π_i)`.
    pub fn total_variance(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for &p in &self.predictions {
            acc.add(p * (1.0 - p));
        }
        acc.value()
    }
}

/// Validates raw inputs and returns them stably co-sorted by prediction.
///
/// With `clamp_epsilon`, predictions are first clipped into
/// `[ε, 1-ε]`; without it any prediction outside `(0, 1)` is an error.
pub fn build_dataset(
    raw_predictions: &[f64],
    raw_outcomes: &[u8],
    clamp_epsilon: Option<f64>,
) -> Result<CalibrationDataset> {
    if raw_predictions.len() != raw_outcomes.len() {
        return Err(Error::LengthMismatch {
            predictions: raw_predictions.len(),
            outcomes: raw_outcomes.len(),
        });
    }
    if raw_predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(eps) = clamp_epsilon {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::InvalidClamp(eps));
        }
    }

    let mut predictions = Vec::with_capacity(raw_predictions.len());
    for (index, &p) in raw_predictions.iter().enumerate() {
        let p = match clamp_epsilon {
            Some(eps) if !p.is_nan() => p.clamp(eps, 1.0 - eps),
            _ => p,
        };
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::PredictionOutOfRange {
                index,
                value: raw_predictions[index],
            });
        }
        predictions.push(p);
    }
    if let Some((index, &y)) = raw_outcomes.iter().enumerate().find(|(_, &y)| y > 1) {
        return Err(Error::OutcomeNotBinary {
            index,
            value: i64::from(y),
        });
    }

    let mut order: Vec<usize> = (0..predictions.len()).collect();
    // stable: tied predictions keep their input order
    order.sort_by(|&i, &j| predictions[i].total_cmp(&predictions[j]));

    let sorted_predictions: Vec<f64> = order.iter().map(|&i| predictions[i]).collect();
    let sorted_outcomes: Vec<u8> = order.iter().map(|&i| raw_outcomes[i]).collect();
    let tie_flag = sorted_predictions.windows(2).any(|w| w[0] == w[1]);

    Ok(CalibrationDataset {
        predictions: sorted_predictions,
        outcomes: sorted_outcomes,
        tie_flag,
    })
}

/// The walk `{(t_i, S_i)}` with the implicit origin `(0, 0)` omitted.
#[derive(Debug, Clone)]
pub struct CumulativeProcess<'a> {
    source: &'a CalibrationDataset,
    total_variance: f64,
    times: Vec<f64>,
    walk: Vec<f64>,
    raw_sums: Vec<f64>,
}

impl<'a> CumulativeProcess<'a> {
    pub fn source(&self) -> &'a CalibrationDataset {
        self.source
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    /// `t_1..t_n`, with `t_n = 1`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Standardized walk `S_1..S_n`.
    pub fn walk(&self) -> &[f64] {
        &self.walk
    }

    /// Raw partial sums `C_i = (1/n) Σ_{j≤i} (Y_j - π_j)`.
    pub fn raw_sums(&self) -> &[f64] {
        &self.raw_sums
    }

    pub fn len(&self) -> usize {
        self.walk.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walk.is_empty()
    }

    /// Bridged walk `S_i - t_i S_n`.
    pub fn bridged(&self) -> Vec<f64> {
        let s_n = self.terminal();
        self.walk
            .iter()
            .zip(&self.times)
            .map(|(s, t)| s - t * s_n)
            .collect()
    }

    pub fn terminal(&self) -> f64 {
        *self.walk.last().expect("non-empty walk")
    }
}

/// Builds the standardized walk for a dataset.
pub fn cumulative_process(data: &CalibrationDataset) -> CumulativeProcess<'_> {
    let n = data.len();
    let total_variance = data.total_variance();
    let sqrt_t = total_variance.sqrt();

    let mut times = Vec::with_capacity(n);
    let mut walk = Vec::with_capacity(n);
    let mut raw_sums = Vec::with_capacity(n);
    let mut var_acc = CompensatedSum::default();
    let mut err_acc = CompensatedSum::default();
    for (&p, &y) in data.predictions.iter().zip(&data.outcomes) {
        var_acc.add(p * (1.0 - p));
        err_acc.add(f64::from(y) - p);
        times.push(var_acc.value() / total_variance);
        let partial = err_acc.value();
        walk.push(partial / sqrt_t);
        raw_sums.push(partial / n as f64);
    }
    if let Some(last) = times.last_mut() {
        *last = 1.0;
    }

    CumulativeProcess {
        source: data,
        total_variance,
        times,
        walk,
        raw_sums,
    }
}

/// Position of an extremum on the walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkLocation {
    /// 1-based step of the walk (step 0 is the origin).
    pub step: usize,
    /// Time coordinate `t_step`.
    pub t: f64,
    /// Predicted risk `π_step` at that step.
    pub prediction: f64,
}

/// Summary statistics of the walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkStatistics {
    /// `C* = max |C_i|`.
    pub c_star: f64,
    /// `S* = max |S_i|`.
    pub s_star: f64,
    pub s_n: f64,
    /// Mean calibration error `C_n`.
    pub c_n: f64,
    /// `B* = max |S_i - t_i S_n|`.
    pub b_star: f64,
    pub argmax_bm: WalkLocation,
    pub argmax_bb: WalkLocation,
}

/// Maxima of `|S_i|` and `|S_i - t_i S_n|` with their (first) indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Extremes {
    pub s_star: f64,
    pub s_star_index: usize,
    pub s_n: f64,
    pub b_star: f64,
    pub b_star_index: usize,
}

/// Shared by the observed-statistic path and Monte Carlo replicates so both
/// produce bit-identical values for identical outcome vectors.
pub(crate) fn extremes(walk: &[f64], times: &[f64]) -> Extremes {
    let s_n = *walk.last().expect("non-empty walk");
    let mut s_star = f64::NEG_INFINITY;
    let mut s_star_index = 0;
    let mut b_star = f64::NEG_INFINITY;
    let mut b_star_index = 0;
    for (i, (&s, &t)) in walk.iter().zip(times).enumerate() {
        let a = s.abs();
        if a > s_star {
            s_star = a;
            s_star_index = i;
        }
        let b = (s - t * s_n).abs();
        if b > b_star {
            b_star = b;
            b_star_index = i;
        }
    }
    Extremes {
        s_star,
        s_star_index,
        s_n,
        b_star,
        b_star_index,
    }
}

/// Computes `C*`, `S*`, `S_n`, `C_n`, `B*` and where the maxima occur.
/// Ties resolve to the smallest step.
pub fn walk_statistics(process: &CumulativeProcess<'_>) -> WalkStatistics {
    let ext = extremes(&process.walk, &process.times);
    let c_star = process
        .raw_sums
        .iter()
        .fold(0.0_f64, |acc, c| acc.max(c.abs()));
    let location = |i: usize| WalkLocation {
        step: i + 1,
        t: process.times[i],
        prediction: process.source.predictions[i],
    };
    WalkStatistics {
        c_star,
        s_star: ext.s_star,
        s_n: ext.s_n,
        c_n: *process.raw_sums.last().expect("non-empty walk"),
        b_star: ext.b_star,
        argmax_bm: location(ext.s_star_index),
        argmax_bb: location(ext.b_star_index),
    }
}

/// Precomputed pieces of the walk that do not depend on outcomes, for
/// recomputing statistics on many simulated outcome vectors.
#[derive(Debug, Clone)]
pub(crate) struct WalkKernel {
    predictions: Vec<f64>,
    times: Vec<f64>,
    sqrt_t: f64,
}

impl WalkKernel {
    pub(crate) fn new(process: &CumulativeProcess<'_>) -> Self {
        Self {
            predictions: process.source.predictions.clone(),
            times: process.times.clone(),
            sqrt_t: process.total_variance.sqrt(),
        }
    }

    pub(crate) fn predictions(&self) -> &[f64] {
        &self.predictions
    }

    /// Same arithmetic as [`cumulative_process`] followed by [`extremes`].
    pub(crate) fn extremes(&self, outcomes: &[u8], walk_buf: &mut Vec<f64>) -> Extremes {
        walk_buf.clear();
        let mut err_acc = CompensatedSum::default();
        for (&p, &y) in self.predictions.iter().zip(outcomes) {
            err_acc.add(f64::from(y) - p);
            walk_buf.push(err_acc.value() / self.sqrt_t);
        }
        extremes(walk_buf, &self.times)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn sorts_pairs_by_prediction() {
        let d = build_dataset(&[0.6, 0.2], &[1, 0], None).unwrap();
        assert_eq!(d.predictions(), &[0.2, 0.6]);
        assert_eq!(d.outcomes(), &[0, 1]);
        assert!(!d.tie_flag());
    }

    #[test]
    fn rejects_non_binary_outcome() {
        let err = build_dataset(&[0.5], &[2], None).unwrap_err();
        assert!(matches!(err, Error::OutcomeNotBinary { index: 0, value: 2 }));
        assert!(err.to_string().contains("outcome not binary"));
    }

    #[test]
    fn ties_keep_input_order() {
        let d = build_dataset(&[0.3, 0.3, 0.1], &[1, 0, 0], None).unwrap();
        assert_eq!(d.predictions(), &[0.1, 0.3, 0.3]);
        assert_eq!(d.outcomes(), &[0, 1, 0]);
        assert!(d.tie_flag());
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            build_dataset(&[0.5, 0.4], &[1], None),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(build_dataset(&[], &[], None), Err(Error::EmptyInput)));
        assert!(matches!(
            build_dataset(&[0.5, 1.0], &[1, 0], None),
            Err(Error::PredictionOutOfRange { index: 1, .. })
        ));
        assert!(matches!(
            build_dataset(&[0.0], &[0], None),
            Err(Error::PredictionOutOfRange { index: 0, .. })
        ));
        assert!(matches!(
            build_dataset(&[f64::NAN], &[0], Some(1e-6)),
            Err(Error::PredictionOutOfRange { .. })
        ));
        assert!(matches!(
            build_dataset(&[0.5], &[0], Some(0.7)),
            Err(Error::InvalidClamp(_))
        ));
    }

    #[test]
    fn clamping_pulls_extremes_inside() {
        let d = build_dataset(&[1.0, 0.0, 0.5], &[1, 0, 1], Some(1e-6)).unwrap();
        assert_eq!(d.predictions(), &[1e-6, 0.5, 1.0 - 1e-6]);
    }

    #[test]
    fn two_point_process() {
        let d = build_dataset(&[0.2, 0.6], &[0, 1], None).unwrap();
        let p = cumulative_process(&d);
        assert!(close(p.total_variance(), 0.40, 1e-15));
        assert!(close(p.times()[0], 0.40, 1e-15));
        assert_eq!(p.times()[1], 1.0);
        assert!(close(p.raw_sums()[0], -0.10, 1e-15));
        assert!(close(p.raw_sums()[1], 0.10, 1e-15));
        assert!(close(p.walk()[0], -0.2 / 0.4_f64.sqrt(), 1e-15));
        assert!(close(p.walk()[0], -0.31623, 5e-6));
        assert!(close(p.walk()[1], 0.31623, 5e-6));
    }

    #[test]
    fn single_observation() {
        let d = build_dataset(&[0.5], &[1], None).unwrap();
        let p = cumulative_process(&d);
        assert_eq!(p.total_variance(), 0.25);
        assert_eq!(p.times(), &[1.0]);
        assert_eq!(p.walk(), &[1.0]);
        assert_eq!(p.raw_sums(), &[0.5]);
        let s = walk_statistics(&p);
        assert_eq!(s.s_star, 1.0);
        assert_eq!(s.s_n, 1.0);
        assert_eq!(s.b_star, 0.0);

        let d0 = build_dataset(&[0.5], &[0], None).unwrap();
        assert_eq!(cumulative_process(&d0).walk(), &[-1.0]);
    }

    #[test]
    fn two_point_statistics() {
        let d = build_dataset(&[0.2, 0.6], &[0, 1], None).unwrap();
        let p = cumulative_process(&d);
        let s = walk_statistics(&p);
        assert!(close(s.s_star, 0.31623, 5e-6));
        assert!(close(s.s_n, 0.31623, 5e-6));
        assert!(close(s.b_star, 0.44272, 5e-6));
        assert_eq!(s.argmax_bb.step, 1);
        assert_eq!(s.argmax_bb.prediction, 0.2);
        // |S_1| == |S_2|: smallest step wins
        assert_eq!(s.argmax_bm.step, 1);
        assert!(close(s.c_n, 0.1, 1e-15));
        assert!(close(s.c_star, 0.1, 1e-15));
    }

    #[test]
    fn kernel_matches_process_bitwise() {
        let d = build_dataset(&[0.1, 0.35, 0.5, 0.72, 0.9], &[0, 1, 1, 0, 1], None).unwrap();
        let p = cumulative_process(&d);
        let s = walk_statistics(&p);
        let kernel = WalkKernel::new(&p);
        let mut buf = Vec::new();
        let e = kernel.extremes(d.outcomes(), &mut buf);
        assert_eq!(e.s_star.to_bits(), s.s_star.to_bits());
        assert_eq!(e.b_star.to_bits(), s.b_star.to_bits());
        assert_eq!(e.s_n.to_bits(), s.s_n.to_bits());
    }

    fn dataset_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
        (1usize..200).prop_flat_map(|n| {
            (
                prop::collection::vec(0.001f64..0.999, n),
                prop::collection::vec(0u8..=1, n),
            )
        })
    }

    proptest! {
        #[test]
        fn process_invariants((preds, ys) in dataset_strategy()) {
            let d = build_dataset(&preds, &ys, None).unwrap();
            let p = cumulative_process(&d);
            let n = d.len() as f64;
            let sqrt_t = p.total_variance().sqrt();
            prop_assert_eq!(p.len(), d.len());
            prop_assert!((p.times()[d.len() - 1] - 1.0).abs() <= 1e-12);
            let mut prev = 0.0;
            for (i, &t) in p.times().iter().enumerate() {
                prop_assert!(t > prev);
                let pi = d.predictions()[i];
                let inc = pi * (1.0 - pi) / p.total_variance();
                prop_assert!(((t - prev) - inc).abs() <= 1e-12);
                prev = t;
            }
            for (s, c) in p.walk().iter().zip(p.raw_sums()) {
                let lhs = s * sqrt_t;
                let rhs = n * c;
                prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1e-300));
            }
            let st = walk_statistics(&p);
            prop_assert!(st.s_star >= st.s_n.abs());
            prop_assert!(st.b_star >= 0.0);
            prop_assert!(st.c_star >= st.c_n.abs());
            let scaled = n * st.c_star / sqrt_t;
            prop_assert!((st.s_star - scaled).abs() <= 1e-10 * st.s_star.max(1e-300));
            prop_assert!(((st.s_n * sqrt_t) - n * st.c_n).abs() <= 1e-10 * (n * st.c_n).abs().max(1e-300));
            prop_assert!(p.bridged()[d.len() - 1].abs() < 1e-12);
        }

        #[test]
        fn negated_errors_mirror_the_walk(preds in prop::collection::vec(0.01f64..0.99, 1..100), seed in any::<u64>()) {
            // Y -> 1 - Y together with π -> 1 - π negates every error term.
            let ys: Vec<u8> = (0..preds.len()).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
            let flipped_p: Vec<f64> = preds.iter().map(|p| 1.0 - p).collect();
            let flipped_y: Vec<u8> = ys.iter().map(|y| 1 - y).collect();
            let d = build_dataset(&preds, &ys, None).unwrap();
            let f = build_dataset(&flipped_p, &flipped_y, None).unwrap();
            prop_assume!(!d.tie_flag());
            // reverse order: compare using the terminal value and suprema only
            let a = walk_statistics(&cumulative_process(&d));
            let b = walk_statistics(&cumulative_process(&f));
            prop_assert!((a.s_n + b.s_n).abs() < 1e-9);
            prop_assert!((a.b_star - b.b_star).abs() < 1e-9);
        }

        #[test]
        fn negated_walk_keeps_maxima((preds, ys) in dataset_strategy()) {
            let d = build_dataset(&preds, &ys, None).unwrap();
            let p = cumulative_process(&d);
            let neg: Vec<f64> = p.walk().iter().map(|s| -s).collect();
            let a = extremes(p.walk(), p.times());
            let b = extremes(&neg, p.times());
            prop_assert_eq!(a.s_star, b.s_star);
            prop_assert_eq!(a.s_n, -b.s_n);
            prop_assert_eq!(a.b_star, b.b_star);
        }

        #[test]
        fn input_order_is_irrelevant_without_ties((preds, ys) in dataset_strategy(), rot in 0usize..200) {
            let d = build_dataset(&preds, &ys, None).unwrap();
            prop_assume!(!d.tie_flag());
            let k = rot % preds.len();
            let mut p2 = preds.clone();
            let mut y2 = ys.clone();
            p2.rotate_left(k);
            y2.rotate_left(k);
            let d2 = build_dataset(&p2, &y2, None).unwrap();
            prop_assert_eq!(&d, &d2);
            let (a, b) = (cumulative_process(&d), cumulative_process(&d2));
            prop_assert_eq!(a.walk(), b.walk());
        }
    }
}
