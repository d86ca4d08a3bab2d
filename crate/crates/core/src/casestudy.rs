//! Synthetic two-model demonstration.
//!
//! A development population is drawn from a known logistic model of
//! 30-day mortality after myocardial infarction. The same covariates are
//! fitted once on the whole development sample and once on a small subset,
//! and both fits are validated on an independent holdout. The small-sample
//! fit is overfitted: it underestimates risk at the low end and
//! overestimates it at the high end.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{replicate_rng, stream_key};
use crate::inference::{expit, fit_logistic, IrlsOptions};
use crate::process::{build_dataset, CalibrationDataset};

const CASE_STREAM: u64 = 0x4341_5345; // "CASE"

/// Covariate names, intercept first.
pub const COVARIATES: [&str; 8] = [
    "intercept",
    "age_z",
    "female",
    "killip_2plus",
    "systolic_bp_z",
    "heart_rate_z",
    "previous_mi",
    "anterior",
];

/// Coefficients of the generating model, in [`COVARIATES`] order.
pub const TRUE_COEFFICIENTS: [f64; 8] = [-3.1, 0.85, 0.2, 1.1, -0.55, 0.45, 0.35, 0.4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyOptions {
    pub seed: u64,
    pub development_size: usize,
    pub small_size: usize,
    pub holdout_size: usize,
}

impl Default for CaseStudyOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            development_size: 20_000,
            small_size: 500,
            holdout_size: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub name: String,
    pub training_size: usize,
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Holdout predictions and outcomes.
    pub validation: CalibrationDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudy {
    pub options: CaseStudyOptions,
    pub models: Vec<FittedModel>,
}

struct Sample {
    design: Vec<f64>,
    outcomes: Vec<u8>,
}

fn draw_sample<R: Rng>(rng: &mut R, n: usize) -> Sample {
    let p = COVARIATES.len();
    let mut design = Vec::with_capacity(n * p);
    let mut outcomes = Vec::with_capacity(n);
    for _ in 0..n {
        let age: f64 = rng.sample(StandardNormal);
        let female = f64::from(u8::from(rng.random::<f64>() < 0.25));
        // Killip class and prior infarction are more common in the elderly
        let killip = f64::from(u8::from(rng.random::<f64>() < expit(-1.9 + 0.5 * age)));
        let sbp: f64 = rng.sample(StandardNormal);
        let hr: f64 = rng.sample(StandardNormal);
        let prior = f64::from(u8::from(rng.random::<f64>() < expit(-1.6 + 0.3 * age)));
        let anterior = f64::from(u8::from(rng.random::<f64>() < 0.38));
        let row = [1.0, age, female, killip, sbp, hr, prior, anterior];
        let eta: f64 = row.iter().zip(&TRUE_COEFFICIENTS).map(|(x, b)| x * b).sum();
        outcomes.push(u8::from(rng.random::<f64>() < expit(eta)));
        design.extend_from_slice(&row);
    }
    Sample { design, outcomes }
}

fn fit(name: &str, design: &[f64], outcomes: &[u8], holdout: &Sample) -> Result<FittedModel> {
    let p = COVARIATES.len();
    let f = fit_logistic(design, p, outcomes, None, &IrlsOptions::default());
    let preds: Vec<f64> = holdout
        .design
        .chunks_exact(p)
        .map(|row| expit(row.iter().zip(&f.coefficients).map(|(x, b)| x * b).sum()))
        .collect();
    // guard against predictions rounding to exactly 0 or 1
    let validation = build_dataset(&preds, &holdout.outcomes, Some(1e-12))?;
    Ok(FittedModel {
        name: name.to_string(),
        training_size: outcomes.len(),
        coefficients: f.coefficients,
        converged: f.converged,
        iterations: f.iterations,
        validation,
    })
}

/// Draws the populations and fits both models.
pub fn run_case_study(opts: &CaseStudyOptions) -> Result<CaseStudy> {
    if opts.small_size < 2 * COVARIATES.len() || opts.small_size > opts.development_size {
        return Err(Error::InvalidScenario(format!(
            "small split must hold between {} and {} observations, got {}",
            2 * COVARIATES.len(),
            opts.development_size,
            opts.small_size
        )));
    }
    if opts.holdout_size == 0 {
        return Err(Error::InvalidScenario("holdout must not be empty".into()));
    }
    let key = stream_key(&[CASE_STREAM]);
    let development = draw_sample(&mut replicate_rng(opts.seed, key, 0), opts.development_size);
    let holdout = draw_sample(&mut replicate_rng(opts.seed, key, 1), opts.holdout_size);

    let p = COVARIATES.len();
    let full = fit("full", &development.design, &development.outcomes, &holdout)?;
    let small = fit(
        "small",
        &development.design[..opts.small_size * p],
        &development.outcomes[..opts.small_size],
        &holdout,
    )?;
    Ok(CaseStudy {
        options: *opts,
        models: vec![full, small],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::fit_logistic_recalibration;

    fn quick(seed: u64) -> CaseStudy {
        run_case_study(&CaseStudyOptions {
            seed,
            development_size: 5_000,
            small_size: 500,
            holdout_size: 5_000,
        })
        .unwrap()
    }

    #[test]
    fn deterministic() {
        assert_eq!(quick(3), quick(3));
        assert_ne!(quick(3), quick(4));
    }

    #[test]
    fn small_model_is_overfitted_on_average() {
        let mut full = 0.0;
        let mut small = 0.0;
        for seed in 0..20 {
            let cs = quick(seed);
            assert!(cs.models.iter().all(|m| m.converged));
            full += fit_logistic_recalibration(&cs.models[0].validation).slope;
            small += fit_logistic_recalibration(&cs.models[1].validation).slope;
        }
        let (full, small) = (full / 20.0, small / 20.0);
        assert!((full - 1.0).abs() < 0.05, "{full}");
        assert!(small < full - 0.03, "{small} vs {full}");
    }

    #[test]
    fn rejects_bad_split() {
        let bad = CaseStudyOptions {
            small_size: 3,
            ..CaseStudyOptions::default()
        };
        assert!(run_case_study(&bad).is_err());
    }
}
