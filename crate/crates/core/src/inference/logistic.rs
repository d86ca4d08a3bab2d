//! Logistic regression by iteratively reweighted least squares, the logit
//! recalibration model `logit(E[Y]) = a + b·logit(π)`, and the
//! likelihood-ratio test of weak calibration (`a = 0`, `b = 1`).

use serde::{Deserialize, Serialize};

use crate::process::CalibrationDataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsOptions {
    pub max_iterations: usize,
    /// Converged when every score component is below this in absolute value.
    pub score_tolerance: f64,
    /// ...or when the relative deviance change drops below this.
    pub deviance_tolerance: f64,
    /// A coefficient beyond this magnitude is treated as separation.
    pub divergence_bound: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            score_tolerance: 1e-8,
            deviance_tolerance: 1e-12,
            divergence_bound: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    /// Inverse Fisher information at the estimate, row-major `p × p`.
    pub covariance: Option<Vec<f64>>,
    pub deviance: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl LogisticFit {
    pub fn standard_error(&self, j: usize) -> Option<f64> {
        let p = self.coefficients.len();
        self.covariance.as_ref().map(|c| c[j * p + j].sqrt())
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[inline]
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Binomial deviance for linear predictors `eta`.
pub fn deviance(eta: &[f64], y: &[u8]) -> f64 {
    let mut acc = 0.0;
    for (&e, &yi) in eta.iter().zip(y) {
        // -ln μ = softplus(-η), -ln(1-μ) = softplus(η)
        acc += if yi == 1 { softplus(-e) } else { softplus(e) };
    }
    2.0 * acc
}

/// In-place Cholesky solve of the symmetric positive-definite system
/// `a x = b`; returns `None` if `a` is not positive definite.
fn cholesky_solve(a: &[f64], b: &[f64], p: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    let solve = |rhs: &[f64]| {
        let mut z = rhs.to_vec();
        for i in 0..p {
            for k in 0..i {
                z[i] -= l[i * p + k] * z[k];
            }
            z[i] /= l[i * p + i];
        }
        for i in (0..p).rev() {
            for k in i + 1..p {
                z[i] -= l[k * p + i] * z[k];
            }
            z[i] /= l[i * p + i];
        }
        z
    };
    let x = solve(b);
    let mut inverse = vec![0.0; p * p];
    let mut unit = vec![0.0; p];
    for j in 0..p {
        unit.iter_mut().for_each(|u| *u = 0.0);
        unit[j] = 1.0;
        let col = solve(&unit);
        for i in 0..p {
            inverse[i * p + j] = col[i];
        }
    }
    Some((x, inverse))
}

fn linear_predictor(design: &[f64], p: usize, beta: &[f64], out: &mut [f64]) {
    for (row, eta) in design.chunks_exact(p).zip(out.iter_mut()) {
        *eta = row.iter().zip(beta).map(|(x, b)| x * b).sum();
    }
}

/// Maximum-likelihood logistic regression. `design` is row-major `n × p`.
///
/// Newton–Raphson (equivalently IRLS) with step halving whenever the
/// deviance increases. Samples without both outcomes, a singular
/// information matrix or a coefficient escaping `divergence_bound` end
/// the fit with `converged = false`.
pub fn fit_logistic(
    design: &[f64],
    p: usize,
    y: &[u8],
    start: Option<&[f64]>,
    opts: &IrlsOptions,
) -> LogisticFit {
    let n = y.len();
    assert_eq!(design.len(), n * p, "design must be n x p");
    let mut beta = start.map_or_else(|| vec![0.0; p], <[f64]>::to_vec);
    let mut eta = vec![0.0; n];
    linear_predictor(design, p, &beta, &mut eta);
    let mut dev = deviance(&eta, y);

    let events = y.iter().filter(|&&v| v == 1).count();
    if events == 0 || events == n {
        return LogisticFit {
            coefficients: beta,
            covariance: None,
            deviance: dev,
            converged: false,
            iterations: 0,
        };
    }

    let mut info = vec![0.0; p * p];
    let mut score = vec![0.0; p];
    let mut candidate = vec![0.0; p];
    let mut trial_eta = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    loop {
        info.iter_mut().for_each(|v| *v = 0.0);
        score.iter_mut().for_each(|v| *v = 0.0);
        for ((row, &e), &yi) in design.chunks_exact(p).zip(&eta).zip(y) {
            let mu = expit(e);
            let w = mu * (1.0 - mu);
            let r = f64::from(yi) - mu;
            for i in 0..p {
                score[i] += row[i] * r;
                for j in 0..=i {
                    info[i * p + j] += w * row[i] * row[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                info[j * p + i] = info[i * p + j];
            }
        }
        let Some((step, inverse)) = cholesky_solve(&info, &score, p) else {
            break;
        };
        // under separation the score vanishes while Newton steps stay large
        let settled = step
            .iter()
            .zip(&beta)
            .all(|(d, b)| d.abs() <= 1e-6 * (1.0 + b.abs()));
        if settled && score.iter().all(|s| s.abs() < opts.score_tolerance) {
            converged = true;
            return LogisticFit {
                coefficients: beta,
                covariance: Some(inverse),
                deviance: dev,
                converged,
                iterations,
            };
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let mut scale = 1.0;
        let mut new_dev = f64::INFINITY;
        for _ in 0..30 {
            for j in 0..p {
                candidate[j] = beta[j] + scale * step[j];
            }
            linear_predictor(design, p, &candidate, &mut trial_eta);
            new_dev = deviance(&trial_eta, y);
            if new_dev <= dev * (1.0 + 1e-14) {
                break;
            }
            scale *= 0.5;
        }
        let change = (dev - new_dev).abs() / (dev.abs() + 0.1);
        let small_step = step
            .iter()
            .zip(&beta)
            .all(|(d, b)| d.abs() <= 1e-3 * (1.0 + b.abs()));
        if new_dev <= dev * (1.0 + 1e-14) {
            beta.copy_from_slice(&candidate);
            std::mem::swap(&mut eta, &mut trial_eta);
            dev = new_dev;
        }
        if beta.iter().any(|b| b.abs() > opts.divergence_bound) {
            break;
        }
        if change < opts.deviance_tolerance && small_step {
            converged = true;
            // refresh the covariance at the final estimate
            let covariance = information_inverse(design, p, &eta);
            return LogisticFit {
                coefficients: beta,
                covariance,
                deviance: dev,
                converged,
                iterations,
            };
        }
    }

    LogisticFit {
        coefficients: beta,
        covariance: None,
        deviance: dev,
        converged,
        iterations,
    }
}

fn information_inverse(design: &[f64], p: usize, eta: &[f64]) -> Option<Vec<f64>> {
    let mut info = vec![0.0; p * p];
    for (row, &e) in design.chunks_exact(p).zip(eta) {
        let mu = expit(e);
        let w = mu * (1.0 - mu);
        for i in 0..p {
            for j in 0..p {
                info[i * p + j] += w * row[i] * row[j];
            }
        }
    }
    cholesky_solve(&info, &vec![0.0; p], p).map(|(_, inv)| inv)
}

/// Fit of `logit(E[Y]) = a + b·logit(π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecalibrationFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_se: Option<f64>,
    pub slope_se: Option<f64>,
    pub deviance: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub fn fit_logistic_recalibration(data: &CalibrationDataset) -> RecalibrationFit {
    let design: Vec<f64> = data
        .predictions()
        .iter()
        .flat_map(|&p| [1.0, logit(p)])
        .collect();
    let fit = fit_logistic(
        &design,
        2,
        data.outcomes(),
        Some(&[0.0, 1.0]),
        &IrlsOptions::default(),
    );
    RecalibrationFit {
        intercept: fit.coefficients[0],
        slope: fit.coefficients[1],
        intercept_se: fit.standard_error(0),
        slope_se: fit.standard_error(1),
        deviance: fit.deviance,
        converged: fit.converged,
        iterations: fit.iterations,
    }
}

/// Likelihood-ratio test of weak calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakCalibResult {
    pub intercept: f64,
    pub slope: f64,
    pub lr_statistic: f64,
    /// Absent when the fit did not converge.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_value: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// `-2 ln L(a=0, b=1)` for the given dataset.
pub fn null_deviance(data: &CalibrationDataset) -> f64 {
    let eta: Vec<f64> = data.predictions().iter().map(|&p| logit(p)).collect();
    deviance(&eta, data.outcomes())
}

pub fn weak_calibration_lr_test(data: &CalibrationDataset) -> WeakCalibResult {
    let fit = fit_logistic_recalibration(data);
    let lr_statistic = null_deviance(data) - fit.deviance;
    let p_value = fit
        .converged
        .then(|| (-0.5 * lr_statistic.max(0.0)).exp().clamp(0.0, 1.0));
    WeakCalibResult {
        intercept: fit.intercept,
        slope: fit.slope,
        lr_statistic,
        p_value,
        converged: fit.converged,
        iterations: fit.iterations,
    }
}
