//! Oracles shared by the integration tests. Nothing here calls into the
//! library's distribution or walk code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn within(&self, target: f64, ses: f64) -> bool {
        (self.value - target).abs() <= ses * self.se
    }
}

/// Path shape simulated by [`sup_band_probability`].
#[derive(Debug, Clone, Copy)]
pub enum Path {
    /// Standard Brownian motion on `[0, 1]`.
    Motion,
    /// Brownian bridge pinned at `b` for `t = 1`.
    Bridge(f64),
}

/// `P(sup |X(t)| <= a)` on `[0, 1]`.
///
/// Paths are sampled on a grid of `steps` intervals. Given the grid values,
/// each interval is a Brownian bridge of length `dt`, whose probability of
/// touching a level `h` is `exp(-2 (h - x)(h - y) / dt)`. Each path is
/// weighted by its probability of staying inside the band, which removes
/// the bias of checking the grid points only.
pub fn sup_band_probability(path: Path, a: f64, steps: usize, paths: usize, seed: u64) -> Estimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = 1.0 / steps as f64;
    let sd = dt.sqrt();
    let mut w = vec![0.0; steps + 1];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..paths {
        for k in 1..=steps {
            let z: f64 = rng.sample(StandardNormal);
            w[k] = w[k - 1] + sd * z;
        }
        if let Path::Bridge(b) = path {
            let end = w[steps];
            for (k, v) in w.iter_mut().enumerate() {
                let t = k as f64 * dt;
                *v += t * (b - end);
            }
        }
        let mut weight = 1.0;
        for k in 0..steps {
            let (x, y) = (w[k], w[k + 1]);
            if x.abs() > a || y.abs() > a {
                weight = 0.0;
                break;
            }
            let up = (-2.0 * (a - x) * (a - y) / dt).exp();
            let down = (-2.0 * (a + x) * (a + y) / dt).exp();
            weight *= (1.0 - up - down).max(0.0);
        }
        sum += weight;
        sum_sq += weight * weight;
    }
    let m = paths as f64;
    let value = sum / m;
    let var = (sum_sq / m - value * value).max(0.0);
    Estimate {
        value,
        se: (var / (m - 1.0)).sqrt(),
    }
}

/// Walk statistics of one outcome vector, computed directly from their
/// definitions. Predictions must already be sorted ascending.
#[derive(Debug, Clone, Copy)]
pub struct DirectStats {
    pub s_star: f64,
    pub b_star: f64,
    pub s_n: f64,
}

pub fn direct_stats(pi: &[f64], y: &[u8]) -> DirectStats {
    let total: f64 = pi.iter().map(|p| p * (1.0 - p)).sum();
    let scale = total.sqrt();
    let mut partial = Vec::with_capacity(pi.len());
    let mut times = Vec::with_capacity(pi.len());
    let (mut s, mut v) = (0.0, 0.0);
    for (&p, &o) in pi.iter().zip(y) {
        s += f64::from(o) - p;
        v += p * (1.0 - p);
        partial.push(s / scale);
        times.push(v / total);
    }
    let s_n = *partial.last().unwrap();
    let s_star = partial.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let b_star = partial
        .iter()
        .zip(&times)
        .fold(0.0_f64, |m, (x, t)| m.max((x - t * s_n).abs()));
    DirectStats {
        s_star,
        b_star,
        s_n,
    }
}

/// Every outcome vector with its probability under `Y_i ~ Bernoulli(π_i)`.
pub fn enumerate_outcomes(pi: &[f64]) -> Vec<(Vec<u8>, f64)> {
    let n = pi.len();
    (0..1u32 << n)
        .map(|mask| {
            let y: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
            let prob = pi
                .iter()
                .zip(&y)
                .map(|(&p, &o)| if o == 1 { p } else { 1.0 - p })
                .product();
            (y, prob)
        })
        .collect()
}

/// Collapses `(value, probability)` pairs onto distinct support points.
pub fn support(mut points: Vec<(f64, f64)>, tol: f64) -> Vec<(f64, f64)> {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (x, p) in points {
        match out.last_mut() {
            Some(last) if (x - last.0).abs() <= tol => last.1 += p,
            _ => out.push((x, p)),
        }
    }
    out
}

/// Fraction of `sample` within `tol` of `x`.
pub fn frequency_at(sample: &[f64], x: f64, tol: f64) -> f64 {
    sample.iter().filter(|&&s| (s - x).abs() <= tol).count() as f64 / sample.len() as f64
}

/// Pearson correlation.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Binomial standard error of a proportion.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
