//! Limiting distributions used by the calibration tests.
//!
//! * supremum of `|W(t)|` for standard Brownian motion on `[0, 1]`,
//! * the same supremum conditional on the terminal value `W(1) = b`,
//! * the Kolmogorov distribution (supremum of `|B(t)|` for a Brownian bridge),
//! * the standard normal and chi-square survival functions.
//!
//! Every theta-type series has two representations: one that converges fast
//! for small arguments and one that converges fast for large arguments. The
//! public functions switch between them; both are exposed in [`series`] so
//! they can be checked against each other.

use serde::{Deserialize, Serialize};
use statrs::function::gamma;

use crate::error::{Error, Result};

/// Truncation policy for the series below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    /// Stop once a term drops below this fraction of the running sum.
    pub term_tolerance: f64,
    pub max_terms: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            term_tolerance: 1e-16,
            max_terms: 200,
        }
    }
}

/// Reference distribution for a critical value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// `sup |W(t)|`, the BM test.
    SupAbsBm,
    /// `sup |B(t)|`, the bridge component of the BB test.
    Kolmogorov,
}

/// Below this argument the CDFs are zero to double precision.
const DEGENERATE_BELOW: f64 = 0.05;
/// Switch point between the small-argument and large-argument forms of the
/// sup-|W| distribution.
const SUP_BM_CROSSOVER: f64 = 1.5;
/// Same for the Kolmogorov and conditional distributions.
const KOLMOGOROV_CROSSOVER: f64 = 1.0;
const CONDITIONAL_MAX_K: i64 = 50;

const PI: f64 = std::f64::consts::PI;
const PI2: f64 = PI * PI;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::NegativeArgument { name, value })
    }
}

#[inline]
fn converged(term: f64, sum: f64, cfg: &SeriesConfig) -> bool {
    term.abs() <= cfg.term_tolerance * sum.abs() || term.abs() < f64::MIN_POSITIVE
}

/// Raw series, without clamping or argument checks.
pub mod series {
    use super::*;

    /// `(4/π) Σ_{k≥0} (-1)^k/(2k+1) exp(-(2k+1)²π²/(8a²))`.
    pub fn sup_abs_bm_theta(a: f64, cfg: &SeriesConfig) -> f64 {
        if a <= 0.0 {
            return 0.0;
        }
        let c = -PI2 / (8.0 * a * a);
        let mut sum = 0.0;
        for k in 0..cfg.max_terms {
            let m = (2 * k + 1) as f64;
            let term = (c * m * m).exp() / m;
            let signed = if k % 2 == 0 { term } else { -term };
            sum += signed;
            if k > 0 && converged(term, sum, cfg) {
                break;
            }
        }
        4.0 / PI * sum
    }

    /// Upper tail by reflection: `4 Σ_{k≥0} (-1)^k Φ(-(2k+1)a)`.
    pub fn sup_abs_bm_reflection_sf(a: f64, cfg: &SeriesConfig) -> f64 {
        let mut sum = 0.0;
        for k in 0..cfg.max_terms {
            let term = std_normal_cdf(-((2 * k + 1) as f64) * a);
            let signed = if k % 2 == 0 { term } else { -term };
            sum += signed;
            if converged(term, sum, cfg) {
                break;
            }
        }
        4.0 * sum
    }

    /// Alternating form `1 - 2 Σ_{k≥1} (-1)^{k-1} exp(-2k²a²)` of the
    /// Kolmogorov CDF.
    pub fn kolmogorov_alternating(a: f64, cfg: &SeriesConfig) -> f64 {
        1.0 - kolmogorov_alternating_sf(a, cfg)
    }

    /// `2 Σ_{k≥1} (-1)^{k-1} exp(-2k²a²)`.
    pub fn kolmogorov_alternating_sf(a: f64, cfg: &SeriesConfig) -> f64 {
        let mut sum = 0.0;
        for k in 1..=cfg.max_terms {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * a * a).exp();
            let signed = if k % 2 == 1 { term } else { -term };
            sum += signed;
            if converged(term, sum, cfg) {
                break;
            }
        }
        2.0 * sum
    }

    /// Theta-transformed form `(√(2π)/a) Σ_{k≥1} exp(-(2k-1)²π²/(8a²))`.
    pub fn kolmogorov_theta(a: f64, cfg: &SeriesConfig) -> f64 {
        conditional_theta(a, 0.0, cfg)
    }

    /// Direct form `Σ_{k∈ℤ} (-1)^k exp(2abk - 2a²k²)` of the conditional
    /// CDF of `sup|W|` given `W(1) = b`, truncated at `|k| ≤ 50`.
    pub fn conditional_direct(a: f64, b: f64, cfg: &SeriesConfig) -> f64 {
        let mut sum = 1.0;
        let limit = CONDITIONAL_MAX_K.min(cfg.max_terms as i64);
        for k in 1..=limit {
            let kf = k as f64;
            let base = -2.0 * a * a * kf * kf;
            let up = (base + 2.0 * a * b * kf).exp();
            let down = (base - 2.0 * a * b * kf).exp();
            let term = up + down;
            sum += if k % 2 == 0 { term } else { -term };
            if converged(term, sum, cfg) {
                break;
            }
        }
        sum
    }

    /// Poisson-summation dual of [`conditional_direct`]:
    /// `(√(2π)/a) e^{b²/2} Σ_{m≥0} exp(-(2m+1)²π²/(8a²)) cos((2m+1)πb/(2a))`.
    /// At `b = 0` this is the theta form of the Kolmogorov CDF.
    pub fn conditional_theta(a: f64, b: f64, cfg: &SeriesConfig) -> f64 {
        if a <= 0.0 {
            return 0.0;
        }
        let c = -PI2 / (8.0 * a * a);
        let w = PI * b / (2.0 * a);
        let mut sum = 0.0;
        for m in 0..cfg.max_terms {
            let odd = (2 * m + 1) as f64;
            let decay = (c * odd * odd).exp();
            sum += decay * (w * odd).cos();
            if m > 0 && converged(decay, sum, cfg) {
                break;
            }
        }
        SQRT_2PI / a * (0.5 * b * b).exp() * sum
    }
}

/// `F(a) = P(sup_{0≤t≤1} |W(t)| < a)`.
pub fn sup_abs_bm_cdf(a: f64) -> Result<f64> {
    sup_abs_bm_cdf_with(a, &SeriesConfig::default())
}

pub fn sup_abs_bm_cdf_with(a: f64, cfg: &SeriesConfig) -> Result<f64> {
    let a = non_negative("a", a)?;
    Ok(if a < DEGENERATE_BELOW {
        0.0
    } else if a <= SUP_BM_CROSSOVER {
        series::sup_abs_bm_theta(a, cfg)
    } else {
        1.0 - series::sup_abs_bm_reflection_sf(a, cfg)
    }
    .clamp(0.0, 1.0))
}

/// `1 - F(a)`, accurate in the upper tail.
pub fn sup_abs_bm_sf(a: f64) -> Result<f64> {
    let a = non_negative("a", a)?;
    let cfg = SeriesConfig::default();
    Ok(if a < DEGENERATE_BELOW {
        1.0
    } else if a <= SUP_BM_CROSSOVER {
        1.0 - series::sup_abs_bm_theta(a, &cfg)
    } else {
        series::sup_abs_bm_reflection_sf(a, &cfg)
    }
    .clamp(0.0, 1.0))
}

/// `G(a) = P(sup_{0≤t≤1} |B(t)| < a)`, the Kolmogorov distribution.
pub fn kolmogorov_cdf(a: f64) -> Result<f64> {
    kolmogorov_cdf_with(a, &SeriesConfig::default())
}

pub fn kolmogorov_cdf_with(a: f64, cfg: &SeriesConfig) -> Result<f64> {
    let a = non_negative("a", a)?;
    Ok(if a < DEGENERATE_BELOW {
        0.0
    } else if a < KOLMOGOROV_CROSSOVER {
        series::kolmogorov_theta(a, cfg)
    } else {
        series::kolmogorov_alternating(a, cfg)
    }
    .clamp(0.0, 1.0))
}

/// `1 - G(a)`, accurate in the upper tail.
pub fn kolmogorov_sf(a: f64) -> Result<f64> {
    let a = non_negative("a", a)?;
    let cfg = SeriesConfig::default();
    Ok(if a < DEGENERATE_BELOW {
        1.0
    } else if a < KOLMOGOROV_CROSSOVER {
        1.0 - series::kolmogorov_theta(a, &cfg)
    } else {
        series::kolmogorov_alternating_sf(a, &cfg)
    }
    .clamp(0.0, 1.0))
}

/// `P(sup_{0≤t≤1} |W(t)| < a | W(1) = b)`. Zero whenever `a ≤ |b|`.
pub fn conditional_sup_cdf(a: f64, b: f64) -> Result<f64> {
    let a = non_negative("a", a)?;
    if a <= b.abs() || a < DEGENERATE_BELOW {
        return Ok(0.0);
    }
    let cfg = SeriesConfig::default();
    Ok(if a < KOLMOGOROV_CROSSOVER {
        series::conditional_theta(a, b, &cfg)
    } else {
        series::conditional_direct(a, b, &cfg)
    }
    .clamp(0.0, 1.0))
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse of [`std_normal_cdf`] by bisection.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::LevelOutOfRange(p));
    }
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if std_normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `ln(2Φ(-|z|))`, finite for every finite `z`.
pub(crate) fn ln_two_sided_normal_p(z: f64) -> f64 {
    let x = z.abs() / std::f64::consts::SQRT_2;
    let p = libm::erfc(x);
    if p > 1e-290 {
        return p.ln();
    }
    // erfc(x) ~ e^{-x²}/(x√π) (1 - 1/(2x²) + 3/(4x⁴))
    let x2 = x * x;
    -x2 - (x * PI.sqrt()).ln() + (1.0 - 0.5 / x2 + 0.75 / (x2 * x2)).ln()
}

/// `ln(1 - G(a))`, finite for every finite `a`.
pub(crate) fn ln_kolmogorov_sf(a: f64) -> f64 {
    if a < KOLMOGOROV_CROSSOVER {
        return kolmogorov_sf(a.max(0.0)).unwrap_or(1.0).ln();
    }
    // 2 e^{-2a²} Σ_{k≥1} (-1)^{k-1} e^{-2(k²-1)a²}
    let mut sum = 0.0;
    for k in 1..=SeriesConfig::default().max_terms {
        let kf = k as f64;
        let term = (-2.0 * (kf * kf - 1.0) * a * a).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    std::f64::consts::LN_2 - 2.0 * a * a + sum.ln()
}

/// Survival function of chi-square with 4 degrees of freedom.
pub fn chi_square4_sf(x: f64) -> Result<f64> {
    let x = non_negative("x", x)?;
    Ok(((-0.5 * x).exp() * (1.0 + 0.5 * x)).clamp(0.0, 1.0))
}

/// Survival function of chi-square with `df` degrees of freedom. Even `df`
/// uses the finite Poisson sum; odd `df` the regularized upper incomplete
/// gamma function.
pub fn chi_square_sf(x: f64, df: u32) -> Result<f64> {
    let x = non_negative("x", x)?;
    if df == 0 {
        return Err(Error::InvalidGroups("chi-square needs df >= 1".into()));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let half = 0.5 * x;
    let p = if df.is_multiple_of(2) {
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..df / 2 {
            term *= half / f64::from(j);
            sum += term;
        }
        (-half).exp() * sum
    } else {
        gamma::gamma_ur(0.5 * f64::from(df), half)
    };
    Ok(p.clamp(0.0, 1.0))
}

/// The `a` with `CDF(a) = level`, by bisection on `[1e-6, 10]`.
pub fn critical_value(reference: Reference, level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::LevelOutOfRange(level));
    }
    let cdf = |a: f64| match reference {
        Reference::SupAbsBm => sup_abs_bm_cdf(a),
        Reference::Kolmogorov => kolmogorov_cdf(a),
    };
    let (mut lo, mut hi) = (1e-6_f64, 10.0_f64);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid)? < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
