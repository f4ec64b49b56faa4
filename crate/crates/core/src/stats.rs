//! Correlation, significance and dispersion statistics for reports.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("correlation undefined for a constant vector")]
    ConstantInput,
    #[error("non-finite input")]
    NonFinite,
    #[error("correlation coefficient {0} outside [-1, 1]")]
    InvalidR(f64),
    #[error("degrees of freedom must be at least 1")]
    InvalidDof,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample Pearson correlation coefficient.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFew {
            needed: 3,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    let r = sxy / (sxx * syy).sqrt();
    // Exactly linear data can land a few ulps short of ±1.
    if 1.0 - r.abs() <= 8.0 * f64::EPSILON {
        return Ok(r.signum());
    }
    Ok(r.clamp(-1.0, 1.0))
}

/// Test statistic for a correlation coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TStatistic {
    Finite(f64),
    /// `|r| = 1`: the statistic is infinite and the p-value is 0.
    Saturated,
}

/// `t = r · sqrt((n − 2) / (1 − r²))`.
pub fn t_statistic(r: f64, n: usize) -> Result<TStatistic, StatsError> {
    if n < 3 {
        return Err(StatsError::TooFew { needed: 3, got: n });
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(StatsError::InvalidR(r));
    }
    if r.abs() == 1.0 {
        return Ok(TStatistic::Saturated);
    }
    Ok(TStatistic::Finite(
        r * ((n as f64 - 2.0) / (1.0 - r * r)).sqrt(),
    ))
}

/// Two-sided p-value `2 · (1 − F(|t|))` of Student's t with `dof` degrees of
/// freedom, via `I_{dof/(dof+t²)}(dof/2, 1/2)`.
pub fn p_value_two_sided(t: f64, dof: u64) -> Result<f64, StatsError> {
    if dof == 0 {
        return Err(StatsError::InvalidDof);
    }
    if t.is_nan() {
        return Err(StatsError::NonFinite);
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let v = dof as f64;
    let x = v / (v + t * t);
    Ok(regularized_incomplete_beta(x, v / 2.0, 0.5).clamp(0.0, 1.0))
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta, modified Lentz method.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` for `a, b > 0`, `x ∈ [0, 1]`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // The fraction converges fast below the mean; use symmetry above it.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub n: usize,
    /// `None` when the correlation is perfect and the statistic is infinite.
    pub t: Option<f64>,
    pub p_two_sided: f64,
}

/// Pearson r with its t statistic and two-sided p-value.
pub fn correlate(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    let r = pearson_r(x, y)?;
    let n = x.len();
    let (t, p) = match t_statistic(r, n)? {
        TStatistic::Finite(t) => (Some(t), p_value_two_sided(t, n as u64 - 2)?),
        TStatistic::Saturated => (None, 0.0),
    };
    Ok(CorrelationResult {
        r,
        n,
        t,
        p_two_sided: p,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionResult {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    /// `std / |mean|`; `None` when the mean is zero.
    pub coefficient_of_variation: Option<f64>,
}

pub fn dispersion(values: &[f64]) -> Result<DispersionResult, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFew {
            needed: 2,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    let std = (ss / (values.len() - 1) as f64).sqrt();
    Ok(DispersionResult {
        mean: m,
        std,
        coefficient_of_variation: (m != 0.0).then(|| std / m.abs()),
    })
}
