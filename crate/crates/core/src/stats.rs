//! Sample summaries, Student-t distribution, and Welch's t-test.
//!
//! The t CDF is computed through the regularized incomplete beta function
//! (continued-fraction evaluation), accurate to well beyond four decimals for
//! |t| <= 10 and df <= 50. Quantiles are obtained by bisection on the CDF.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean, sample standard deviation, and 95% confidence interval of a sample.
///
/// The CI uses the Student-t quantile with `n - 1` degrees of freedom:
/// half-width `t(0.975, n-1) * std / sqrt(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator). Zero when n == 1.
    pub std: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl StatSummary {
    /// Summarize raw samples. Requires at least one sample; the CI is
    /// degenerate (lo == hi == mean) when the std is zero or n == 1.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::run("StatSummary requires at least one sample"));
        }
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std = if n >= 2 {
            let ss = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
            (ss / (n as f64 - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(Self::from_moments(mean, std, n))
    }

    /// Build a summary from published (mean, std, n) without raw samples.
    pub fn from_moments(mean: f64, std: f64, n: usize) -> Self {
        let half_width = if n >= 2 && std > 0.0 {
            student_t_ppf(0.975, (n - 1) as f64) * std / (n as f64).sqrt()
        } else {
            0.0
        };
        StatSummary {
            n,
            mean,
            std,
            ci_lo: mean - half_width,
            ci_hi: mean + half_width,
        }
    }
}

/// Result of a two-sample Welch t-test.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Welch's two-sample t-test from summary statistics.
///
/// Both samples need n >= 2. When both variances are zero the test degenerates:
/// equal means give p = 1, different means give p = 0.
pub fn welch_t(a: &StatSummary, b: &StatSummary) -> Result<WelchResult> {
    if a.n < 2 || b.n < 2 {
        return Err(Error::run("welch_t requires n >= 2 in both samples"));
    }
    let va = a.std * a.std / a.n as f64;
    let vb = b.std * b.std / b.n as f64;
    if va + vb == 0.0 {
        let equal = a.mean == b.mean;
        return Ok(WelchResult {
            t: 0.0,
            df: (a.n + b.n - 2) as f64,
            p: if equal { 1.0 } else { 0.0 },
        });
    }
    let t = (a.mean - b.mean) / (va + vb).sqrt();
    let df = (va + vb) * (va + vb)
        / (va * va / (a.n as f64 - 1.0) + vb * vb / (b.n as f64 - 1.0));
    Ok(WelchResult {
        t,
        df,
        p: student_t_two_sided_p(t, df),
    })
}

/// Paired t-test on per-unit differences (e.g. per-seed accuracy deltas).
/// Returns (t, df, two-sided p). Zero-variance differences degenerate the
/// same way as `welch_t`.
pub fn paired_t(diffs: &[f64]) -> Result<WelchResult> {
    if diffs.len() < 2 {
        return Err(Error::run("paired_t requires at least two differences"));
    }
    let s = StatSummary::from_samples(diffs)?;
    let df = (s.n - 1) as f64;
    if s.std == 0.0 {
        return Ok(WelchResult {
            t: 0.0,
            df,
            p: if s.mean == 0.0 { 1.0 } else { 0.0 },
        });
    }
    let t = s.mean / (s.std / (s.n as f64).sqrt());
    Ok(WelchResult {
        t,
        df,
        p: student_t_two_sided_p(t, df),
    })
}

/// Two-sided p-value for a t statistic: `P(|T| >= |t|)` under df degrees of
/// freedom. Computed directly as `I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    reg_inc_beta(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// CDF of the Student-t distribution.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let half_p = 0.5 * student_t_two_sided_p(t, df);
    if t >= 0.0 {
        1.0 - half_p
    } else {
        half_p
    }
}

/// Quantile (inverse CDF) of the Student-t distribution, by bisection.
pub fn student_t_ppf(p: f64, df: f64) -> f64 {
    assert!((0.0..1.0).contains(&p) && p > 0.0, "p must be in (0,1)");
    if (p - 0.5).abs() < 1e-15 {
        return 0.0;
    }
    // CDF is monotone; |t| < 1e6 covers any p representable here.
    let (mut lo, mut hi) = (-1e6, 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Natural log of the gamma function (Lanczos approximation, g = 7).
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta function I_x(a, b) via Lentz's continued
/// fraction.
fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + a * x.ln()
        + b * (1.0 - x).ln();
    // The continued fraction converges fastest for x < (a+1)/(a+b+2);
    // otherwise use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cont_frac(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cont_frac(b, a, 1.0 - x) / b
    }
}

fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
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
        // Even step.
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
        // Odd step.
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
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
