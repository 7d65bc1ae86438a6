//! Student-t confidence intervals over replications.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub mean: f64,
    pub half_width: f64,
    pub level: f64,
    pub n_samples: usize,
}

impl ConfidenceInterval {
    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// `mean ± t_{(1+level)/2, n-1} · sd / √n`, with the sample standard deviation.
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<ConfidenceInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("confidence level must be in (0, 1), got {level}")));
    }
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples(n));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    let sd = libm::sqrt(ss / (n - 1) as f64);
    let half_width = if sd == 0.0 {
        0.0
    } else {
        student_t_quantile((1.0 + level) / 2.0, (n - 1) as f64) * sd / libm::sqrt(n as f64)
    };
    Ok(ConfidenceInterval { mean, half_width, level, n_samples: n })
}

/// CDF of Student's t distribution with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    let tail = 0.5 * regularized_beta(0.5 * df, 0.5, x);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Inverse of [`student_t_cdf`] for `p` in (0, 1).
pub fn student_t_quantile(p: f64, df: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0 && df > 0.0);
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        return -student_t_quantile(1.0 - p, df);
    }
    let mut hi = 1.0;
    while student_t_cdf(hi, df) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if student_t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Regularized incomplete beta function `I_x(a, b)`.
fn regularized_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

// Lentz's method.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
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
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_width() {
        let ci = confidence_interval(&[5.0, 5.0, 5.0], 0.95).unwrap();
        assert_eq!((ci.mean, ci.half_width, ci.n_samples), (5.0, 0.0, 3));
    }

    #[test]
    fn one_to_ten() {
        let xs: alloc::vec::Vec<f64> = (1..=10).map(f64::from).collect();
        let ci = confidence_interval(&xs, 0.95).unwrap();
        assert_eq!(ci.mean, 5.5);
        // t_{0.975,9} = 2.2622, sd = 3.02765
        assert!((ci.half_width - 2.166).abs() < 1e-3, "{}", ci.half_width);
    }

    #[test]
    fn single_sample_is_rejected() {
        assert_eq!(confidence_interval(&[7.0], 0.95).unwrap_err(), Error::InsufficientSamples(1));
        assert!(confidence_interval(&[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn known_quantiles() {
        // classic table values
        for (df, q) in [(1.0, 12.7062), (2.0, 4.3027), (9.0, 2.2622), (30.0, 2.0423)] {
            assert!((student_t_quantile(0.975, df) - q).abs() < 1e-4, "df={df}");
        }
        assert!((student_t_cdf(0.0, 5.0) - 0.5).abs() < 1e-15);
    }
}
