//! Empirical risk statistics on samples.
//!
//! Left quantile at level `lambda`: the order statistic with 1-based index
//! `ceil(lambda n)`. Expected Shortfall: mean of the largest
//! `floor((1 - lambda) n)` order statistics (at least one).

use crate::error::{Error, Result};

/// `lambda * n` rounded to the nearest integer when it is within
/// floating-point noise of one, so `0.95 * 1e6` counts as `950000`.
fn level_count(lambda: f64, n: usize) -> f64 {
    let x = lambda * n as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * (n as f64).max(1.0) {
        r
    } else {
        x
    }
}

/// 1-based index of the left quantile.
pub fn quantile_index(lambda: f64, n: usize) -> usize {
    (level_count(lambda, n).ceil() as usize).clamp(1, n)
}

/// Number of order statistics averaged by the Expected Shortfall.
pub fn tail_count(lambda: f64, n: usize) -> usize {
    let upper = n as f64 - level_count(lambda, n);
    (upper.floor() as usize).clamp(1, n)
}

fn check(samples: &[f64], lambda: f64) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain {
            what: "lambda",
            value: lambda,
            domain: "(0, 1)",
        });
    }
    Ok(())
}

pub fn empirical_quantile(samples: &[f64], lambda: f64) -> Result<f64> {
    check(samples, lambda)?;
    let k = quantile_index(lambda, samples.len());
    let mut buf = samples.to_vec();
    let (_, v, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*v)
}

pub fn empirical_es(samples: &[f64], lambda: f64) -> Result<f64> {
    check(samples, lambda)?;
    let mut buf = samples.to_vec();
    Ok(top_mean(&mut buf, tail_count(lambda, samples.len())))
}

/// Mean of the `m` largest entries; reorders `buf`.
pub(crate) fn top_mean(buf: &mut [f64], m: usize) -> f64 {
    let n = buf.len();
    if m < n {
        buf.select_nth_unstable_by(n - m, f64::total_cmp);
    }
    buf[n - m..].iter().sum::<f64>() / m as f64
}

/// `log(mean(exp(z_i)))`, stable for large entries.
pub fn log_mean_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = z.iter().map(|v| (v - max).exp()).sum();
    max + (s / z.len() as f64).ln()
}

/// Entropic risk `(1/gamma) log E[exp(gamma Y)]` of the empirical law.
pub fn empirical_entropic(samples: &[f64], gamma: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(gamma > 0.0) {
        return Err(Error::Domain {
            what: "gamma",
            value: gamma,
            domain: "(0, inf)",
        });
    }
    let z: Vec<f64> = samples.iter().map(|v| gamma * v).collect();
    Ok(log_mean_exp(&z) / gamma)
}
