//! Closed-form statistics of lognormal laws and the law of the
//! loss-to-wealth fraction in the Black-Scholes market.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;

use crate::error::{Error, Result};
use crate::types::{Criterion, LognormalLaw, MarketParams, Portfolio, Validate};

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

// Acklam's rational approximation, relative error 1.15e-9.
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.38357751867269e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

fn acklam_lower(p: f64) -> f64 {
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Inverse of the standard normal distribution function.
///
/// Rational approximation followed by one Halley step against the
/// `erfc`-based distribution function. The lower half is computed directly
/// and the upper half by symmetry, so the correction always runs where the
/// distribution function is accurate.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            what: "p",
            value: p,
            domain: "(0, 1)",
        });
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

fn lower_quantile(p: f64) -> f64 {
    let x = acklam_lower(p);
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Drift and variance of the log of terminal wealth per unit of capital.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftVol {
    /// `(pi'(b - r 1) + r - |pi' Sigma|^2 / 2) T`
    pub a: f64,
    /// `|pi' Sigma|^2 T`
    pub s2: f64,
}

pub fn drift_vol(market: &MarketParams, portfolio: &Portfolio) -> Result<DriftVol> {
    if portfolio.dim() != market.dim() {
        return Err(Error::DimensionMismatch {
            what: "portfolio",
            expected: market.dim(),
            got: portfolio.dim(),
        });
    }
    Ok(drift_vol_unchecked(market, portfolio.as_slice()))
}

/// [`drift_vol`] on a raw weight slice of matching length.
pub(crate) fn drift_vol_unchecked(market: &MarketParams, pi: &[f64]) -> DriftVol {
    let d = market.dim();
    let mut excess = 0.0;
    for (w, b) in pi.iter().zip(market.drift.iter()) {
        excess += w * (b - market.rate);
    }
    // squared norm of the row vector pi' Sigma
    let mut norm2 = 0.0;
    for j in 0..d {
        let mut col = 0.0;
        for (i, w) in pi.iter().enumerate() {
            col += w * market.vol[(i, j)];
        }
        norm2 += col * col;
    }
    let t = market.horizon;
    DriftVol {
        a: (excess + market.rate - 0.5 * norm2) * t,
        s2: norm2 * t,
    }
}

/// Law of `X / (x0 W_T)` for an independent lognormal loss `X`.
pub fn fraction_law(
    loss: &LognormalLaw,
    market: &MarketParams,
    portfolio: &Portfolio,
    x0: f64,
) -> Result<LognormalLaw> {
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::Domain {
            what: "x0",
            value: x0,
            domain: "(0, inf)",
        });
    }
    let dv = drift_vol(market, portfolio)?;
    LognormalLaw::new(loss.m - x0.ln() - dv.a, loss.s2 + dv.s2)
}

/// Statistic of `log K`, `K ~ law`, whose sign decides acceptability
/// (acceptable iff `<= 0`).
///
/// * VaR: `m + s z_lambda`
/// * ARaR: `m + s phi(z_lambda) / (1 - lambda)`
/// * `L^gamma`: `m + gamma s^2 / 2`, the log of the `L^gamma` norm
///
/// The entropic criterion has no closed form here.
pub fn log_stat(law: &LognormalLaw, criterion: &Criterion) -> Result<f64> {
    criterion.check()?;
    Ok(law.m + unit_log_stat(law.s2, criterion)?)
}

/// `log_stat(LN(0, s2), criterion)`.
pub(crate) fn unit_log_stat(s2: f64, criterion: &Criterion) -> Result<f64> {
    let s = s2.sqrt();
    match *criterion {
        Criterion::VaR { lambda } => Ok(s * normal_quantile(lambda)?),
        Criterion::ARaR { lambda } => {
            let z = normal_quantile(lambda)?;
            Ok(s * normal_pdf(z) / (1.0 - lambda))
        }
        Criterion::LNorm { gamma } => Ok(0.5 * gamma * s2),
        Criterion::Entropic { .. } => Err(Error::UnsupportedAnalytic(*criterion)),
    }
}
