//! AR(1)-GARCH(1,1) for daily log-returns:
//! `r_t = phi r_{t-1} + e_t`, `e_t = sigma_t Z_t`,
//! `sigma_t^2 = alpha0 + alpha1 e_{t-1}^2 + beta sigma_{t-1}^2`.
//!
//! Residuals exist from the second return on. The first residual gets the
//! unconditional variance, so `sigma_path[k]` is the volatility of the
//! residual of return `k + 1` (0-based) and has `n - 1` entries.

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::market::{stream, GaussianStream};
use crate::solver::{marrm, rrm, nelder_mead, OptConfig};
use crate::types::{Criterion, GarchParams, LognormalLaw, MarketParams, Validate};

#[derive(Debug, Clone, PartialEq)]
pub struct GarchFit {
    pub params: GarchParams,
    pub loglik: f64,
    pub sigma_path: Vec<f64>,
    pub converged: bool,
}

fn residuals(phi: f64, returns: &[f64]) -> impl Iterator<Item = f64> + '_ {
    returns.windows(2).map(move |w| w[1] - phi * w[0])
}

/// Gaussian log-likelihood of the residuals and their conditional
/// volatilities.
pub fn garch_loglik(params: &GarchParams, returns: &[f64]) -> Result<(f64, Vec<f64>)> {
    params.check()?;
    if returns.len() < 3 {
        return Err(Error::Input(format!("need at least 3 returns, got {}", returns.len())));
    }
    Ok(loglik_unchecked(params, returns))
}

fn loglik_unchecked(p: &GarchParams, returns: &[f64]) -> (f64, Vec<f64>) {
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let mut var = p.unconditional_variance();
    let mut ll = 0.0;
    let mut path = Vec::with_capacity(returns.len() - 1);
    for e in residuals(p.phi, returns) {
        ll -= 0.5 * (ln2pi + var.ln() + e * e / var);
        path.push(var.sqrt());
        var = p.alpha0 + p.alpha1 * e * e + p.beta * var;
    }
    (ll, path)
}

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Unconstrained coordinates `(phi, log(alpha0 / v), logit(alpha1 + beta),
/// logit(alpha1 / (alpha1 + beta)))`, with `v` the sample variance so that
/// typical values stay within a few units of zero.
struct Transform {
    scale: f64,
}

impl Transform {
    const EPS: f64 = 1e-9;

    fn to_free(&self, p: &GarchParams) -> [f64; 4] {
        let persistence = (p.alpha1 + p.beta).clamp(Self::EPS, 1.0 - Self::EPS);
        let share = (p.alpha1 / (p.alpha1 + p.beta).max(Self::EPS)).clamp(Self::EPS, 1.0 - Self::EPS);
        [p.phi, (p.alpha0 / self.scale).ln(), logit(persistence), logit(share)]
    }

    fn to_params(&self, u: &[f64]) -> GarchParams {
        let persistence = logistic(u[2]);
        let share = logistic(u[3]);
        GarchParams {
            phi: u[0],
            alpha0: self.scale * u[1].exp(),
            alpha1: persistence * share,
            beta: persistence * (1.0 - share),
        }
    }
}

/// Pseudo-maximum-likelihood fit by Nelder-Mead in unconstrained
/// coordinates. `opt.pi_bounds` bounds the free coordinates; a fit that
/// stops on the iteration cap is returned with `converged = false`.
pub fn garch_fit(returns: &[f64], init: &GarchParams, opt: &OptConfig) -> Result<GarchFit> {
    init.check()?;
    if returns.len() < 100 {
        return Err(Error::Input(format!("need at least 100 returns, got {}", returns.len())));
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::Input("returns have zero variance".into()));
    }
    let tr = Transform { scale: var };
    let objective = |u: &[f64]| {
        let p = tr.to_params(u);
        if !(p.alpha1 + p.beta < 1.0) || !(p.alpha0 > 0.0) {
            return f64::INFINITY;
        }
        -loglik_unchecked(&p, returns).0
    };
    let out = nelder_mead(&objective, &tr.to_free(init), opt);
    let params = tr.to_params(&out.argmin);
    let (loglik, sigma_path) = garch_loglik(&params, returns)?;
    Ok(GarchFit {
        params,
        loglik,
        sigma_path,
        converged: out.converged,
    })
}

/// `LN((1 + phi) log y_prev - phi log y_prev2, sigma_next^2)`.
pub fn one_step_law(fit: &GarchFit, y_prev: f64, y_prev2: f64, sigma_next: f64) -> Result<LognormalLaw> {
    for (what, v) in [("y_prev", y_prev), ("y_prev2", y_prev2), ("sigma_next", sigma_next)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain {
                what,
                value: v,
                domain: "(0, inf)",
            });
        }
    }
    let phi = fit.params.phi;
    // same mean, exact when the two prices agree
    let (l1, l2) = (y_prev.ln(), y_prev2.ln());
    LognormalLaw::new(l1 + phi * (l1 - l2), sigma_next * sigma_next)
}

/// `n` returns started at `r_0 = 0` with the unconditional variance.
pub fn garch_simulate(params: &GarchParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    params.check()?;
    let z = GaussianStream::new(seed, stream::GARCH).take(n);
    let mut var = params.unconditional_variance();
    let mut prev = 0.0;
    Ok(z.into_iter()
        .map(|zt| {
            let e = var.sqrt() * zt;
            let r = params.phi * prev + e;
            var = params.alpha0 + params.alpha1 * e * e + params.beta * var;
            prev = r;
            r
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRow {
    pub date: NaiveDate,
    /// Realized price on the forecast day.
    pub index: f64,
    pub rrm: f64,
    pub marrm: f64,
    pub pi: Vec<f64>,
}

impl ForecastRow {
    pub fn rrm_vs_index(&self) -> f64 {
        (self.rrm - self.index) / self.index
    }

    pub fn marrm_vs_index(&self) -> f64 {
        (self.marrm - self.index) / self.index
    }

    pub fn rrm_vs_marrm(&self) -> f64 {
        (self.rrm - self.marrm) / self.marrm
    }
}

/// Consecutive observations further apart than [`MAX_CALENDAR_GAP`] days.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DateGap {
    pub from: NaiveDate,
    pub to: NaiveDate,
}

/// Longest spacing in calendar days not reported as a gap (a long weekend).
pub const MAX_CALENDAR_GAP: i64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastTable {
    pub rows: Vec<ForecastRow>,
    pub gaps: Vec<DateGap>,
    /// Volatility used on the first forecast day.
    pub initial_sigma: f64,
}

/// Where forecasting starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastWindow {
    /// Index into the price series of the first forecast day; at least 3.
    pub start: usize,
    /// Replaces the filtered volatility of the first forecast day.
    pub initial_sigma: Option<f64>,
}

/// One-day-ahead capital requirements for holding the index.
///
/// The volatility is filtered through the whole observed history with
/// realized residuals; the law of the price on day `t` uses prices up to
/// `t - 1` only.
pub fn rolling_forecast(
    prices: &[PricePoint],
    window: ForecastWindow,
    fit: &GarchFit,
    market: &MarketParams,
    criterion: &Criterion,
    opt: &OptConfig,
) -> Result<ForecastTable> {
    if prices.len() < 3 {
        return Err(Error::Input(format!("need at least 3 prices, got {}", prices.len())));
    }
    if window.start < 3 || window.start >= prices.len() {
        return Err(Error::Input(format!(
            "forecast start must lie in 3..{}, got {}",
            prices.len(),
            window.start
        )));
    }
    if let Some(w) = prices.windows(2).find(|w| w[1].date <= w[0].date) {
        return Err(Error::Input(format!("dates not increasing at {}", w[1].date)));
    }
    if let Some(p) = prices.iter().find(|p| !(p.price > 0.0 && p.price.is_finite())) {
        return Err(Error::Input(format!("nonpositive price on {}", p.date)));
    }
    let p = fit.params;
    let logp: Vec<f64> = prices.iter().map(|x| x.price.ln()).collect();
    let returns: Vec<f64> = logp.windows(2).map(|w| w[1] - w[0]).collect();

    // variance of the residual of the return ending on day t, for t = 2..
    let mut var = p.unconditional_variance();
    for t in 2..window.start {
        let e = returns[t - 1] - p.phi * returns[t - 2];
        var = p.alpha0 + p.alpha1 * e * e + p.beta * var;
    }
    if let Some(s) = window.initial_sigma {
        if !(s > 0.0) {
            return Err(Error::Domain {
                what: "initial_sigma",
                value: s,
                domain: "(0, inf)",
            });
        }
        var = s * s;
    }
    let initial_sigma = var.sqrt();

    let mut rows = Vec::with_capacity(prices.len() - window.start);
    for t in window.start..prices.len() {
        let law = one_step_law(fit, prices[t - 1].price, prices[t - 2].price, var.sqrt())?;
        let r = rrm(&law, criterion, market.rate, market.horizon)?;
        let m = marrm(&law, market, criterion, opt)?;
        rows.push(ForecastRow {
            date: prices[t].date,
            index: prices[t].price,
            rrm: r,
            marrm: m.capital,
            pi: m.portfolio.as_slice().to_vec(),
        });
        let e = returns[t - 1] - p.phi * returns[t - 2];
        var = p.alpha0 + p.alpha1 * e * e + p.beta * var;
    }

    let gaps = prices
        .windows(2)
        .filter(|w| (w[1].date - w[0].date).num_days() > MAX_CALENDAR_GAP)
        .map(|w| DateGap {
            from: w[0].date,
            to: w[1].date,
        })
        .collect();
    Ok(ForecastTable {
        rows,
        gaps,
        initial_sigma,
    })
}
