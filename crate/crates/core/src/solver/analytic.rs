use super::{arbitrage_direction, arbitrage_result, minimize_over_portfolios, OptConfig};
use crate::error::{Error, Result};
use crate::lognormal::{drift_vol, drift_vol_unchecked, unit_log_stat};
use crate::types::{Criterion, LognormalLaw, MarketParams, Portfolio, SolveResult, Tolerances, Validate};

fn analytic_criterion(criterion: &Criterion) -> Result<()> {
    criterion.check()?;
    if let Criterion::Entropic { .. } = criterion {
        return Err(Error::UnsupportedAnalytic(*criterion));
    }
    Ok(())
}

/// Smallest capital in the bank account alone that makes `log(X / x)`
/// acceptable: `exp(mu - r T + t)` with `t` the unit log-statistic.
pub fn rrm(loss: &LognormalLaw, criterion: &Criterion, rate: f64, horizon: f64) -> Result<f64> {
    loss.check()?;
    analytic_criterion(criterion)?;
    Ok((loss.m - rate * horizon + unit_log_stat(loss.s2, criterion)?).exp())
}

/// `log x0 = mu - a(pi) + t(sigma^2 + s2(pi))`.
pub(crate) fn log_capital(
    loss: &LognormalLaw,
    market: &MarketParams,
    pi: &[f64],
    criterion: &Criterion,
) -> f64 {
    let dv = drift_vol_unchecked(market, pi);
    match unit_log_stat(loss.s2 + dv.s2, criterion) {
        Ok(t) => loss.m - dv.a + t,
        Err(_) => f64::NAN,
    }
}

/// Minimal capital for a fixed portfolio.
pub fn marrm_inner(
    loss: &LognormalLaw,
    market: &MarketParams,
    portfolio: &Portfolio,
    criterion: &Criterion,
) -> Result<f64> {
    loss.check()?;
    analytic_criterion(criterion)?;
    let dv = drift_vol(market, portfolio)?;
    Ok((loss.m - dv.a + unit_log_stat(loss.s2 + dv.s2, criterion)?).exp())
}

/// Minimal capital over constant portfolios.
///
/// A volatility matrix with a riskless direction of nonzero excess drift
/// yields capital `0` with an arbitrage diagnostic instead of a search.
pub fn marrm(
    loss: &LognormalLaw,
    market: &MarketParams,
    criterion: &Criterion,
    opt: &OptConfig,
) -> Result<SolveResult> {
    loss.check()?;
    market.check()?;
    analytic_criterion(criterion)?;
    if let Some(dir) = arbitrage_direction(market, &Tolerances::DEFAULT) {
        return Ok(arbitrage_result(dir));
    }
    let objective = |pi: &[f64]| log_capital(loss, market, pi, criterion);
    Ok(minimize_over_portfolios(&objective, market.dim(), opt)?.into_result())
}
