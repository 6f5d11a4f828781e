use rayon::prelude::*;

use super::estimators::{quantile_index, tail_count};
use super::{arbitrage_direction, arbitrage_result, minimize_over_portfolios, OptConfig};
use crate::error::{Error, Result};
use crate::lognormal::drift_vol_unchecked;
use crate::market::{simulate_loss, stream, GaussianStream, McConfig};
use crate::types::{
    Criterion, Diagnostic, LognormalLaw, MarketParams, SolveResult, Tolerances, Validate,
};

/// Acceptance statistic of `X - x0 W` and its derivative in `x0`; convex
/// and decreasing in `x0`. Positive means not acceptable.
trait CapitalStatistic {
    fn eval(&self, x0: f64) -> (f64, f64);
}

struct EsStat<'a> {
    loss: &'a [f64],
    wealth: &'a [f64],
    m: usize,
}

impl CapitalStatistic for EsStat<'_> {
    fn eval(&self, x0: f64) -> (f64, f64) {
        let mut pairs: Vec<(f64, f64)> = self
            .loss
            .iter()
            .zip(self.wealth)
            .map(|(x, w)| (x - x0 * w, *w))
            .collect();
        let n = pairs.len();
        if self.m < n {
            pairs.select_nth_unstable_by(n - self.m, |a, b| a.0.total_cmp(&b.0));
        }
        let tail = &pairs[n - self.m..];
        let m = self.m as f64;
        let value = tail.iter().map(|p| p.0).sum::<f64>() / m;
        let slope = -tail.iter().map(|p| p.1).sum::<f64>() / m;
        (value, slope)
    }
}

struct EntropicStat<'a> {
    loss: &'a [f64],
    wealth: &'a [f64],
    gamma: f64,
}

impl CapitalStatistic for EntropicStat<'_> {
    fn eval(&self, x0: f64) -> (f64, f64) {
        let g = self.gamma;
        let max = self
            .loss
            .iter()
            .zip(self.wealth)
            .map(|(x, w)| g * (x - x0 * w))
            .fold(f64::NEG_INFINITY, f64::max);
        let (sw, sww) = self
            .loss
            .par_iter()
            .zip(self.wealth.par_iter())
            .map(|(x, w)| {
                let e = (g * (x - x0 * w) - max).exp();
                (e, e * w)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let n = self.loss.len() as f64;
        ((max + (sw / n).ln()) / g, -sww / sw)
    }
}

/// Smallest `x0` in `[0, hi]` with a nonpositive statistic.
///
/// Keeps a bracket `(lo, hi]` with `f(lo) > 0 >= f(hi)`. Each round takes
/// a Newton step from `lo` (stays left of the root by convexity) and a
/// chord step (stays right of it); a round that fails to halve the bracket
/// adds a bisection.
fn solve_capital(stat: &dyn CapitalStatistic, hi: f64, tol: &Tolerances) -> Result<f64> {
    let (mut f_lo, mut d_lo) = stat.eval(0.0);
    if f_lo <= 0.0 {
        return Ok(0.0);
    }
    let (mut f_hi, _) = stat.eval(hi);
    if f_hi > 0.0 {
        return Err(Error::NonMonotone(format!(
            "statistic {f_hi} > 0 at the upper bracket end {hi}"
        )));
    }
    let mut lo = 0.0;
    let mut hi = hi;
    let mut evals = 2;
    let rtol = tol.bisection_rel;

    let update = |x: f64, lo: &mut f64, hi: &mut f64, f_lo: &mut f64, d_lo: &mut f64, f_hi: &mut f64| {
        let (fx, dx) = stat.eval(x);
        if fx > 0.0 {
            *lo = x;
            *f_lo = fx;
            *d_lo = dx;
        } else {
            *hi = x;
            *f_hi = fx;
        }
    };

    while evals < tol.bisection_max_iter && hi - lo > rtol * hi {
        let width = hi - lo;
        if d_lo < 0.0 {
            let x = lo - f_lo / d_lo;
            if x > lo && x < hi {
                update(x, &mut lo, &mut hi, &mut f_lo, &mut d_lo, &mut f_hi);
            } else {
                // Newton hit the accepted end: probe just left of it
                let x = hi * (1.0 - 0.5 * rtol);
                if x > lo {
                    update(x, &mut lo, &mut hi, &mut f_lo, &mut d_lo, &mut f_hi);
                }
            }
            evals += 1;
        }
        if f_hi < 0.0 && hi - lo > rtol * hi {
            let x = lo + f_lo * (hi - lo) / (f_lo - f_hi);
            if x > lo && x < hi {
                update(x, &mut lo, &mut hi, &mut f_lo, &mut d_lo, &mut f_hi);
                evals += 1;
            }
        }
        if hi - lo > 0.5 * width {
            let mid = 0.5 * (lo + hi);
            update(mid, &mut lo, &mut hi, &mut f_lo, &mut d_lo, &mut f_hi);
            evals += 1;
        }
    }
    Ok(hi)
}

/// Minimal `x0 >= 0` such that the empirical statistic of
/// `X_i - x0 W_i` is nonpositive, searched in `[0, max X / min W]`.
///
/// `ARaR` is read as Expected Shortfall; `LNorm` has no monetary form
/// here (see [`Criterion::marm_counterpart`]).
pub fn marm_inner(loss_samples: &[f64], wealth_unit_samples: &[f64], criterion: &Criterion) -> Result<f64> {
    marm_inner_with(loss_samples, wealth_unit_samples, criterion, &Tolerances::DEFAULT)
}

pub(crate) fn marm_inner_with(
    loss: &[f64],
    wealth: &[f64],
    criterion: &Criterion,
    tol: &Tolerances,
) -> Result<f64> {
    criterion.check()?;
    if loss.is_empty() || wealth.is_empty() {
        return Err(Error::EmptySamples);
    }
    if loss.len() != wealth.len() {
        return Err(Error::DimensionMismatch {
            what: "wealth samples",
            expected: loss.len(),
            got: wealth.len(),
        });
    }
    let min_w = wealth.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_w > 0.0) {
        return Err(Error::NonMonotone(format!(
            "wealth samples must be > 0, found {min_w}"
        )));
    }
    let max_x = loss.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max_x.is_finite() {
        return Err(Error::Input("loss samples must be finite".into()));
    }
    let hi = (max_x / min_w).max(0.0);
    let n = loss.len();
    match *criterion {
        Criterion::VaR { lambda } => {
            // q^-(lambda) of X - x0 W is <= 0 iff X_i / W_i <= x0 for at
            // least k samples, so the capital is the k-th smallest ratio
            let mut ratios: Vec<f64> = loss.iter().zip(wealth).map(|(x, w)| x / w).collect();
            let k = quantile_index(lambda, n);
            let (_, v, _) = ratios.select_nth_unstable_by(k - 1, f64::total_cmp);
            Ok(v.max(0.0))
        }
        Criterion::ARaR { lambda } => solve_capital(
            &EsStat {
                loss,
                wealth,
                m: tail_count(lambda, n),
            },
            hi,
            tol,
        ),
        Criterion::Entropic { gamma } => solve_capital(&EntropicStat { loss, wealth, gamma }, hi, tol),
        Criterion::LNorm { .. } => Err(Error::UnsupportedCriterion(*criterion)),
    }
}

/// Loss draws and the standard Gaussians driving wealth, fixed once so
/// every portfolio is evaluated on common random numbers.
#[derive(Debug, Clone)]
pub struct CrnSamples {
    pub loss: Vec<f64>,
    pub gauss: Vec<f64>,
    pub mc: McConfig,
}

impl CrnSamples {
    pub fn generate(loss: &LognormalLaw, mc: &McConfig) -> Result<Self> {
        Ok(Self {
            loss: simulate_loss(loss, mc)?,
            gauss: GaussianStream::new(mc.seed, stream::WEALTH).take(mc.n_paths),
            mc: *mc,
        })
    }

    /// Terminal wealth per unit of capital, monotone in the Gaussian draw.
    pub fn wealth(&self, market: &MarketParams, pi: &[f64]) -> Vec<f64> {
        let dv = drift_vol_unchecked(market, pi);
        let s = dv.s2.sqrt();
        self.gauss.par_iter().map(|z| (dv.a + s * z).exp()).collect()
    }
}

/// Monetary counterpart of [`super::marrm`]: minimal capital over constant
/// portfolios with the inner step on Monte Carlo samples.
pub fn marm(
    loss: &LognormalLaw,
    market: &MarketParams,
    criterion: &Criterion,
    mc: &McConfig,
    opt: &OptConfig,
) -> Result<SolveResult> {
    loss.check()?;
    let samples = CrnSamples::generate(loss, mc)?;
    marm_on_samples(&samples, market, criterion, opt)
}

pub fn marm_on_samples(
    samples: &CrnSamples,
    market: &MarketParams,
    criterion: &Criterion,
    opt: &OptConfig,
) -> Result<SolveResult> {
    market.check()?;
    criterion.check()?;
    if let Criterion::LNorm { .. } = criterion {
        return Err(Error::UnsupportedCriterion(*criterion));
    }
    let mut result = if let Some(dir) = arbitrage_direction(market, &Tolerances::DEFAULT) {
        arbitrage_result(dir)
    } else {
        let objective = |pi: &[f64]| {
            let w = samples.wealth(market, pi);
            match marm_inner(&samples.loss, &w, criterion) {
                Ok(c) => c.ln(),
                Err(_) => f64::INFINITY,
            }
        };
        minimize_over_portfolios(&objective, market.dim(), opt)?.into_result()
    };
    if let Criterion::Entropic { .. } = criterion {
        result.diagnostics.push(Diagnostic::EntropicDivergence {
            seed: samples.mc.seed,
            n_paths: samples.mc.n_paths,
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::estimators::{empirical_es, empirical_quantile};

    #[test]
    fn deterministic_samples() {
        let x = vec![3.0; 50];
        let w = vec![1.5; 50];
        for c in [
            Criterion::VaR { lambda: 0.3 },
            Criterion::VaR { lambda: 0.99 },
            Criterion::ARaR { lambda: 0.9 },
            Criterion::Entropic { gamma: 2.0 },
        ] {
            let v = marm_inner(&x, &w, &c).unwrap();
            assert!((v - 2.0).abs() <= 2.0 * 1e-10, "{c}: {v}");
        }
    }

    #[test]
    fn result_is_tight() {
        let x: Vec<f64> = (1..=200).map(|i| 1.0 + (i as f64 * 0.37).sin().abs() * 3.0).collect();
        let w: Vec<f64> = (1..=200).map(|i| 0.5 + (i as f64 * 0.11).cos().abs()).collect();
        let lambda = 0.9;
        for c in [Criterion::VaR { lambda }, Criterion::ARaR { lambda }] {
            let x0 = marm_inner(&x, &w, &c).unwrap();
            let y = |s: f64| -> Vec<f64> { x.iter().zip(&w).map(|(a, b)| a - s * b).collect() };
            let stat = |s: f64| match c {
                Criterion::VaR { .. } => empirical_quantile(&y(s), lambda).unwrap(),
                _ => empirical_es(&y(s), lambda).unwrap(),
            };
            assert!(stat(x0) <= 0.0);
            assert!(stat(x0 * (1.0 - 1e-8)) > 0.0, "{c}");
        }
    }

    #[test]
    fn entropic_accepts_nonpositive_positions() {
        let x = vec![1.0, 2.0, 0.5];
        let w = vec![1.0, 1.0, 1.0];
        let x0 = marm_inner(&x, &w, &Criterion::Entropic { gamma: 5.0 }).unwrap();
        // every X_i - x0 W_i <= 0 at x0 = 2, so 2 is acceptable
        assert!(x0 <= 2.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            marm_inner(&[], &[], &Criterion::VaR { lambda: 0.5 }),
            Err(Error::EmptySamples)
        ));
        assert!(marm_inner(&[1.0], &[1.0, 2.0], &Criterion::VaR { lambda: 0.5 }).is_err());
        assert!(matches!(
            marm_inner(&[1.0], &[0.0], &Criterion::VaR { lambda: 0.5 }),
            Err(Error::NonMonotone(_))
        ));
        assert!(matches!(
            marm_inner(&[1.0], &[1.0], &Criterion::LNorm { gamma: 1.0 }),
            Err(Error::UnsupportedCriterion(_))
        ));
    }
}
