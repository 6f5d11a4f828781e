//! Minimal-capital solvers: the return risk measure with the bank account
//! as the only eligible asset, the multi-asset return risk measure with a
//! closed-form inner step, and the multi-asset monetary risk measure with
//! a Monte Carlo inner step. Both multi-asset solvers optimize the constant
//! portfolio with multi-start Nelder-Mead.

mod analytic;
pub mod estimators;
mod monetary;
mod nelder_mead;

pub use analytic::{marrm, marrm_inner, rrm};
pub use monetary::{marm, marm_inner, marm_on_samples, CrnSamples};
pub use nelder_mead::{nelder_mead, NmOutcome};

use nalgebra::SVD;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{Diagnostic, MarketParams, Portfolio, SolveResult, Tolerances};

#[derive(Debug, Clone, PartialEq)]
pub struct OptConfig {
    pub max_iter: usize,
    pub x_tol: f64,
    pub f_tol: f64,
    /// Nelder-Mead runs per start point (first run included).
    pub restarts: usize,
    /// Half-width of the box `[-b, b]^d` searched over.
    pub pi_bounds: f64,
    /// Start points in addition to the origin.
    pub start_grid: Vec<Vec<f64>>,
    /// Initial simplex edge, relative to `max(1, |x_i|)`.
    pub initial_step: f64,
}

impl OptConfig {
    /// Defaults for a `d`-stock market: start points at radius one along
    /// every axis and along the all-ones and alternating-sign diagonals.
    pub fn for_dim(d: usize) -> Self {
        Self {
            max_iter: 2000,
            x_tol: 1e-8,
            f_tol: 1e-10,
            restarts: 2,
            pi_bounds: 10.0,
            start_grid: radius_one_grid(d),
            initial_step: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_tol > 0.0 && self.f_tol > 0.0) {
            return Err(Error::Input("x_tol and f_tol must be > 0".into()));
        }
        if self.restarts < 1 {
            return Err(Error::Input("restarts must be >= 1".into()));
        }
        if !(self.pi_bounds > 0.0) || !(self.initial_step > 0.0) {
            return Err(Error::Input("pi_bounds and initial_step must be > 0".into()));
        }
        Ok(())
    }

    /// Origin followed by the configured grid.
    pub(crate) fn starts(&self, d: usize) -> Result<Vec<Vec<f64>>> {
        let mut out = vec![vec![0.0; d]];
        for s in &self.start_grid {
            if s.len() != d {
                return Err(Error::DimensionMismatch {
                    what: "start point",
                    expected: d,
                    got: s.len(),
                });
            }
            out.push(s.clone());
        }
        Ok(out)
    }
}

impl Default for OptConfig {
    fn default() -> Self {
        Self::for_dim(2)
    }
}

/// `+-e_i` for every axis plus `+-(1,..,1)/sqrt(d)` and the alternating
/// diagonal `+-(1,-1,1,..)/sqrt(d)`; eight points for `d = 2`.
pub fn radius_one_grid(d: usize) -> Vec<Vec<f64>> {
    let mut grid = Vec::new();
    for i in 0..d {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; d];
            v[i] = sign;
            grid.push(v);
        }
    }
    if d >= 2 {
        let c = 1.0 / (d as f64).sqrt();
        let ones = vec![c; d];
        let alt: Vec<f64> = (0..d).map(|i| if i % 2 == 0 { c } else { -c }).collect();
        for v in [ones, alt] {
            grid.push(v.clone());
            grid.push(v.iter().map(|x| -x).collect());
        }
    }
    grid
}

/// A riskless direction with nonzero excess drift, oriented so that the
/// excess drift is positive, if the volatility matrix has one.
pub fn arbitrage_direction(market: &MarketParams, tol: &Tolerances) -> Option<Vec<f64>> {
    let excess = market.excess_drift();
    let svd = SVD::new(market.vol.clone(), true, false);
    let u = svd.u.as_ref()?;
    let smax = svd.singular_values.max();
    let cutoff = tol.singular_rel * smax.max(1.0);
    let mut dir = nalgebra::DVector::zeros(market.dim());
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s <= cutoff {
            let uk = u.column(k);
            dir += uk * uk.dot(&excess);
        }
    }
    let norm = dir.norm();
    if norm <= 1e-12 * excess.norm().max(1.0) {
        return None;
    }
    Some(dir.iter().map(|v| v / norm).collect())
}

pub(crate) struct Optimum {
    pub portfolio: Portfolio,
    pub log_capital: f64,
    pub evals: usize,
    pub converged: bool,
    pub restarts_used: usize,
    pub diagnostics: Vec<Diagnostic>,
}

impl Optimum {
    pub fn into_result(self) -> SolveResult {
        SolveResult {
            capital: self.log_capital.exp(),
            portfolio: self.portfolio,
            objective_evals: self.evals,
            converged: self.converged,
            restarts_used: self.restarts_used,
            diagnostics: self.diagnostics,
        }
    }
}

/// Multi-start minimization of a log-capital objective over portfolios.
pub(crate) fn minimize_over_portfolios<F>(objective: &F, d: usize, opt: &OptConfig) -> Result<Optimum>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    opt.validate()?;
    let starts = opt.starts(d)?;
    let outcomes: Vec<NmOutcome> = starts
        .par_iter()
        .map(|s| nelder_mead(objective, s, opt))
        .collect();
    let evals = outcomes.iter().map(|o| o.evals).sum();
    let restarts = outcomes.iter().map(|o| o.restarts_used).sum();
    let best = outcomes
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.min.total_cmp(&b.min).then(i.cmp(j)))
        .map(|(_, o)| o)
        .expect("origin is always a start point");

    let mut diags = Vec::new();
    if !best.converged {
        diags.push(Diagnostic::NotConverged {
            iterations: best.iterations,
        });
    }
    if best
        .argmin
        .iter()
        .any(|w| w.abs() >= opt.pi_bounds * (1.0 - 1e-6))
    {
        diags.push(Diagnostic::BoxBoundary {
            half_width: opt.pi_bounds,
        });
    }
    Ok(Optimum {
        converged: best.converged,
        portfolio: Portfolio::new(best.argmin)?,
        log_capital: best.min,
        evals,
        restarts_used: restarts,
        diagnostics: diags,
    })
}

pub(crate) fn arbitrage_result(direction: Vec<f64>) -> SolveResult {
    SolveResult {
        capital: 0.0,
        portfolio: Portfolio {
            weights: nalgebra::DVector::from_vec(direction.clone()),
        },
        objective_evals: 0,
        converged: true,
        restarts_used: 0,
        diagnostics: vec![Diagnostic::AcceptabilityArbitrage { direction }],
    }
}
