//! Capital requirements for lognormal losses hedged with constant-proportion
//! portfolios in a multivariate Black-Scholes market.
//!
//! Three measures are computed:
//! - [`rrm`]: return risk measure, bank account only, closed form;
//! - [`marrm`]: multi-asset return risk measure, closed-form inner value
//!   optimized over portfolios;
//! - [`marm`]: multi-asset monetary risk measure on Monte Carlo samples
//!   with common random numbers.
//!
//! [`finite`] evaluates return risk measures by enumeration on finite
//! probability spaces, [`garch`] calibrates and filters AR(1)-GARCH(1,1)
//! returns for one-day-ahead forecasts, and [`checks`] collects the
//! numerical property suite.

// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod error;
pub mod finite;
pub mod garch;
pub mod lognormal;
pub mod market;
pub mod solver;
pub mod types;

pub use error::{Error, Result};
pub use lognormal::{drift_vol, fraction_law, log_stat, normal_cdf, normal_pdf, normal_quantile, DriftVol};
pub use market::{simulate_loss, simulate_terminal_wealth, GaussianStream, McConfig};
pub use solver::{marm, marm_inner, marrm, marrm_inner, nelder_mead, rrm, CrnSamples, NmOutcome, OptConfig};
pub use types::{
    Criterion, Diagnostic, FinitePosition, FiniteSpace, GarchParams, LognormalLaw, MarketParams, Portfolio,
    SolveResult, Tolerances, Validate, Violation,
};
