//! Domain values shared by every module.
//!
//! All types are plain immutable values (`Send + Sync`). Constructors named
//! `new` reject invalid input; [`Validate::violations`] reports every broken
//! invariant of a value built by other means.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A single violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl Violation {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self {
            field,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

pub trait Validate {
    /// Every violated invariant, empty when the value is valid.
    fn violations(&self) -> Vec<Violation>;

    fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    fn check(&self) -> Result<()> {
        self.validate().map_err(Error::Invalid)
    }

    fn checked(self) -> Result<Self>
    where
        Self: Sized,
    {
        match self.validate() {
            Ok(()) => Ok(self),
            Err(v) => Err(Error::Invalid(v)),
        }
    }
}

/// Numerical tolerances used across the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of the atom probabilities' sum from one.
    pub probability_sum: f64,
    /// Relative bracket width at which the capital bisection stops.
    pub bisection_rel: f64,
    pub bisection_max_iter: usize,
    /// Log-variance below which a portfolio is treated as riskless.
    pub degenerate_s2: f64,
    /// Relative singular value below which a volatility direction is null.
    pub singular_rel: f64,
    /// Discretization step for segments of unit-price payoffs.
    pub segment_resolution: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        probability_sum: 1e-12,
        bisection_rel: 1e-10,
        bisection_max_iter: 200,
        degenerate_s2: 1e-14,
        singular_rel: 1e-12,
        segment_resolution: 1e-3,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// `LN(m, s2)`: the law of `exp(m + sqrt(s2) * N(0,1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalLaw {
    /// Mean of the log.
    pub m: f64,
    /// Variance of the log.
    pub s2: f64,
}

impl LognormalLaw {
    pub fn new(m: f64, s2: f64) -> Result<Self> {
        Self { m, s2 }.checked()
    }

    /// Law from the mean and standard deviation of the log.
    pub fn from_mean_sd(m: f64, sd: f64) -> Result<Self> {
        Self::new(m, sd * sd)
    }

    pub fn sd(&self) -> f64 {
        self.s2.sqrt()
    }

    /// Law of `c * K` for `K ~ self`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain {
                what: "scale",
                value: c,
                domain: "(0, inf)",
            });
        }
        Self::new(self.m + c.ln(), self.s2)
    }

    /// Law of `K^alpha` for `K ~ self`.
    pub fn powered(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha * self.m, alpha * alpha * self.s2)
    }
}

impl Validate for LognormalLaw {
    fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if !self.m.is_finite() {
            v.push(Violation::new("m", format!("must be finite, got {}", self.m)));
        }
        if !(self.s2 >= 0.0 && self.s2.is_finite()) {
            v.push(Violation::new("s2", format!("must be finite and >= 0, got {}", self.s2)));
        }
        v
    }
}

/// Multivariate Black-Scholes market with a bank account and `d` stocks.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketParams {
    /// Horizon in years.
    pub horizon: f64,
    /// Riskless rate per year.
    pub rate: f64,
    /// Stock drifts `b`.
    pub drift: DVector<f64>,
    /// Volatility loadings `sigma_ij` (stock `i`, Brownian motion `j`).
    pub vol: DMatrix<f64>,
}

impl MarketParams {
    pub fn new(horizon: f64, rate: f64, drift: DVector<f64>, vol: DMatrix<f64>) -> Result<Self> {
        Self {
            horizon,
            rate,
            drift,
            vol,
        }
        .checked()
    }

    /// Two stocks with `r = 0.01`, `b = (0.04, 0.08)`,
    /// `sigma = ((0.15, -0.1), (-0.1, 0.25))` and a one-year horizon.
    pub fn two_stock_example() -> Self {
        Self {
            horizon: 1.0,
            rate: 0.01,
            drift: DVector::from_vec(vec![0.04, 0.08]),
            vol: DMatrix::from_row_slice(2, 2, &[0.15, -0.1, -0.1, 0.25]),
        }
    }

    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    /// `b - r 1`.
    pub fn excess_drift(&self) -> DVector<f64> {
        self.drift.add_scalar(-self.rate)
    }

    /// Copy with `sigma_ij = sigma_ji = value`.
    pub fn with_symmetric_entry(&self, i: usize, j: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.vol[(i, j)] = value;
        out.vol[(j, i)] = value;
        out
    }
}

impl Validate for MarketParams {
    fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let d = self.drift.len();
        if d == 0 {
            v.push(Violation::new("drift", "at least one stock required"));
        }
        if self.vol.nrows() != d || self.vol.ncols() != d {
            v.push(Violation::new(
                "vol",
                format!("expected {d}x{d}, got {}x{}", self.vol.nrows(), self.vol.ncols()),
            ));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            v.push(Violation::new("horizon", format!("must be > 0, got {}", self.horizon)));
        }
        if !self.rate.is_finite() {
            v.push(Violation::new("rate", "must be finite"));
        }
        if self.drift.iter().chain(self.vol.iter()).any(|x| !x.is_finite()) {
            v.push(Violation::new("drift/vol", "entries must be finite"));
        }
        v
    }
}

/// Constant fractions of wealth held in each stock; the bank account holds
/// the remainder. Short positions are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    pub weights: DVector<f64>,
}

impl Portfolio {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self {
            weights: DVector::from_vec(weights),
        }
        .checked()
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            weights: DVector::zeros(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn bank_weight(&self) -> f64 {
        1.0 - self.weights.sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.weights.as_slice()
    }
}

impl Validate for Portfolio {
    fn violations(&self) -> Vec<Violation> {
        if self.weights.iter().all(|w| w.is_finite()) {
            Vec::new()
        } else {
            vec![Violation::new("weights", "entries must be finite")]
        }
    }
}

/// Acceptability rule.
///
/// For return risk measures the rule applies to `log(X/Z)`; for monetary
/// risk measures `ARaR` reads as Expected Shortfall of `X - Z` and
/// `Entropic` as `log E[exp(gamma (X - Z))] <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    VaR { lambda: f64 },
    ARaR { lambda: f64 },
    LNorm { gamma: f64 },
    Entropic { gamma: f64 },
}

impl Criterion {
    pub fn level(&self) -> f64 {
        match *self {
            Criterion::VaR { lambda } | Criterion::ARaR { lambda } => lambda,
            Criterion::LNorm { gamma } | Criterion::Entropic { gamma } => gamma,
        }
    }

    /// Same family at a different level.
    pub fn with_level(&self, level: f64) -> Self {
        match *self {
            Criterion::VaR { .. } => Criterion::VaR { lambda: level },
            Criterion::ARaR { .. } => Criterion::ARaR { lambda: level },
            Criterion::LNorm { .. } => Criterion::LNorm { gamma: level },
            Criterion::Entropic { .. } => Criterion::Entropic { gamma: level },
        }
    }

    /// Monetary criterion compared against this return criterion:
    /// VaR with VaR, ARaR with ES, `L^gamma` with entropic.
    pub fn marm_counterpart(&self) -> Self {
        match *self {
            Criterion::LNorm { gamma } => Criterion::Entropic { gamma },
            other => other,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::VaR { .. } => "var",
            Criterion::ARaR { .. } => "arar",
            Criterion::LNorm { .. } => "lnorm",
            Criterion::Entropic { .. } => "entropic",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::VaR { lambda } => write!(f, "VaR({lambda})"),
            Criterion::ARaR { lambda } => write!(f, "ARaR({lambda})"),
            Criterion::LNorm { gamma } => write!(f, "LNorm({gamma})"),
            Criterion::Entropic { gamma } => write!(f, "Entropic({gamma})"),
        }
    }
}

impl Validate for Criterion {
    fn violations(&self) -> Vec<Violation> {
        match *self {
            Criterion::VaR { lambda } | Criterion::ARaR { lambda } => {
                if lambda > 0.0 && lambda < 1.0 {
                    Vec::new()
                } else {
                    vec![Violation::new("lambda", format!("must lie in (0,1), got {lambda}"))]
                }
            }
            Criterion::LNorm { gamma } | Criterion::Entropic { gamma } => {
                if gamma > 0.0 && gamma.is_finite() {
                    Vec::new()
                } else {
                    vec![Violation::new("gamma", format!("must be > 0, got {gamma}"))]
                }
            }
        }
    }
}

/// Notes attached to a solve.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    /// A riskless direction with nonzero excess drift exists; the infimum of
    /// the capital is zero.
    AcceptabilityArbitrage { direction: Vec<f64> },
    /// The optimum lies on the boundary of the portfolio box.
    BoxBoundary { half_width: f64 },
    /// The population entropic value of a lognormal loss is infinite; the
    /// reported number depends on the sample.
    EntropicDivergence { seed: u64, n_paths: usize },
    NotConverged { iterations: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::AcceptabilityArbitrage { direction } => write!(
                f,
                "relative acceptability arbitrage along {direction:?}: capital infimum is 0"
            ),
            Diagnostic::BoxBoundary { half_width } => {
                write!(f, "optimum on the portfolio box boundary (half-width {half_width})")
            }
            Diagnostic::EntropicDivergence { seed, n_paths } => write!(
                f,
                "entropic value is +inf for a lognormal loss; finite result is a \
                 sample artifact (seed {seed}, {n_paths} paths)"
            ),
            Diagnostic::NotConverged { iterations } => {
                write!(f, "not converged after {iterations} iterations")
            }
        }
    }
}

/// Minimal initial capital and the portfolio attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub capital: f64,
    pub portfolio: Portfolio,
    pub objective_evals: usize,
    pub converged: bool,
    pub restarts_used: usize,
    pub diagnostics: Vec<Diagnostic>,
}

impl SolveResult {
    pub fn is_arbitrage(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| matches!(d, Diagnostic::AcceptabilityArbitrage { .. }))
    }
}

impl Validate for SolveResult {
    fn violations(&self) -> Vec<Violation> {
        let mut v = self.portfolio.violations();
        if !(self.capital >= 0.0) {
            v.push(Violation::new("capital", format!("must be >= 0, got {}", self.capital)));
        }
        if self.converged && !self.capital.is_finite() {
            v.push(Violation::new("capital", "converged result must be finite"));
        }
        v
    }
}

/// Finite probability space given by its atom probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    pub probs: Vec<f64>,
}

impl FiniteSpace {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self { probs }.checked()
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn expectation(&self, x: &[f64]) -> f64 {
        self.probs.iter().zip(x).map(|(p, v)| p * v).sum()
    }

    /// `P(pred(X))`.
    pub fn prob_where(&self, x: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
        self.probs
            .iter()
            .zip(x)
            .filter(|(_, &v)| pred(v))
            .map(|(p, _)| p)
            .sum()
    }
}

impl Validate for FiniteSpace {
    fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.probs.is_empty() {
            v.push(Violation::new("probs", "at least one atom required"));
        }
        if self.probs.iter().any(|p| !(*p > 0.0)) {
            v.push(Violation::new("probs", "all probabilities must be > 0"));
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > Tolerances::DEFAULT.probability_sum {
            v.push(Violation::new("probs", format!("must sum to 1, got {sum}")));
        }
        v
    }
}

/// Random variable on a finite space: one value per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePosition {
    pub values: Vec<f64>,
}

impl FinitePosition {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![c; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|v| *v > 0.0 && v.is_finite())
    }

    /// Componentwise quotient `self / other`.
    pub fn div(&self, other: &FinitePosition) -> FinitePosition {
        FinitePosition::new(self.values.iter().zip(&other.values).map(|(a, b)| a / b).collect())
    }

    pub fn scale(&self, c: f64) -> FinitePosition {
        FinitePosition::new(self.values.iter().map(|v| v * c).collect())
    }

    /// `alpha * self + (1 - alpha) * other`.
    pub fn mix(&self, other: &FinitePosition, alpha: f64) -> FinitePosition {
        FinitePosition::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
                .collect(),
        )
    }

    /// Checks that the position lives on `space` and is strictly positive.
    pub fn check_positive_on(&self, space: &FiniteSpace) -> Result<()> {
        if self.len() != space.len() {
            return Err(Error::DimensionMismatch {
                what: "position",
                expected: space.len(),
                got: self.len(),
            });
        }
        if !self.is_strictly_positive() {
            return Err(Error::Input("position must be strictly positive".into()));
        }
        Ok(())
    }
}

impl Validate for FinitePosition {
    fn violations(&self) -> Vec<Violation> {
        if self.values.iter().all(|v| v.is_finite()) {
            Vec::new()
        } else {
            vec![Violation::new("values", "entries must be finite")]
        }
    }
}

/// AR(1)-GARCH(1,1) parameters for log-returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchParams {
    pub phi: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta: f64,
}

impl GarchParams {
    pub fn new(phi: f64, alpha0: f64, alpha1: f64, beta: f64) -> Result<Self> {
        Self {
            phi,
            alpha0,
            alpha1,
            beta,
        }
        .checked()
    }

    /// `alpha0 / (1 - alpha1 - beta)`.
    pub fn unconditional_variance(&self) -> f64 {
        self.alpha0 / (1.0 - self.alpha1 - self.beta)
    }
}

impl Validate for GarchParams {
    fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if !self.phi.is_finite() {
            v.push(Violation::new("phi", "must be finite"));
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            v.push(Violation::new("alpha0", format!("must be > 0, got {}", self.alpha0)));
        }
        if !(self.alpha1 >= 0.0) {
            v.push(Violation::new("alpha1", format!("must be >= 0, got {}", self.alpha1)));
        }
        if !(self.beta >= 0.0) {
            v.push(Violation::new("beta", format!("must be >= 0, got {}", self.beta)));
        }
        if !(self.alpha1 + self.beta < 1.0) {
            v.push(Violation::new(
                "alpha1+beta",
                format!("alpha1+beta<1 required, got {}", self.alpha1 + self.beta),
            ));
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_law_is_valid() {
        assert!(LognormalLaw { m: 0.0, s2: 0.0 }.validate().is_ok());
    }

    #[test]
    fn negative_variance_rejected() {
        let err = LognormalLaw::new(0.0, -1.0).unwrap_err();
        assert!(matches!(err, Error::Invalid(ref v) if v[0].field == "s2"));
    }

    #[test]
    fn explosive_garch_reports_persistence() {
        let p = GarchParams {
            phi: 0.0,
            alpha0: 1e-6,
            alpha1: 0.5,
            beta: 0.6,
        };
        let v = p.violations();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "alpha1+beta");
    }

    #[test]
    fn uniform_two_atom_space_is_valid() {
        assert!(FiniteSpace {
            probs: vec![0.5, 0.5]
        }
        .validate()
        .is_ok());
        assert!(FiniteSpace::new(vec![0.5, 0.4]).is_err());
        assert!(FiniteSpace::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn market_dimensions_checked() {
        let bad = MarketParams {
            horizon: 1.0,
            rate: 0.0,
            drift: DVector::from_vec(vec![0.1, 0.2]),
            vol: DMatrix::identity(3, 3),
        };
        assert_eq!(bad.violations()[0].field, "vol");
        let mut m = MarketParams::two_stock_example();
        m.horizon = 0.0;
        assert_eq!(m.violations()[0].field, "horizon");
    }

    #[test]
    fn criterion_ranges() {
        assert!(Criterion::VaR { lambda: 1.0 }.validate().is_err());
        assert!(Criterion::ARaR { lambda: 0.5 }.validate().is_ok());
        assert!(Criterion::LNorm { gamma: 0.0 }.validate().is_err());
        assert_eq!(
            Criterion::LNorm { gamma: 3.0 }.marm_counterpart(),
            Criterion::Entropic { gamma: 3.0 }
        );
    }

    #[test]
    fn converged_result_needs_finite_capital() {
        let r = SolveResult {
            capital: f64::INFINITY,
            portfolio: Portfolio::zeros(2),
            objective_evals: 1,
            converged: true,
            restarts_used: 0,
            diagnostics: vec![],
        };
        assert_eq!(r.violations().len(), 1);
    }
}
