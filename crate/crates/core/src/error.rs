use thiserror::Error;

use crate::types::{Criterion, Violation};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain ({domain})")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("no closed form for {0}; use the Monte Carlo path")]
    UnsupportedAnalytic(Criterion),

    #[error("criterion {0} is not supported by this operation")]
    UnsupportedCriterion(Criterion),

    #[error("invalid value: {}", format_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("empty sample vector")]
    EmptySamples,

    #[error("acceptance statistic is not monotone in capital: {0}")]
    NonMonotone(String),

    #[error("{0}")]
    Input(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
