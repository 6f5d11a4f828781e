//! Command-line driver: configuration, price ingestion and the CSV outputs
//! of the `marrm` binary.

// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod prices;

pub use config::{RunConfig, SweepParam};
pub use prices::{ingest_prices, parse_prices};
