//! Price series CSV: header `date,price`, ISO dates, positive prices,
//! strictly increasing dates. Lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;
use marrm_core::garch::PricePoint;

use crate::output::num;

pub fn ingest_prices(path: &Path) -> Result<Vec<PricePoint>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_prices(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse_prices(text: &str) -> Result<Vec<PricePoint>> {
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    match rows.next() {
        Some((_, h)) if h.replace(' ', "") == "date,price" => {}
        Some((n, h)) => bail!("line {n}: expected header `date,price`, got `{h}`"),
        None => bail!("empty price file"),
    }

    let mut out: Vec<PricePoint> = Vec::new();
    for (n, line) in rows {
        let (d, p) = line
            .split_once(',')
            .ok_or_else(|| anyhow!("line {n}: expected `date,price`, got `{line}`"))?;
        let date = NaiveDate::parse_from_str(d.trim(), "%Y-%m-%d")
            .map_err(|e| anyhow!("line {n}: bad date `{}`: {e}", d.trim()))?;
        let price: f64 = p
            .trim()
            .parse()
            .map_err(|e| anyhow!("line {n}: bad price `{}`: {e}", p.trim()))?;
        if !(price > 0.0 && price.is_finite()) {
            bail!("line {n}: price must be positive, got {price}");
        }
        if let Some(prev) = out.last() {
            if date == prev.date {
                bail!("line {n}: duplicate date {date}");
            }
            if date < prev.date {
                bail!("line {n}: date {date} is before the previous row ({})", prev.date);
            }
        }
        out.push(PricePoint { date, price });
    }
    Ok(out)
}

/// The same format, with `header` lines emitted as comments first.
pub fn format_prices(header: &str, prices: &[PricePoint]) -> String {
    let mut s = header.to_string();
    s.push_str("date,price\n");
    for p in prices {
        let _ = writeln!(s, "{},{}", p.date, num(p.price));
    }
    s
}
