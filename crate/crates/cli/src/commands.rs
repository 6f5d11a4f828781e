//! Subcommands. Each returns the full text of its output file.

use anyhow::{bail, Context, Result};
use chrono::{Datelike, Days, NaiveDate, Weekday};
use marrm_core::checks::{run_suite, Mutations, SuiteConfig};
use marrm_core::garch::{garch_fit, garch_simulate, rolling_forecast, ForecastWindow, PricePoint};
use marrm_core::solver::marm_on_samples;
use marrm_core::{marrm, rrm, CrnSamples, Criterion, GarchParams, SolveResult};

use crate::config::{RunConfig, SweepParam};
use crate::output::{comment_header, notes, num, pi_columns, Table};
use crate::prices::format_prices;

fn return_criterion(cfg: &RunConfig, level: f64) -> Result<Criterion> {
    let c = cfg.criterion.with_level(level);
    if let Criterion::Entropic { .. } = c {
        bail!("the entropic rule has no return counterpart here; use criterion=lnorm with marm=true");
    }
    Ok(c)
}

fn pi_cells(res: &SolveResult) -> Vec<String> {
    res.portfolio.as_slice().iter().map(|v| num(*v)).collect()
}

fn report_diagnostics(verbose: bool, what: &str, res: &SolveResult) {
    if verbose {
        for d in &res.diagnostics {
            eprintln!("{what}: {d}");
        }
    }
}

/// Columns `level, rrm, marrm, rrm_vs_marrm, pi_1..pi_d`, then with
/// `marm=true` also `marm, marm_vs_marrm, marm_pi_1..marm_pi_d`, and
/// finally `notes`.
///
/// The monetary measure pairs VaR with VaR, ARaR with Expected Shortfall
/// and `L^gamma` with the entropic rule, all levels on one set of common
/// random numbers.
pub fn sweep(cfg: &RunConfig, verbose: bool) -> Result<String> {
    let d = cfg.market.dim();
    let mut cols: Vec<String> = ["level", "rrm", "marrm", "rrm_vs_marrm"].map(String::from).to_vec();
    cols.extend(pi_columns("", d));
    if cfg.marm {
        cols.extend(["marm", "marm_vs_marrm"].map(String::from));
        cols.extend(pi_columns("marm_", d));
    }
    cols.push("notes".into());
    let mut table = Table::new(cols);

    let samples = if cfg.marm && !cfg.levels.is_empty() {
        Some(CrnSamples::generate(&cfg.loss, &cfg.mc())?)
    } else {
        None
    };
    for &level in &cfg.levels {
        let c = return_criterion(cfg, level)?;
        let r = rrm(&cfg.loss, &c, cfg.market.rate, cfg.market.horizon)?;
        let m = marrm(&cfg.loss, &cfg.market, &c, &cfg.opt).with_context(|| format!("marrm at {c}"))?;
        report_diagnostics(verbose, &c.to_string(), &m);
        let mut row = vec![num(level), num(r), num(m.capital), num((r - m.capital) / m.capital)];
        row.extend(pi_cells(&m));
        let mut diags = m.diagnostics.clone();
        if let Some(s) = &samples {
            let mc = marm_on_samples(s, &cfg.market, &c.marm_counterpart(), &cfg.opt)
                .with_context(|| format!("marm at {}", c.marm_counterpart()))?;
            report_diagnostics(verbose, &c.marm_counterpart().to_string(), &mc);
            row.extend([num(mc.capital), num((mc.capital - m.capital) / m.capital)]);
            row.extend(pi_cells(&mc));
            diags.extend(mc.diagnostics);
        }
        row.push(notes(&diags));
        table.push(row);
        if verbose {
            eprintln!("level {level}: rrm {r:.6} marrm {:.6}", m.capital);
        }
    }
    Ok(table.render(&comment_header(&cfg.resolved())))
}

/// Columns `value, rrm, marrm, rrm_vs_marrm, pi_1..pi_d, notes` with the
/// swept parameter named in the header comments.
pub fn sensitivity(cfg: &RunConfig, verbose: bool) -> Result<String> {
    let d = cfg.market.dim();
    if d < 2 && cfg.sweep_param != SweepParam::LossSd {
        bail!("{} needs at least two stocks", cfg.sweep_param);
    }
    let c = return_criterion(cfg, cfg.level)?;
    let mut cols: Vec<String> = ["value", "rrm", "marrm", "rrm_vs_marrm"].map(String::from).to_vec();
    cols.extend(pi_columns("", d));
    cols.push("notes".into());
    let mut table = Table::new(cols);

    for &v in &cfg.sweep_grid {
        let mut market = cfg.market.clone();
        let mut loss = cfg.loss;
        match cfg.sweep_param {
            SweepParam::Sigma22 => market.vol[(1, 1)] = v,
            SweepParam::Sigma12 => market = market.with_symmetric_entry(0, 1, v),
            SweepParam::LossSd => loss.s2 = v * v,
        }
        let r = rrm(&loss, &c, market.rate, market.horizon)?;
        let m = marrm(&loss, &market, &c, &cfg.opt).with_context(|| format!("{} = {v}", cfg.sweep_param))?;
        report_diagnostics(verbose, &format!("{} = {v}", cfg.sweep_param), &m);
        let mut row = vec![num(v), num(r), num(m.capital), num((r - m.capital) / m.capital)];
        row.extend(pi_cells(&m));
        row.push(notes(&m.diagnostics));
        table.push(row);
    }
    Ok(table.render(&comment_header(&cfg.resolved())))
}

/// Property report and whether every property passed.
pub fn properties(cfg: &RunConfig, verbose: bool) -> Result<(String, bool)> {
    let suite = SuiteConfig {
        seed: cfg.seed,
        probe_trials: cfg.probe_trials,
        random_instances: cfg.random_instances,
        mutations: Mutations {
            naive_es_log: cfg.naive_es_log,
        },
    };
    let outcomes = run_suite(&suite, &cfg.market, &cfg.opt)?;
    let mut s = comment_header(&cfg.resolved());
    let passed = outcomes.iter().filter(|o| o.passed).count();
    for o in &outcomes {
        if verbose {
            eprintln!("{o}");
        }
        s.push_str(&o.to_string());
        s.push('\n');
    }
    s.push_str(&format!("{passed}/{} properties passed\n", outcomes.len()));
    Ok((s, passed == outcomes.len()))
}

/// Index of the last price of the calibration window.
fn calibration_end(cfg: &RunConfig, prices: &[PricePoint]) -> Result<(usize, usize)> {
    let (from, to) = match (cfg.fit_from, cfg.fit_to) {
        (None, None) => (0, cfg.fit_returns),
        (from, to) => {
            let first = match from {
                Some(d) => prices.iter().position(|p| p.date >= d),
                None => Some(0),
            };
            let last = match to {
                Some(d) => prices.iter().rposition(|p| p.date <= d),
                None => bail!("empirical.fit_to is required when empirical.fit_from is set"),
            };
            match (first, last) {
                (Some(a), Some(b)) if b > a => (a, b),
                _ => bail!("calibration window contains no prices"),
            }
        }
    };
    if to >= prices.len() {
        bail!(
            "calibration window needs {} prices, only {} available",
            to + 1,
            prices.len()
        );
    }
    if to - from < 100 {
        bail!("calibration window has {} returns, need at least 100", to - from);
    }
    Ok((from, to))
}

/// Columns `date, index, rrm, marrm, rrm_vs_index, marrm_vs_index,
/// rrm_vs_marrm, pi_1..pi_d`. The fitted parameters, log-likelihood and
/// date gaps are written as header comments.
pub fn empirical(cfg: &RunConfig, prices: &[PricePoint], verbose: bool) -> Result<String> {
    let c = return_criterion(cfg, cfg.level)?;
    let (from, to) = calibration_end(cfg, prices)?;
    let end = match cfg.forecast_to {
        Some(d) => prices.iter().rposition(|p| p.date <= d).unwrap_or(0),
        None => prices.len() - 1,
    };
    if end <= to {
        bail!("no forecast days after the calibration window ending {}", prices[to].date);
    }
    let start = (to + 1).max(3);

    let returns: Vec<f64> = prices[from..=to].windows(2).map(|w| (w[1].price / w[0].price).ln()).collect();
    let v = returns.iter().map(|r| r * r).sum::<f64>() / returns.len() as f64;
    let init = GarchParams::new(0.0, 0.05 * v, 0.05, 0.9)?;
    let fit = garch_fit(&returns, &init, &cfg.fit_opt)?;
    if verbose {
        eprintln!("fit {:?}, loglik {}, converged {}", fit.params, fit.loglik, fit.converged);
    }
    let table = rolling_forecast(
        &prices[..=end],
        ForecastWindow {
            start,
            initial_sigma: cfg.initial_sigma,
        },
        &fit,
        &cfg.market,
        &c,
        &cfg.opt,
    )?;

    let mut header = cfg.resolved();
    header.extend([
        ("fit.window".into(), format!("{}..{}", prices[from].date, prices[to].date)),
        ("fit.phi".into(), num(fit.params.phi)),
        ("fit.alpha0".into(), num(fit.params.alpha0)),
        ("fit.alpha1".into(), num(fit.params.alpha1)),
        ("fit.beta".into(), num(fit.params.beta)),
        ("fit.loglik".into(), num(fit.loglik)),
        ("fit.converged".into(), fit.converged.to_string()),
        ("forecast.initial_sigma".into(), num(table.initial_sigma)),
    ]);
    for g in &table.gaps {
        if verbose {
            eprintln!("gap in dates: {} to {}", g.from, g.to);
        }
        header.push(("gap".into(), format!("{}..{}", g.from, g.to)));
    }

    let mut cols: Vec<String> = [
        "date",
        "index",
        "rrm",
        "marrm",
        "rrm_vs_index",
        "marrm_vs_index",
        "rrm_vs_marrm",
    ]
    .map(String::from)
    .to_vec();
    cols.extend(pi_columns("", cfg.market.dim()));
    let mut out = Table::new(cols);
    for r in &table.rows {
        let mut row = vec![
            r.date.to_string(),
            num(r.index),
            num(r.rrm),
            num(r.marrm),
            num(r.rrm_vs_index()),
            num(r.marrm_vs_index()),
            num(r.rrm_vs_marrm()),
        ];
        row.extend(r.pi.iter().map(|v| num(*v)));
        out.push(row);
    }
    Ok(out.render(&comment_header(&header)))
}

fn next_business_day(d: NaiveDate) -> NaiveDate {
    let mut n = d + Days::new(1);
    while matches!(n.weekday(), Weekday::Sat | Weekday::Sun) {
        n = n + Days::new(1);
    }
    n
}

/// Price CSV from `simulate.n` returns, one per business day.
pub fn simulate(cfg: &RunConfig) -> Result<String> {
    let returns = garch_simulate(&cfg.garch, cfg.simulate_n, cfg.seed)?;
    let mut date = cfg.simulate_start;
    while matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
        date = date + Days::new(1);
    }
    let mut logp = cfg.simulate_price.ln();
    let mut prices = vec![PricePoint {
        date,
        price: cfg.simulate_price,
    }];
    for r in returns {
        date = next_business_day(date);
        logp += r;
        prices.push(PricePoint { date, price: logp.exp() });
    }
    Ok(format_prices(&comment_header(&cfg.resolved()), &prices))
}
