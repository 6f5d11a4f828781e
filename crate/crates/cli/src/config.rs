//! Run configuration: flat `key=value` lines, `#` starts a comment.
//!
//! Every key has a default; the resolved configuration is echoed into each
//! output file so a run can be repeated from its own output.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;
use marrm_core::solver::radius_one_grid;
use marrm_core::{Criterion, GarchParams, LognormalLaw, MarketParams, McConfig, OptConfig};
use nalgebra::{DMatrix, DVector};

/// Parameter swept by the `sensitivity` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// `sigma_22`, volatility loading of the second stock.
    Sigma22,
    /// `sigma_12 = sigma_21`.
    Sigma12,
    /// Standard deviation of the log-loss.
    LossSd,
}

impl FromStr for SweepParam {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma22" => Ok(SweepParam::Sigma22),
            "sigma12" => Ok(SweepParam::Sigma12),
            "loss_sd" => Ok(SweepParam::LossSd),
            other => bail!("unknown sweep parameter `{other}` (expected sigma22, sigma12 or loss_sd)"),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Sigma22 => "sigma22",
            SweepParam::Sigma12 => "sigma12",
            SweepParam::LossSd => "loss_sd",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub market: MarketParams,
    pub loss: LognormalLaw,
    /// Family of the acceptance rule; its level is replaced per row.
    pub criterion: Criterion,
    /// Level used by `sensitivity` and `empirical`.
    pub level: f64,
    /// Grid walked by `sweep`.
    pub levels: Vec<f64>,
    /// Add the Monte Carlo monetary measure to `sweep`.
    pub marm: bool,
    pub mc_paths: usize,
    pub opt: OptConfig,
    pub sweep_param: SweepParam,
    pub sweep_grid: Vec<f64>,
    pub garch: GarchParams,
    pub simulate_n: usize,
    pub simulate_start: NaiveDate,
    pub simulate_price: f64,
    pub prices: Option<PathBuf>,
    pub fit_from: Option<NaiveDate>,
    pub fit_to: Option<NaiveDate>,
    /// Number of returns in the calibration window when no dates are given.
    pub fit_returns: usize,
    pub forecast_to: Option<NaiveDate>,
    pub initial_sigma: Option<f64>,
    pub fit_opt: OptConfig,
    pub probe_trials: usize,
    pub random_instances: usize,
    pub naive_es_log: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            market: MarketParams::two_stock_example(),
            loss: LognormalLaw::from_mean_sd(1.5, 0.2).expect("valid constants"),
            criterion: Criterion::ARaR { lambda: 0.95 },
            level: 0.95,
            levels: (0..20).map(|k| 0.8 + 0.01 * k as f64).collect(),
            marm: false,
            mc_paths: 100_000,
            opt: OptConfig::default(),
            sweep_param: SweepParam::Sigma22,
            sweep_grid: (0..10).map(|k| 0.1 + 0.05 * k as f64).collect(),
            garch: GarchParams::new(0.0340, 2.8718e-6, 0.0746, 0.9067).expect("valid constants"),
            simulate_n: 1030,
            simulate_start: NaiveDate::from_ymd_opt(2016, 1, 4).expect("valid date"),
            simulate_price: 10_000.0,
            prices: None,
            fit_from: None,
            fit_to: None,
            fit_returns: 1000,
            forecast_to: None,
            initial_sigma: None,
            fit_opt: OptConfig {
                max_iter: 5000,
                x_tol: 1e-8,
                f_tol: 1e-9,
                restarts: 3,
                pi_bounds: 30.0,
                start_grid: vec![],
                initial_step: 0.1,
            },
            probe_trials: 100_000,
            random_instances: 100,
            naive_es_log: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| anyhow!("`{key}`: cannot parse `{v}`: {e}"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => bail!("`{key}`: expected true or false, got `{v}`"),
    }
}

fn parse_date(key: &str, v: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(v, "%Y-%m-%d").map_err(|e| anyhow!("`{key}`: bad date `{v}`: {e}"))
}

fn optional<T>(v: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<Option<T>> {
    if v.is_empty() {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

/// `a:b:h` (inclusive range) or a comma-separated list; empty means no
/// points.
pub fn parse_grid(key: &str, v: &str) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Ok(vec![]);
    }
    if let Some((a, rest)) = v.split_once(':') {
        let (b, h) = rest
            .split_once(':')
            .ok_or_else(|| anyhow!("`{key}`: range needs start:stop:step"))?;
        let (a, b, h): (f64, f64, f64) = (parse(key, a)?, parse(key, b)?, parse(key, h)?);
        if !(h > 0.0) || !(b >= a) {
            bail!("`{key}`: need step > 0 and stop >= start");
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| a + k as f64 * h).collect());
    }
    v.split(',').map(|x| parse(key, x.trim())).collect()
}

fn parse_criterion(key: &str, v: &str) -> Result<Criterion> {
    // the level is filled in from `level` once every key is read
    match v.to_ascii_lowercase().as_str() {
        "var" => Ok(Criterion::VaR { lambda: 0.5 }),
        "arar" | "es" => Ok(Criterion::ARaR { lambda: 0.5 }),
        "lnorm" => Ok(Criterion::LNorm { gamma: 1.0 }),
        "entropic" => Ok(Criterion::Entropic { gamma: 1.0 }),
        _ => bail!("`{key}`: unknown criterion `{v}` (var, arar, lnorm, entropic)"),
    }
}

fn index_of(part: &str, dim: usize, key: &str) -> Result<usize> {
    let i: usize = parse(key, part)?;
    if i == 0 || i > dim {
        bail!("`{key}`: index {i} outside 1..={dim}");
    }
    Ok(i - 1)
}

fn fmt_grid(g: &[f64]) -> String {
    g.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn fmt_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

impl RunConfig {
    /// Parses configuration text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {line_no}: expected key=value, got `{line}`"))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k.is_empty() {
                bail!("line {line_no}: empty key");
            }
            if let Some(prev) = seen.insert(k.clone(), line_no) {
                bail!("line {line_no}: `{k}` already set on line {prev}");
            }
            entries.push((line_no, k, v));
        }

        let mut cfg = RunConfig::default();
        // the dimension decides which market keys exist, so read it first
        let dim = match entries.iter().find(|(_, k, _)| k == "market.dim") {
            Some((n, k, v)) => {
                let d: usize = parse(k, v).with_context(|| format!("line {n}"))?;
                if d == 0 {
                    bail!("line {n}: `market.dim` must be >= 1");
                }
                d
            }
            None => 2,
        };
        let mut drift_set = vec![false; dim];
        let mut vol_set = vec![false; dim * dim];
        if dim != 2 {
            cfg.market.drift = DVector::zeros(dim);
            cfg.market.vol = DMatrix::zeros(dim, dim);
        }

        for (n, k, v) in &entries {
            cfg.apply(k, v, dim, &mut drift_set, &mut vol_set)
                .with_context(|| format!("line {n}"))?;
        }
        if dim != 2 {
            let missing: Vec<String> = (0..dim)
                .filter(|i| !drift_set[*i])
                .map(|i| format!("market.drift.{}", i + 1))
                .chain(
                    (0..dim * dim)
                        .filter(|k| !vol_set[*k])
                        .map(|k| format!("market.sigma.{}.{}", k / dim + 1, k % dim + 1)),
                )
                .collect();
            if !missing.is_empty() {
                bail!("market.dim = {dim} requires every entry; missing {}", missing.join(", "));
            }
            cfg.opt.start_grid = if cfg.opt.start_grid.is_empty() {
                vec![]
            } else {
                radius_one_grid(dim)
            };
        }
        cfg.criterion = cfg.criterion.with_level(cfg.level);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, k: &str, v: &str, dim: usize, drift_set: &mut [bool], vol_set: &mut [bool]) -> Result<()> {
        let parts: Vec<&str> = k.split('.').collect();
        match parts.as_slice() {
            ["seed"] => self.seed = parse(k, v)?,
            ["market", "dim"] => {}
            ["market", "horizon"] => self.market.horizon = parse(k, v)?,
            ["market", "rate"] => self.market.rate = parse(k, v)?,
            ["market", "drift", i] => {
                let i = index_of(i, dim, k)?;
                self.market.drift[i] = parse(k, v)?;
                drift_set[i] = true;
            }
            ["market", "sigma", i, j] => {
                let (i, j) = (index_of(i, dim, k)?, index_of(j, dim, k)?);
                self.market.vol[(i, j)] = parse(k, v)?;
                vol_set[i * dim + j] = true;
            }
            ["loss", "m"] => self.loss.m = parse(k, v)?,
            ["loss", "sd"] => {
                let sd: f64 = parse(k, v)?;
                self.loss.s2 = sd * sd;
            }
            ["criterion"] => self.criterion = parse_criterion(k, v)?,
            ["level"] => self.level = parse(k, v)?,
            ["levels"] => self.levels = parse_grid(k, v)?,
            ["marm"] => self.marm = parse_bool(k, v)?,
            ["mc", "paths"] => self.mc_paths = parse(k, v)?,
            ["opt", field] => apply_opt(&mut self.opt, field, k, v, dim)?,
            ["fit", "opt", field] => apply_opt(&mut self.fit_opt, field, k, v, 4)?,
            ["sensitivity", "param"] => self.sweep_param = v.parse()?,
            ["sensitivity", "grid"] => self.sweep_grid = parse_grid(k, v)?,
            ["garch", "phi"] => self.garch.phi = parse(k, v)?,
            ["garch", "alpha0"] => self.garch.alpha0 = parse(k, v)?,
            ["garch", "alpha1"] => self.garch.alpha1 = parse(k, v)?,
            ["garch", "beta"] => self.garch.beta = parse(k, v)?,
            ["simulate", "n"] => self.simulate_n = parse(k, v)?,
            ["simulate", "start_date"] => self.simulate_start = parse_date(k, v)?,
            ["simulate", "start_price"] => self.simulate_price = parse(k, v)?,
            ["empirical", "prices"] => self.prices = optional(v, |s| Ok(PathBuf::from(s)))?,
            ["empirical", "fit_from"] => self.fit_from = optional(v, |s| parse_date(k, s))?,
            ["empirical", "fit_to"] => self.fit_to = optional(v, |s| parse_date(k, s))?,
            ["empirical", "fit_returns"] => self.fit_returns = parse(k, v)?,
            ["empirical", "forecast_to"] => self.forecast_to = optional(v, |s| parse_date(k, s))?,
            ["empirical", "initial_sigma"] => self.initial_sigma = optional(v, |s| parse(k, s))?,
            ["properties", "trials"] => self.probe_trials = parse(k, v)?,
            ["properties", "instances"] => self.random_instances = parse(k, v)?,
            ["properties", "naive_es_log"] => self.naive_es_log = parse_bool(k, v)?,
            _ => bail!("unknown key `{k}`"),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        use marrm_core::Validate;
        self.market.check().context("market")?;
        self.loss.check().context("loss")?;
        self.criterion.with_level(self.level).check().context("level")?;
        for l in &self.levels {
            self.criterion.with_level(*l).check().context("levels")?;
        }
        self.opt.validate().context("opt")?;
        self.fit_opt.validate().context("fit.opt")?;
        self.garch.check().context("garch")?;
        McConfig::new(self.mc_paths, self.seed).context("mc")?;
        if !(self.simulate_price > 0.0) {
            bail!("simulate.start_price must be > 0");
        }
        if let (Some(a), Some(b)) = (self.fit_from, self.fit_to) {
            if b <= a {
                bail!("empirical.fit_to must come after empirical.fit_from");
            }
        }
        if let (Some(a), Some(b)) = (self.fit_to, self.forecast_to) {
            if b <= a {
                bail!("empirical.forecast_to must come after empirical.fit_to");
            }
        }
        if let Some(s) = self.initial_sigma {
            if !(s > 0.0) {
                bail!("empirical.initial_sigma must be > 0");
            }
        }
        Ok(())
    }

    pub fn mc(&self) -> McConfig {
        McConfig {
            n_paths: self.mc_paths,
            seed: self.seed,
        }
    }

    /// Every key with its effective value, in a fixed order.
    pub fn resolved(&self) -> Vec<(String, String)> {
        let d = self.market.dim();
        let mut out: Vec<(String, String)> = vec![
            ("seed".into(), self.seed.to_string()),
            ("market.dim".into(), d.to_string()),
            ("market.horizon".into(), self.market.horizon.to_string()),
            ("market.rate".into(), self.market.rate.to_string()),
        ];
        for i in 0..d {
            out.push((format!("market.drift.{}", i + 1), self.market.drift[i].to_string()));
        }
        for i in 0..d {
            for j in 0..d {
                out.push((format!("market.sigma.{}.{}", i + 1, j + 1), self.market.vol[(i, j)].to_string()));
            }
        }
        out.extend([
            ("loss.m".into(), self.loss.m.to_string()),
            ("loss.sd".into(), self.loss.sd().to_string()),
            ("criterion".into(), self.criterion.name().to_string()),
            ("level".into(), self.level.to_string()),
            ("levels".into(), fmt_grid(&self.levels)),
            ("marm".into(), self.marm.to_string()),
            ("mc.paths".into(), self.mc_paths.to_string()),
        ]);
        push_opt(&mut out, "opt", &self.opt);
        push_opt(&mut out, "fit.opt", &self.fit_opt);
        out.extend([
            ("sensitivity.param".into(), self.sweep_param.to_string()),
            ("sensitivity.grid".into(), fmt_grid(&self.sweep_grid)),
            ("garch.phi".into(), self.garch.phi.to_string()),
            ("garch.alpha0".into(), self.garch.alpha0.to_string()),
            ("garch.alpha1".into(), self.garch.alpha1.to_string()),
            ("garch.beta".into(), self.garch.beta.to_string()),
            ("simulate.n".into(), self.simulate_n.to_string()),
            ("simulate.start_date".into(), self.simulate_start.to_string()),
            ("simulate.start_price".into(), self.simulate_price.to_string()),
            (
                "empirical.prices".into(),
                self.prices.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            ),
            ("empirical.fit_from".into(), fmt_opt(&self.fit_from)),
            ("empirical.fit_to".into(), fmt_opt(&self.fit_to)),
            ("empirical.fit_returns".into(), self.fit_returns.to_string()),
            ("empirical.forecast_to".into(), fmt_opt(&self.forecast_to)),
            ("empirical.initial_sigma".into(), fmt_opt(&self.initial_sigma)),
            ("properties.trials".into(), self.probe_trials.to_string()),
            ("properties.instances".into(), self.random_instances.to_string()),
            ("properties.naive_es_log".into(), self.naive_es_log.to_string()),
        ]);
        out
    }
}

fn apply_opt(opt: &mut OptConfig, field: &str, k: &str, v: &str, dim: usize) -> Result<()> {
    match field {
        "max_iter" => opt.max_iter = parse(k, v)?,
        "x_tol" => opt.x_tol = parse(k, v)?,
        "f_tol" => opt.f_tol = parse(k, v)?,
        "restarts" => opt.restarts = parse(k, v)?,
        "box" => opt.pi_bounds = parse(k, v)?,
        "initial_step" => opt.initial_step = parse(k, v)?,
        "grid_starts" => {
            opt.start_grid = if parse_bool(k, v)? {
                radius_one_grid(dim)
            } else {
                vec![]
            }
        }
        _ => bail!("unknown key `{k}`"),
    }
    Ok(())
}

fn push_opt(out: &mut Vec<(String, String)>, prefix: &str, opt: &OptConfig) {
    out.extend([
        (format!("{prefix}.max_iter"), opt.max_iter.to_string()),
        (format!("{prefix}.x_tol"), opt.x_tol.to_string()),
        (format!("{prefix}.f_tol"), opt.f_tol.to_string()),
        (format!("{prefix}.restarts"), opt.restarts.to_string()),
        (format!("{prefix}.box"), opt.pi_bounds.to_string()),
        (format!("{prefix}.initial_step"), opt.initial_step.to_string()),
        (format!("{prefix}.grid_starts"), (!opt.start_grid.is_empty()).to_string()),
    ]);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_resolved() {
        let cfg = RunConfig::default();
        let text: String = cfg.resolved().iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn comments_and_dotted_keys() {
        let cfg = RunConfig::parse("# header\nmarket.sigma.1.2 = 0.05 # note\n\ncriterion=VaR\n").unwrap();
        assert_eq!(cfg.market.vol[(0, 1)], 0.05);
        assert_eq!(cfg.market.vol[(1, 0)], -0.1);
        assert!(matches!(cfg.criterion, Criterion::VaR { .. }));
    }

    #[test]
    fn errors_name_the_line() {
        let e = RunConfig::parse("seed=1\n\nbogus.key=3\n").unwrap_err();
        assert!(format!("{e:#}").contains("line 3"), "{e:#}");
        let e = RunConfig::parse("seed=1\nseed=2\n").unwrap_err();
        assert!(format!("{e:#}").contains("line 2"));
        let e = RunConfig::parse("market.drift.3=0.1\n").unwrap_err();
        assert!(format!("{e:#}").contains("line 1"));
        let e = RunConfig::parse("no equals sign\n").unwrap_err();
        assert!(format!("{e:#}").contains("line 1"));
    }

    #[test]
    fn grids() {
        let g = parse_grid("g", "0.80:0.99:0.01").unwrap();
        assert_eq!(g.len(), 20);
        assert!((g[19] - 0.99).abs() < 1e-12);
        assert_eq!(parse_grid("g", "1, 2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(parse_grid("g", "").unwrap().is_empty());
        assert!(parse_grid("g", "1:0:0.1").is_err());
    }

    #[test]
    fn other_dimensions_need_every_entry() {
        let e = RunConfig::parse("market.dim=1\nmarket.drift.1=0.05\n").unwrap_err();
        assert!(format!("{e:#}").contains("market.sigma.1.1"));
        let cfg = RunConfig::parse("market.dim=1\nmarket.drift.1=0.05\nmarket.sigma.1.1=0.2\n").unwrap();
        assert_eq!(cfg.market.dim(), 1);
        assert_eq!(cfg.opt.start_grid.len(), radius_one_grid(1).len());
    }

    #[test]
    fn invalid_levels_rejected() {
        assert!(RunConfig::parse("levels=0.5,1.2\n").is_err());
        assert!(RunConfig::parse("criterion=lnorm\nlevels=1,2,3\nlevel=2\n").is_ok());
    }
}
