//! GARCH likelihood, fit, simulation and rolling forecasts.

use chrono::{Days, NaiveDate};
use marrm_core::garch::{
    garch_fit, garch_loglik, garch_simulate, one_step_law, rolling_forecast, ForecastWindow, GarchFit, PricePoint,
};
use marrm_core::{rrm, Criterion, GarchParams, MarketParams, OptConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn row1() -> GarchParams {
    GarchParams::new(0.0340, 2.8718e-6, 0.0746, 0.9067).unwrap()
}

fn fit_opt() -> OptConfig {
    OptConfig {
        max_iter: 5000,
        x_tol: 1e-8,
        f_tol: 1e-9,
        restarts: 3,
        pi_bounds: 30.0,
        start_grid: vec![],
        initial_step: 0.1,
    }
}

fn init_for(r: &[f64]) -> GarchParams {
    let v = r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64;
    GarchParams::new(0.0, 0.05 * v, 0.05, 0.9).unwrap()
}

fn fixed_fit(params: GarchParams) -> GarchFit {
    GarchFit {
        params,
        loglik: 0.0,
        sigma_path: vec![],
        converged: true,
    }
}

/// Prices on consecutive days starting 2020-01-01 plus `skip` extra days
/// before observation `skip_at`.
fn dated(prices: &[f64], skip_at: Option<usize>, skip: u64) -> Vec<PricePoint> {
    let mut date = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    prices
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if i > 0 {
                date = date + Days::new(1);
                if Some(i) == skip_at {
                    date = date + Days::new(skip);
                }
            }
            PricePoint { date, price: *p }
        })
        .collect()
}

fn prices_from_returns(r: &[f64]) -> Vec<f64> {
    let mut lp = 100f64.ln();
    let mut out = vec![lp.exp()];
    for x in r {
        lp += x;
        out.push(lp.exp());
    }
    out
}

#[test]
fn doubling_alpha0_lowers_likelihood_at_truth() {
    let p = row1();
    let r = garch_simulate(&p, 10_000, 17).unwrap();
    let (ll, _) = garch_loglik(&p, &r).unwrap();
    let (ll2, _) = garch_loglik(&GarchParams { alpha0: 2.0 * p.alpha0, ..p }, &r).unwrap();
    assert!(ll >= ll2);
}

#[test]
fn loglik_matches_direct_recursion() {
    let p = row1();
    let r = garch_simulate(&p, 500, 2).unwrap();
    let (ll, path) = garch_loglik(&p, &r).unwrap();
    let mut var = p.alpha0 / (1.0 - p.alpha1 - p.beta);
    let mut sum = 0.0;
    for t in 1..r.len() {
        let e = r[t] - p.phi * r[t - 1];
        assert!((path[t - 1] - var.sqrt()).abs() <= 1e-15);
        sum += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - e * e / (2.0 * var);
        var = p.alpha0 + p.alpha1 * e * e + p.beta * var;
    }
    assert!((ll - sum).abs() <= 1e-9 * sum.abs());
}

#[test]
fn fit_is_locally_optimal_and_stationary() {
    let r = garch_simulate(&row1(), 5000, 23).unwrap();
    let opt = fit_opt();
    let fit = garch_fit(&r, &init_for(&r), &opt).unwrap();
    assert!(fit.converged);
    let (ll_true, _) = garch_loglik(&row1(), &r).unwrap();
    assert!(fit.loglik >= ll_true);
    assert!(fit.sigma_path.iter().all(|s| *s > 0.0));

    let p = fit.params;
    let perturbed = [
        GarchParams { phi: p.phi + 0.01, ..p },
        GarchParams { phi: p.phi - 0.01, ..p },
        GarchParams { alpha0: p.alpha0 * 1.1, ..p },
        GarchParams { alpha0: p.alpha0 / 1.1, ..p },
        GarchParams { alpha1: p.alpha1 + 0.005, ..p },
        GarchParams { alpha1: (p.alpha1 - 0.005).max(0.0), ..p },
        GarchParams { beta: p.beta + 0.005, ..p },
        GarchParams { beta: p.beta - 0.005, ..p },
    ];
    for q in perturbed {
        let (ll, _) = garch_loglik(&q, &r).unwrap();
        assert!(ll < fit.loglik, "{q:?}: {ll} vs {}", fit.loglik);
    }

    let refit = garch_fit(&r, &p, &opt).unwrap();
    assert!(refit.loglik - fit.loglik <= opt.f_tol, "{}", refit.loglik - fit.loglik);
}

#[test]
fn iid_data_has_no_arch_effect() {
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r: Vec<f64> = (0..3000)
            .map(|_| {
                // Box-Muller
                let (u, v): (f64, f64) = (rng.random_range(1e-300..1.0), rng.random());
                0.01 * (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
            })
            .collect();
        let fit = garch_fit(&r, &init_for(&r), &fit_opt()).unwrap();
        assert!(fit.params.alpha1 <= 0.05, "seed {seed}: {:?}", fit.params);
    }
}

#[test]
fn simulation_moments() {
    let a0 = 1e-4;
    let flat = GarchParams::new(0.0, a0, 0.0, 0.0).unwrap();
    let n = 100_000;
    let r = garch_simulate(&flat, n, 5).unwrap();
    let var = r.iter().map(|x| x * x).sum::<f64>() / n as f64;
    assert!((var - a0).abs() <= 5.0 * a0 * (2.0 / n as f64).sqrt(), "{var}");

    let g = garch_simulate(&row1(), n, 6).unwrap();
    let mean = g.iter().sum::<f64>() / n as f64;
    let m2 = g.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let m4 = g.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
    assert!(m4 / (m2 * m2) > 3.0);

    assert_eq!(garch_simulate(&row1(), 1000, 9).unwrap(), garch_simulate(&row1(), 1000, 9).unwrap());
    assert_ne!(garch_simulate(&row1(), 1000, 9).unwrap(), garch_simulate(&row1(), 1000, 10).unwrap());
}

#[test]
fn one_step_law_mean_is_exact() {
    let fit = fixed_fit(row1());
    let law = one_step_law(&fit, 100.0, 100.0, 0.01).unwrap();
    assert_eq!(law.m, 100f64.ln());
    assert_eq!(law.s2, 0.01 * 0.01);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let (y1, y2): (f64, f64) = (rng.random_range(1.0..1e4), rng.random_range(1.0..1e4));
        let m = one_step_law(&fit, y1, y2, 0.01).unwrap().m;
        let other = (1.0 + 0.0340) * y1.ln() - 0.0340 * y2.ln();
        assert!((m - other).abs() <= 1e-12 * other.abs().max(1.0));
    }

    let rw = fixed_fit(GarchParams::new(0.0, 1e-6, 0.1, 0.8).unwrap());
    assert_eq!(one_step_law(&rw, 50.0, 70.0, 0.02).unwrap().m, 50f64.ln());
    assert!(one_step_law(&fit, 0.0, 1.0, 0.01).is_err());
    assert!(one_step_law(&fit, 1.0, 1.0, -0.01).is_err());
}

#[test]
fn constant_prices_give_constant_columns() {
    let fit = fixed_fit(GarchParams { phi: 0.0, ..row1() });
    let prices = dated(&vec![250.0; 606], None, 0);
    let table = rolling_forecast(
        &prices,
        ForecastWindow {
            start: 600,
            initial_sigma: None,
        },
        &fit,
        &MarketParams::two_stock_example(),
        &Criterion::VaR { lambda: 0.95 },
        &OptConfig::default(),
    )
    .unwrap();
    assert_eq!(table.rows.len(), 6);
    let first = &table.rows[0];
    for row in &table.rows {
        assert!((row.rrm / first.rrm - 1.0).abs() <= 1e-12);
        assert!((row.marrm / first.marrm - 1.0).abs() <= 1e-9);
        assert!(row.marrm <= row.rrm);
        assert_eq!(row.index, 250.0);
    }
    assert!(table.gaps.is_empty());
}

#[test]
fn initial_sigma_override_and_two_day_forecast() {
    let r = garch_simulate(&row1(), 120, 4).unwrap();
    let prices = dated(&prices_from_returns(&r), None, 0);
    let fit = fixed_fit(row1());
    let market = MarketParams::two_stock_example();
    let c = Criterion::ARaR { lambda: 0.95 };
    let start = prices.len() - 2;
    let table = rolling_forecast(
        &prices,
        ForecastWindow {
            start,
            initial_sigma: Some(0.0088),
        },
        &fit,
        &market,
        &c,
        &OptConfig::default(),
    )
    .unwrap();
    assert_eq!(table.rows.len(), 2);
    assert_eq!(table.initial_sigma, 0.0088);
    assert_eq!(table.rows[0].date, prices[start].date);

    let law = one_step_law(&fit, prices[start - 1].price, prices[start - 2].price, 0.0088).unwrap();
    let want = rrm(&law, &c, market.rate, market.horizon).unwrap();
    assert_eq!(table.rows[0].rrm, want);
    for row in &table.rows {
        assert!(row.rrm_vs_marrm() > 0.0);
    }
}

#[test]
fn gaps_and_bad_series_are_reported() {
    let r = garch_simulate(&row1(), 40, 8).unwrap();
    let p = prices_from_returns(&r);
    let fit = fixed_fit(row1());
    let market = MarketParams::two_stock_example();
    let c = Criterion::VaR { lambda: 0.9 };
    let w = ForecastWindow {
        start: 38,
        initial_sigma: None,
    };
    let prices = dated(&p, Some(20), 9);
    let table = rolling_forecast(&prices, w, &fit, &market, &c, &OptConfig::default()).unwrap();
    assert_eq!(table.gaps.len(), 1);
    assert_eq!((table.gaps[0].to - table.gaps[0].from).num_days(), 10);

    let mut swapped = dated(&p, None, 0);
    swapped.swap(10, 11);
    assert!(rolling_forecast(&swapped, w, &fit, &market, &c, &OptConfig::default()).is_err());
    let mut neg = dated(&p, None, 0);
    neg[5].price = -1.0;
    assert!(rolling_forecast(&neg, w, &fit, &market, &c, &OptConfig::default()).is_err());
    assert!(rolling_forecast(&prices[..2], w, &fit, &market, &c, &OptConfig::default()).is_err());
}
