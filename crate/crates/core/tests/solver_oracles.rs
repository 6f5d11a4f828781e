//! Optimized capitals against closed-form optima, dense grid searches and
//! Monte Carlo counterparts.

use marrm_core::checks::example_loss;
use marrm_core::solver::{marm_on_samples, radius_one_grid};
use marrm_core::{
    marm, marm_inner, marrm, marrm_inner, nelder_mead, rrm, simulate_loss, simulate_terminal_wealth, CrnSamples,
    Criterion, Diagnostic, LognormalLaw, MarketParams, McConfig, OptConfig, Portfolio,
};
use nalgebra::{DMatrix, DVector};

fn market() -> MarketParams {
    MarketParams::two_stock_example()
}

/// For `L^gamma` the log-capital is quadratic in `pi`:
/// `mu - rT - pi'e T + (1 + gamma) |pi' Sigma|^2 T / 2 + gamma sigma^2 / 2`,
/// minimized at `pi* = (Sigma Sigma')^-1 e / (1 + gamma)`.
fn lnorm_optimum(loss: &LognormalLaw, m: &MarketParams, gamma: f64) -> (f64, DVector<f64>) {
    let e = m.excess_drift();
    let cov: DMatrix<f64> = &m.vol * m.vol.transpose();
    let inv = cov.try_inverse().unwrap();
    let pi = &inv * &e / (1.0 + gamma);
    let t = m.horizon;
    let log_cap = loss.m - m.rate * t + 0.5 * gamma * loss.s2 - e.dot(&(&inv * &e)) * t / (2.0 * (1.0 + gamma));
    (log_cap.exp(), pi)
}

#[test]
fn lnorm_matches_closed_form_optimum() {
    let m = market();
    for gamma in [0.25, 1.0, 2.0, 5.0, 10.0] {
        let (cap, pi) = lnorm_optimum(&example_loss(), &m, gamma);
        let res = marrm(&example_loss(), &m, &Criterion::LNorm { gamma }, &OptConfig::default()).unwrap();
        assert!((res.capital / cap - 1.0).abs() < 1e-10, "gamma {gamma}: {} vs {cap}", res.capital);
        for (a, b) in res.portfolio.as_slice().iter().zip(pi.iter()) {
            assert!((a - b).abs() < 1e-4, "gamma {gamma}: {a} vs {b}");
        }
        assert!(res.converged);
    }
}

/// Grid search over `[-5, 5]^2` at step 0.01 refined around its best cell.
fn grid_min(loss: &LognormalLaw, m: &MarketParams, c: &Criterion) -> f64 {
    let eval = |x: f64, y: f64| marrm_inner(loss, m, &Portfolio::new(vec![x, y]).unwrap(), c).unwrap();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in -500..=500 {
        for j in -500..=500 {
            let (x, y) = (i as f64 * 0.01, j as f64 * 0.01);
            let v = eval(x, y);
            if v < best.0 {
                best = (v, x, y);
            }
        }
    }
    let (_, cx, cy) = best;
    for i in -100..=100 {
        for j in -100..=100 {
            let (x, y) = (cx + i as f64 * 1e-4, cy + j as f64 * 1e-4);
            best.0 = best.0.min(eval(x, y));
        }
    }
    best.0
}

#[test]
fn var_and_arar_match_grid_search() {
    let m = market();
    for c in [
        Criterion::VaR { lambda: 0.9 },
        Criterion::VaR { lambda: 0.99 },
        Criterion::ARaR { lambda: 0.8 },
        Criterion::ARaR { lambda: 0.95 },
    ] {
        let g = grid_min(&example_loss(), &m, &c);
        let res = marrm(&example_loss(), &m, &c, &OptConfig::default()).unwrap();
        assert!(res.capital <= g * (1.0 + 1e-12), "{c}: {} > grid {g}", res.capital);
        assert!(res.capital >= g * (1.0 - 1e-6), "{c}: {} << grid {g}", res.capital);
    }
}

#[test]
fn capital_ordering() {
    let m = market();
    let opt = OptConfig::default();
    for lambda in [0.8, 0.9, 0.95, 0.99] {
        let var = marrm(&example_loss(), &m, &Criterion::VaR { lambda }, &opt).unwrap().capital;
        let arar = marrm(&example_loss(), &m, &Criterion::ARaR { lambda }, &opt).unwrap().capital;
        let r = rrm(&example_loss(), &Criterion::ARaR { lambda }, m.rate, m.horizon).unwrap();
        assert!(var < arar && arar < r);
    }
}

#[test]
fn default_box_and_grid_are_reported() {
    let m = market().with_symmetric_entry(0, 1, 0.99 * (0.15f64 * 0.25).sqrt());
    let res = marrm(&example_loss(), &m, &Criterion::ARaR { lambda: 0.95 }, &OptConfig::default()).unwrap();
    assert!(res
        .diagnostics
        .iter()
        .any(|d| matches!(d, Diagnostic::BoxBoundary { .. })));
    assert_eq!(radius_one_grid(3).len(), 10);
}

#[test]
fn var_monetary_inner_matches_return_inner_at_fixed_portfolio() {
    // X - x W <= 0 iff X / (x W) <= 1, so both VaR capitals coincide
    let m = market();
    let pi = Portfolio::new(vec![0.6, 0.4]).unwrap();
    let c = Criterion::VaR { lambda: 0.95 };
    let mc = McConfig::new(400_000, 8).unwrap();
    let x = simulate_loss(&example_loss(), &mc).unwrap();
    let w = simulate_terminal_wealth(&m, &pi, 1.0, &mc).unwrap();
    let mc_cap = marm_inner(&x, &w, &c).unwrap();
    let exact = marrm_inner(&example_loss(), &m, &pi, &c).unwrap();
    assert!((mc_cap / exact - 1.0).abs() < 0.01, "{mc_cap} vs {exact}");
}

#[test]
fn es_monetary_capital_dominates_var() {
    let m = market();
    let pi = Portfolio::new(vec![0.6, 0.4]).unwrap();
    let mc = McConfig::new(100_000, 8).unwrap();
    let x = simulate_loss(&example_loss(), &mc).unwrap();
    let w = simulate_terminal_wealth(&m, &pi, 1.0, &mc).unwrap();
    for lambda in [0.5, 0.9, 0.99] {
        let v = marm_inner(&x, &w, &Criterion::VaR { lambda }).unwrap();
        let e = marm_inner(&x, &w, &Criterion::ARaR { lambda }).unwrap();
        assert!(e >= v);
    }
}

#[test]
fn marm_is_deterministic_given_seed() {
    let opt = OptConfig {
        start_grid: vec![],
        ..OptConfig::default()
    };
    let mc = McConfig::new(20_000, 4).unwrap();
    let c = Criterion::ARaR { lambda: 0.9 };
    let a = marm(&example_loss(), &market(), &c, &mc, &opt).unwrap();
    let b = marm(&example_loss(), &market(), &c, &mc, &opt).unwrap();
    assert_eq!(a.capital.to_bits(), b.capital.to_bits());
    assert_eq!(a.portfolio, b.portfolio);
}

#[test]
fn entropic_marm_flags_sample_dependence() {
    let opt = OptConfig {
        start_grid: vec![],
        ..OptConfig::default()
    };
    let mc = McConfig::new(20_000, 4).unwrap();
    let samples = CrnSamples::generate(&example_loss(), &mc).unwrap();
    let res = marm_on_samples(&samples, &market(), &Criterion::Entropic { gamma: 2.0 }, &opt).unwrap();
    assert!(res.capital.is_finite() && res.capital > 0.0);
    assert!(res
        .diagnostics
        .iter()
        .any(|d| matches!(d, Diagnostic::EntropicDivergence { seed: 4, n_paths: 20_000 })));
    assert!(marm_on_samples(&samples, &market(), &Criterion::LNorm { gamma: 2.0 }, &opt).is_err());
}

#[test]
fn singular_market_monetary_reports_arbitrage() {
    let m = MarketParams {
        vol: DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.2, 0.0]),
        ..market()
    };
    let res = marm(
        &example_loss(),
        &m,
        &Criterion::VaR { lambda: 0.95 },
        &McConfig::new(1000, 1).unwrap(),
        &OptConfig::default(),
    )
    .unwrap();
    assert_eq!(res.capital, 0.0);
    assert!(res.is_arbitrage());
}

#[test]
fn nelder_mead_finds_shifted_quadratic_in_three_dimensions() {
    let target = [1.5, -2.0, 0.25];
    let f = |x: &[f64]| {
        x.iter()
            .zip(target)
            .enumerate()
            .map(|(i, (a, b))| (i as f64 + 1.0) * (a - b) * (a - b))
            .sum::<f64>()
    };
    let out = nelder_mead(&f, &[0.0, 0.0, 0.0], &OptConfig::for_dim(3));
    assert!(out.converged);
    // the value-spread stop at f_tol = 1e-10 leaves |x - x*| ~ sqrt(f_tol)
    assert!(out.min < 1e-9);
    for (a, b) in out.argmin.iter().zip(target) {
        assert!((a - b).abs() < 1e-4);
    }
}
