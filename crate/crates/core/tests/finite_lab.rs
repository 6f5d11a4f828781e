//! Finite-space experiments against hand-derived values.

use marrm_core::checks::{run_suite, Mutations, SuiteConfig, SEGMENT};
use marrm_core::finite::{
    arbitrage_demo, brute_force_marrm, entropic_dual_check, es_log_counterexample, infconv_check,
    product_set_convexity_probe, reduction_check, AcceptancePredicate, HalfSpace, SecurityGrid,
};
use marrm_core::{FinitePosition, FiniteSpace, MarketParams, OptConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Least `lambda` with `X / (lambda Z(t)) <= 1` over the continuous segment
/// `Z(t) = (1 - 0.9 t, 1 + t)`, for `x1 < x2`: both constraints bind where
/// `x1 (1 + t) = x2 (1 - 0.9 t)`.
fn left_capital_exact(x1: f64, x2: f64) -> f64 {
    let t = (x2 - x1) / (x1 + 0.9 * x2);
    let t = t.clamp(0.0, 1.0);
    (x1 / (1.0 - 0.9 * t)).max(x2 / (1.0 + t))
}

#[test]
fn left_configuration_brute_force_and_reduction_agree() {
    let (a, b) = SEGMENT;
    let x = FinitePosition::new(vec![0.8, 1.6]);
    let exact = left_capital_exact(0.8, 1.6);
    let acc = AcceptancePredicate::unit_square();

    // scaled segment payoffs lambda Z priced at lambda
    let seg = SecurityGrid::segment(&a, &b, 1e-3).unwrap();
    let mut payoffs = Vec::new();
    let mut prices = Vec::new();
    for k in 1000..=1500 {
        let lambda = k as f64 * 1e-3;
        for z in &seg.payoffs {
            payoffs.push(z.scale(lambda));
            prices.push(lambda);
        }
    }
    let brute = brute_force_marrm(&x, &SecurityGrid::new(payoffs, prices).unwrap(), &acc).unwrap();

    let lambdas: Vec<f64> = (1..=5000).map(|k| k as f64 * 1e-3).collect();
    let red = reduction_check(&x, &seg, &acc, &lambdas).unwrap();

    assert!((brute - exact).abs() <= 2e-3, "{brute} vs {exact}");
    assert!((red.direct - exact).abs() <= 1e-3, "{} vs {exact}", red.direct);
    assert!((red.reduced - red.direct).abs() <= 1e-3);
    assert!((brute - red.reduced).abs() <= 1e-3 + 1e-12);
}

#[test]
fn scalar_security_gives_max_atom() {
    let x = FinitePosition::new(vec![0.3, 2.7, 1.1]);
    let grid = SecurityGrid::new(vec![FinitePosition::constant(3, 1.0)], vec![1.0]).unwrap();
    let lambdas: Vec<f64> = (1..=4000).map(|k| k as f64 * 1e-3).collect();
    let r = reduction_check(&x, &grid, &AcceptancePredicate::pointwise_unit(3), &lambdas).unwrap();
    assert_eq!(r.direct, 2.7);
    assert!((r.reduced - 2.7).abs() <= 1e-3);
}

#[test]
fn constant_loss_under_scalar_cover() {
    let scalars: Vec<f64> = (1..=1000).map(|k| 0.1 * k as f64).collect();
    let grid = SecurityGrid::scalars(2, &scalars).unwrap();
    for c in [0.05, 0.1, 2.71, 57.0, 99.95] {
        let x = FinitePosition::constant(2, c);
        let want = scalars.iter().copied().find(|s| *s >= c).unwrap();
        let r = infconv_check(&x, &grid, &AcceptancePredicate::pointwise_unit(2)).unwrap();
        assert_eq!(r.marrm, want);
        assert_eq!(r.infconv, want);
    }
}

#[test]
fn uniform_loss_has_zero_capital() {
    assert!(arbitrage_demo().unwrap() <= 1e-6);
}

#[test]
fn probes_on_both_configurations() {
    let (a, b) = SEGMENT;
    let left = product_set_convexity_probe(&AcceptancePredicate::unit_square(), &a, &b, 100_000, 7).unwrap();
    assert!(left.is_convex());
    let right = product_set_convexity_probe(&AcceptancePredicate::sloped_square(), &a, &b, 100_000, 7).unwrap();
    assert!(!right.is_convex());
}

#[test]
fn degenerate_segment_is_convex() {
    let z = [0.7, 1.3];
    for acc in [AcceptancePredicate::unit_square(), AcceptancePredicate::sloped_square()] {
        let out = product_set_convexity_probe(&acc, &z, &z, 20_000, 11).unwrap();
        assert!(out.is_convex(), "{out:?}");
    }
}

#[test]
fn es_log_counterexample_values() {
    let (f1, f2) = es_log_counterexample(0.75, 0.5, 100.0);
    assert!((f1 - 62.5).abs() <= 1e-9);
    assert!(f2 > 99.1);

    let (g1, g2) = es_log_counterexample(0.75, 0.5, 1.0);
    let e = 1f64.exp();
    let direct = 0.5 * (0.75 * e + 0.25).ln() + 0.5 * (0.25 * e + 0.75).ln();
    assert!((g1 - 0.625).abs() < 1e-15);
    assert!((g2 - direct).abs() < 1e-14);
    assert!((g2 - 0.5927).abs() < 1e-4 && g2 < g1);

    let (h1, h2) = es_log_counterexample(0.75, 0.5, 1e-12);
    assert!(h1.abs() < 1e-11 && h2.abs() < 1e-11);
}

#[test]
fn es_log_f1_linear_and_f2_nonnegative() {
    for lambda in [0.55, 0.75, 0.9, 0.99] {
        for x in [0.01, 0.3, 0.5, 0.9] {
            let slope = es_log_counterexample(lambda, x, 1.0).0;
            for a in [0.001, 0.5, 7.0, 100.0, 1e4] {
                let (f1, f2) = es_log_counterexample(lambda, x, a);
                assert!((f1 - slope * a).abs() <= 1e-12 * a.max(1.0));
                assert!(f2 >= 0.0 && f2.is_finite());
            }
        }
    }
}

#[test]
fn entropic_dual_two_atoms() {
    let space = FiniteSpace::new(vec![0.5, 0.5]).unwrap();
    let d = entropic_dual_check(&FinitePosition::new(vec![1.0, 3.0]), &space, 1000).unwrap();
    let closed = (0.75 * 3f64.ln() - (0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln())).exp();
    assert!((d.primal - 2.0).abs() < 1e-15);
    assert!((d.dual - closed).abs() < 1e-14 && (closed - 2.0).abs() < 1e-14);
    assert!(d.grid_sup <= d.dual + 1e-6);
    assert!(d.grid_sup >= d.dual - 1e-12, "Y* sits on the grid");
    assert_eq!(d.optimal_density.values, vec![0.5, 1.5]);

    let one = entropic_dual_check(&FinitePosition::constant(3, 1.0), &FiniteSpace::uniform(3), 30).unwrap();
    assert!((one.primal - 1.0).abs() < 1e-15 && (one.dual - 1.0).abs() < 1e-15);
    assert!(one.optimal_density.values.iter().all(|y| (y - 1.0).abs() < 1e-15));
}

#[test]
fn entropic_dual_random_five_atoms() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let raw: Vec<f64> = (0..5).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let mut probs: Vec<f64> = raw.iter().map(|v| v / s).collect();
        probs[4] = 1.0 - probs[..4].iter().sum::<f64>();
        let x = FinitePosition::new((0..5).map(|_| rng.random_range(0.2..5.0)).collect());
        let d = entropic_dual_check(&x, &FiniteSpace::new(probs).unwrap(), 20).unwrap();
        assert!((d.primal - d.dual).abs() <= 1e-10);
        assert!(d.grid_sup <= d.dual + 1e-6);
    }
}

#[test]
fn infconv_on_left_configuration_and_random_instances() {
    let (a, b) = SEGMENT;
    let seg = SecurityGrid::segment(&a, &b, 1e-3).unwrap();
    let r = infconv_check(&FinitePosition::new(vec![0.9, 0.95]), &seg, &AcceptancePredicate::unit_square()).unwrap();
    assert_eq!(r.marrm, 1.0);
    assert_eq!(r.marrm, r.infconv);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let payoffs = (0..4)
            .map(|_| FinitePosition::new((0..3).map(|_| rng.random_range(0.2..3.0)).collect()))
            .collect();
        let prices = (0..4).map(|_| rng.random_range(0.5..2.0)).collect();
        let grid = SecurityGrid::new(payoffs, prices).unwrap();
        let acc = AcceptancePredicate::HalfSpaces(vec![HalfSpace::new(
            (0..3).map(|_| rng.random_range(0.0..1.0)).collect(),
            rng.random_range(0.5..2.0),
        )
        .unwrap()]);
        let x = FinitePosition::new((0..3).map(|_| rng.random_range(0.2..3.0)).collect());
        let r = infconv_check(&x, &grid, &acc).unwrap();
        assert_eq!(r.marrm, r.infconv);
    }
}

#[test]
fn predicates_pass_monotonicity_sampling() {
    let space = FiniteSpace::uniform(3);
    let preds = [
        AcceptancePredicate::VarType {
            space: space.clone(),
            level: 2.0 / 3.0,
            threshold: 1.2,
        },
        AcceptancePredicate::pointwise_unit(3),
        AcceptancePredicate::MassRule { space },
        AcceptancePredicate::HalfSpaces(vec![HalfSpace::new(vec![1.0, 2.0, 0.5], 3.0).unwrap()]),
    ];
    for p in &preds {
        assert_eq!(p.monotonicity_witness(3, 1000, 3), None, "{p:?}");
    }
    assert!(HalfSpace::new(vec![1.0, -0.1], 1.0).is_err());
}

#[test]
fn full_suite_passes_and_mutation_is_caught() {
    let cfg = SuiteConfig::default();
    let market = MarketParams::two_stock_example();
    let opt = OptConfig::default();
    let report = run_suite(&cfg, &market, &opt).unwrap();
    for line in &report {
        assert!(line.passed, "{line}");
    }

    let mutated = SuiteConfig {
        probe_trials: 1000,
        random_instances: 5,
        mutations: Mutations { naive_es_log: true },
        ..SuiteConfig::default()
    };
    let report = run_suite(&mutated, &market, &opt).unwrap();
    let es = report.iter().find(|o| o.name == "es-log counterexample").unwrap();
    assert!(!es.passed, "{es}");
}
