//! Numerical property suite: structural identities of the solvers and the
//! finite-space experiments, each reported with a witness on failure.

use std::fmt;

use crate::error::Result;
use crate::finite::{
    self, check_triple, entropic_dual_check, es_log_counterexample, es_log_counterexample_unstable,
    infconv_check, product_set_convexity_probe, reduction_check, AcceptancePredicate, HalfSpace,
    ProbeOutcome, SecurityGrid,
};
use crate::solver::{marrm, marrm_inner, rrm, OptConfig};
use crate::types::{Criterion, FinitePosition, FiniteSpace, LognormalLaw, MarketParams, Portfolio, Tolerances};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Summary on success, witness on failure.
    pub detail: String,
}

impl fmt::Display for PropertyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

fn outcome(name: &'static str, passed: bool, detail: String) -> PropertyOutcome {
    PropertyOutcome { name, passed, detail }
}

/// Deliberate faults for testing the suite itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Mutations {
    /// Evaluate the counterexample without log-sum-exp stabilization.
    pub naive_es_log: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub probe_trials: usize,
    pub random_instances: usize,
    pub mutations: Mutations,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 20240601,
            probe_trials: 100_000,
            random_instances: 100,
            mutations: Mutations::default(),
        }
    }
}

/// Loss `LN(1.5, 0.2^2)`.
pub fn example_loss() -> LognormalLaw {
    LognormalLaw::from_mean_sd(1.5, 0.2).expect("valid constants")
}

fn closed_form_criteria() -> [Criterion; 3] {
    [
        Criterion::VaR { lambda: 0.95 },
        Criterion::ARaR { lambda: 0.95 },
        Criterion::LNorm { gamma: 2.0 },
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Scaling the loss by `c` scales every capital by `c`.
pub fn positive_homogeneity(market: &MarketParams, opt: &OptConfig) -> Result<Vec<PropertyOutcome>> {
    let loss = example_loss();
    let pi = Portfolio::new(vec![0.4, 0.3])?;
    let mut closed = 0.0f64;
    let mut outer = 0.0f64;
    for c in closed_form_criteria() {
        let base_r = rrm(&loss, &c, market.rate, market.horizon)?;
        let base_i = marrm_inner(&loss, market, &pi, &c)?;
        let base_o = marrm(&loss, market, &c, opt)?.capital;
        for k in [0.5, 2.0, 10.0] {
            let l = loss.scaled(k)?;
            closed = closed.max(rel(rrm(&l, &c, market.rate, market.horizon)?, k * base_r));
            closed = closed.max(rel(marrm_inner(&l, market, &pi, &c)?, k * base_i));
            outer = outer.max(rel(marrm(&l, market, &c, opt)?.capital, k * base_o));
        }
    }
    Ok(vec![
        outcome(
            "homogeneity (closed forms)",
            closed <= 1e-12,
            format!("max relative error {closed:.3e} (tol 1e-12)"),
        ),
        outcome(
            "homogeneity (optimized)",
            outer <= opt.f_tol.max(1e-12) * 10.0,
            format!("max relative error {outer:.3e} (tol {:.1e})", opt.f_tol * 10.0),
        ),
    ])
}

/// `m -> marrm_inner` increases by exactly `e^delta`.
pub fn monotonicity_in_mu(market: &MarketParams) -> Result<PropertyOutcome> {
    let loss = example_loss();
    let pi = Portfolio::new(vec![0.6, 0.4])?;
    let mut worst = 0.0f64;
    let mut increasing = true;
    for c in closed_form_criteria() {
        let base = marrm_inner(&loss, market, &pi, &c)?;
        for delta in [-1.0, -0.1, 1e-6, 0.1, 1.0] {
            let v = marrm_inner(&LognormalLaw::new(loss.m + delta, loss.s2)?, market, &pi, &c)?;
            increasing &= (v > base) == (delta > 0.0);
            worst = worst.max(rel(v, base * f64::exp(delta)));
        }
    }
    Ok(outcome(
        "monotonicity in mu",
        increasing && worst <= 1e-12,
        format!("strictly increasing: {increasing}; max relative error {worst:.3e}"),
    ))
}

/// `marrm(X^alpha) <= marrm(X)^alpha + f_tol`.
pub fn log_star_shapedness(market: &MarketParams, opt: &OptConfig) -> Result<PropertyOutcome> {
    let loss = example_loss();
    let mut worst = f64::NEG_INFINITY;
    let mut witness = String::new();
    for c in closed_form_criteria() {
        let full = marrm(&loss, market, &c, opt)?.capital;
        for alpha in [0.25, 0.5, 0.75] {
            let part = marrm(&loss.powered(alpha)?, market, &c, opt)?.capital;
            let excess = part - full.powf(alpha);
            if excess > worst {
                worst = excess;
                witness = format!("{c}, alpha={alpha}: {part:.12} vs {:.12}", full.powf(alpha));
            }
        }
    }
    Ok(outcome(
        "log-star-shapedness",
        worst <= opt.f_tol,
        format!("max excess {worst:.3e} at {witness}"),
    ))
}

pub fn es_log_property(mutations: Mutations) -> PropertyOutcome {
    let eval = if mutations.naive_es_log {
        es_log_counterexample_unstable
    } else {
        es_log_counterexample
    };
    let (f1, f2) = eval(0.75, 0.5, 100.0);
    let (_, g2) = eval(0.75, 0.5, 1000.0);
    let ok = (f1 - 62.5).abs() <= 1e-9 && f2 > 99.1 && g2.is_finite() && g2 <= 1000.0;
    let detail = if ok {
        format!("f1={f1}, f2={f2:.6}")
    } else {
        format!("f1={f1}, f2={f2}, f2(a=1000)={g2}")
    };
    outcome("es-log counterexample", ok, detail)
}

/// Left and right configurations share the segment `(1,1)-(0.1,2)`.
pub const SEGMENT: ([f64; 2], [f64; 2]) = ([1.0, 1.0], [0.1, 2.0]);

pub fn convexity_probes(cfg: &SuiteConfig) -> Result<Vec<PropertyOutcome>> {
    let (a, b) = SEGMENT;
    let left = product_set_convexity_probe(&AcceptancePredicate::unit_square(), &a, &b, cfg.probe_trials, cfg.seed)?;
    let right =
        product_set_convexity_probe(&AcceptancePredicate::sloped_square(), &a, &b, cfg.probe_trials, cfg.seed)?;
    let describe = |p: &ProbeOutcome| match p {
        ProbeOutcome::Convex { trials } => format!("no witness in {trials} trials"),
        ProbeOutcome::Witness { p, q, midpoint } => {
            format!("witness p={p:?} q={q:?} midpoint={midpoint:?}")
        }
    };
    Ok(vec![
        outcome("product set convex (unit square)", left.is_convex(), describe(&left)),
        outcome("product set non-convex (sloped square)", !right.is_convex(), describe(&right)),
    ])
}

/// Convexity failure of the capital exactly where the product set is not
/// convex: the right probe witness gives a violating triple, the left
/// configuration gives none among random triples.
pub fn convexity_linkage(cfg: &SuiteConfig) -> Result<PropertyOutcome> {
    let (a, b) = SEGMENT;
    let s1 = SecurityGrid::segment(&a, &b, Tolerances::DEFAULT.segment_resolution)?;
    let right = AcceptancePredicate::sloped_square();
    let slack = 10.0 * Tolerances::DEFAULT.segment_resolution;
    let right_triple = match product_set_convexity_probe(&right, &a, &b, cfg.probe_trials, cfg.seed)? {
        ProbeOutcome::Witness { p, q, .. } => check_triple(&right, &s1, &p, &q, 0.5, slack),
        ProbeOutcome::Convex { .. } => None,
    };
    let left = finite::subadditivity_witness(
        &AcceptancePredicate::unit_square(),
        &a,
        &b,
        cfg.probe_trials,
        cfg.seed,
        slack,
    )?;
    let ok = right_triple.is_some() && left.is_none();
    let detail = match (&right_triple, &left) {
        (Some(w), None) => format!(
            "right: alpha eta(x)+(1-alpha) eta(y)={:.4} < eta(mix)={:.4}; left: none",
            w.combined, w.mixed
        ),
        _ => format!("right witness {right_triple:?}, left witness {left:?}"),
    };
    Ok(outcome("capital convex iff product set convex", ok, detail))
}

/// Uniform random monotone half-space set on `n` atoms: `k` constraints
/// with coefficients in `[0, 1)`, at least one positive per atom so the
/// set is bounded.
pub fn random_half_spaces(rng: &mut ChaCha8Rng, n: usize, k: usize) -> AcceptancePredicate {
    let mut hs: Vec<HalfSpace> = (0..k)
        .map(|_| HalfSpace {
            coeffs: (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
            bound: rng.random_range(0.5..2.0),
        })
        .collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        hs.push(HalfSpace {
            coeffs: e,
            bound: rng.random_range(0.5..3.0),
        });
    }
    AcceptancePredicate::HalfSpaces(hs)
}

fn random_positive(rng: &mut ChaCha8Rng, n: usize) -> FinitePosition {
    FinitePosition::new((0..n).map(|_| rng.random_range(0.1..3.0)).collect())
}

/// Step `h` scale grid `h, 2h, ..` up to `max`.
pub fn scale_grid(h: f64, max: f64) -> Vec<f64> {
    let n = (max / h).ceil() as usize;
    (1..=n).map(|k| k as f64 * h).collect()
}

/// Direct and reduced evaluations agree within the scale grid step.
pub fn reduction_property(cfg: &SuiteConfig) -> Result<PropertyOutcome> {
    let h = 1e-3;
    let (a, b) = SEGMENT;
    let s1 = SecurityGrid::segment(&a, &b, Tolerances::DEFAULT.segment_resolution)?;
    let x = FinitePosition::new(vec![0.8, 1.6]);
    let ex = reduction_check(&x, &s1, &AcceptancePredicate::unit_square(), &scale_grid(h, 5.0))?;
    let agree = |d: f64, r: f64| r >= d - 1e-12 && r - d <= h + 1e-12;
    let mut worst = (ex.reduced - ex.direct).abs();
    let mut ok = agree(ex.direct, ex.reduced);
    let mut witness = String::new();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5245);
    let lambdas = scale_grid(h, 20.0);
    for trial in 0..cfg.random_instances {
        let acc = random_half_spaces(&mut rng, 3, 2);
        let s1 = SecurityGrid::new((0..5).map(|_| random_positive(&mut rng, 3)).collect(), vec![1.0; 5])?;
        let x = random_positive(&mut rng, 3);
        let r = reduction_check(&x, &s1, &acc, &lambdas)?;
        if r.direct > 20.0 {
            continue;
        }
        worst = worst.max(r.reduced - r.direct);
        if !agree(r.direct, r.reduced) && ok {
            ok = false;
            witness = format!(" trial {trial}: direct {} reduced {}", r.direct, r.reduced);
        }
    }
    Ok(outcome(
        "reduction identity",
        ok,
        format!(
            "example direct {:.6} reduced {:.6}; max gap {worst:.3e} (step {h}){witness}",
            ex.direct, ex.reduced
        ),
    ))
}

/// `E[X]` against its entropic dual on random 5-atom spaces.
pub fn entropic_dual_property(cfg: &SuiteConfig) -> Result<PropertyOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x4455);
    let mut gap = 0.0f64;
    let mut over = f64::NEG_INFINITY;
    for _ in 0..cfg.random_instances {
        let raw: Vec<f64> = (0..5).map(|_| rng.random_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let mut probs: Vec<f64> = raw.iter().map(|p| p / sum).collect();
        let drift: f64 = 1.0 - probs.iter().sum::<f64>();
        probs[0] += drift;
        let space = FiniteSpace::new(probs)?;
        let x = random_positive(&mut rng, 5);
        let d = entropic_dual_check(&x, &space, 40)?;
        gap = gap.max((d.primal - d.dual).abs());
        over = over.max(d.grid_sup - d.dual);
    }
    Ok(outcome(
        "entropic dual identity",
        gap <= 1e-10 && over <= 1e-6,
        format!("max |primal-dual| {gap:.3e}; max grid excess {over:.3e}"),
    ))
}

pub fn arbitrage_property() -> Result<PropertyOutcome> {
    let v = finite::arbitrage_demo()?;
    Ok(outcome(
        "acceptability arbitrage (uniform loss)",
        v < 1e-6,
        format!("capital {v:.3e}"),
    ))
}

/// Inf-convolution identity on the left example and random instances.
pub fn infconv_property(cfg: &SuiteConfig) -> Result<PropertyOutcome> {
    let (a, b) = SEGMENT;
    let s1 = SecurityGrid::segment(&a, &b, Tolerances::DEFAULT.segment_resolution)?;
    let x = FinitePosition::new(vec![0.8, 1.6]);
    let mut cases = vec![(x, s1, AcceptancePredicate::unit_square())];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x4943);
    for _ in 0..cfg.random_instances {
        let prices: Vec<f64> = (0..6).map(|_| rng.random_range(0.5..2.0)).collect();
        let payoffs = (0..6).map(|_| random_positive(&mut rng, 3)).collect();
        cases.push((
            random_positive(&mut rng, 3),
            SecurityGrid::new(payoffs, prices)?,
            random_half_spaces(&mut rng, 3, 2),
        ));
    }
    for (x, g, acc) in &cases {
        let r = infconv_check(x, g, acc)?;
        if r.marrm != r.infconv {
            return Ok(outcome(
                "inf-convolution identity",
                false,
                format!("loss {:?}: marrm {} infconv {}", x.values, r.marrm, r.infconv),
            ));
        }
    }
    Ok(outcome(
        "inf-convolution identity",
        true,
        format!("{} instances equal", cases.len()),
    ))
}

/// Brute-force capital never decreases along dominated losses.
pub fn brute_force_monotonicity(cfg: &SuiteConfig) -> Result<PropertyOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x4d4f);
    for _ in 0..cfg.random_instances {
        let acc = random_half_spaces(&mut rng, 3, 2);
        let prices: Vec<f64> = (0..8).map(|_| rng.random_range(0.5..2.0)).collect();
        let g = SecurityGrid::new((0..8).map(|_| random_positive(&mut rng, 3)).collect(), prices)?;
        let big = random_positive(&mut rng, 3);
        let small = FinitePosition::new(big.values.iter().map(|v| v * rng.random_range(0.1..=1.0)).collect());
        let (vs, vb) = (
            finite::brute_force_marrm(&small, &g, &acc)?,
            finite::brute_force_marrm(&big, &g, &acc)?,
        );
        if vs > vb {
            return Ok(outcome(
                "brute-force monotonicity",
                false,
                format!("{:?} <= {:?} but {vs} > {vb}", small.values, big.values),
            ));
        }
    }
    Ok(outcome(
        "brute-force monotonicity",
        true,
        format!("{} dominated pairs", cfg.random_instances),
    ))
}

/// Finite-space experiments followed by the solver properties on `market`.
pub fn run_suite(cfg: &SuiteConfig, market: &MarketParams, opt: &OptConfig) -> Result<Vec<PropertyOutcome>> {
    let mut out = vec![es_log_property(cfg.mutations)];
    out.extend(convexity_probes(cfg)?);
    out.push(convexity_linkage(cfg)?);
    out.push(reduction_property(cfg)?);
    out.push(entropic_dual_property(cfg)?);
    out.push(arbitrage_property()?);
    out.push(infconv_property(cfg)?);
    out.push(brute_force_monotonicity(cfg)?);
    out.extend(positive_homogeneity(market, opt)?);
    out.push(monotonicity_in_mu(market)?);
    out.push(log_star_shapedness(market, opt)?);
    Ok(out)
}
