//! Brute-force experiments on finite probability spaces.
//!
//! Positions are vectors of atom values. Risk measures are computed by
//! enumerating a finite grid of eligible payoffs, which makes every
//! structural identity checkable exactly or up to the grid resolution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{FinitePosition, FiniteSpace, Tolerances, Validate};

/// `coeffs . y <= bound` with nonnegative coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

impl HalfSpace {
    pub fn new(coeffs: Vec<f64>, bound: f64) -> Result<Self> {
        if coeffs.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::Input(
                "half-space coefficients must be >= 0 for a monotone set".into(),
            ));
        }
        Ok(Self { coeffs, bound })
    }

    fn dot(&self, y: &[f64]) -> f64 {
        self.coeffs.iter().zip(y).map(|(a, b)| a * b).sum()
    }
}

/// Monotone acceptance rule for strictly positive positions.
#[derive(Debug, Clone, PartialEq)]
pub enum AcceptancePredicate {
    /// `P(Y <= threshold) >= level`, i.e. the left `level`-quantile of `Y`
    /// is at most `threshold`.
    VarType {
        space: FiniteSpace,
        level: f64,
        threshold: f64,
    },
    /// `Y_j <= upper_j` on every atom.
    Box { upper: Vec<f64> },
    /// `P(Y <= 1) > 0`.
    MassRule { space: FiniteSpace },
    /// Intersection of half-spaces.
    HalfSpaces(Vec<HalfSpace>),
}

impl AcceptancePredicate {
    /// `Y <= 1` on every atom.
    pub fn pointwise_unit(n: usize) -> Self {
        AcceptancePredicate::Box {
            upper: vec![1.0; n],
        }
    }

    /// `{x1 <= 1, x2 <= 1}`.
    pub fn unit_square() -> Self {
        AcceptancePredicate::HalfSpaces(vec![
            HalfSpace {
                coeffs: vec![1.0, 0.0],
                bound: 1.0,
            },
            HalfSpace {
                coeffs: vec![0.0, 1.0],
                bound: 1.0,
            },
        ])
    }

    /// `{x1 <= 1, x2 <= 4 - 3 x1}`.
    pub fn sloped_square() -> Self {
        AcceptancePredicate::HalfSpaces(vec![
            HalfSpace {
                coeffs: vec![1.0, 0.0],
                bound: 1.0,
            },
            HalfSpace {
                coeffs: vec![3.0, 1.0],
                bound: 4.0,
            },
        ])
    }

    pub fn accepts(&self, y: &[f64]) -> bool {
        if y.iter().any(|v| !(*v > 0.0)) {
            return false;
        }
        match self {
            AcceptancePredicate::VarType {
                space,
                level,
                threshold,
            } => space.prob_where(y, |v| v <= *threshold) >= *level,
            AcceptancePredicate::Box { upper } => y.iter().zip(upper).all(|(v, u)| v <= u),
            AcceptancePredicate::MassRule { space } => space.prob_where(y, |v| v <= 1.0) > 0.0,
            AcceptancePredicate::HalfSpaces(hs) => hs.iter().all(|h| h.dot(y) <= h.bound),
        }
    }

    /// Smallest `t > 0` with `accepts(x / t)`, by closed form; `+inf` when
    /// no scaling is acceptable.
    pub fn min_scale(&self, x: &[f64]) -> f64 {
        match self {
            AcceptancePredicate::Box { upper } => x
                .iter()
                .zip(upper)
                .map(|(v, u)| if *u > 0.0 { v / u } else { f64::INFINITY })
                .fold(0.0, f64::max),
            AcceptancePredicate::HalfSpaces(hs) => hs
                .iter()
                .map(|h| {
                    let ax = h.dot(x);
                    if h.bound > 0.0 {
                        ax / h.bound
                    } else if ax <= 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(0.0, f64::max),
            AcceptancePredicate::MassRule { .. } => x.iter().copied().fold(f64::INFINITY, f64::min),
            AcceptancePredicate::VarType {
                space,
                level,
                threshold,
            } => {
                if !(*threshold > 0.0) {
                    return f64::INFINITY;
                }
                let mut atoms: Vec<(f64, f64)> =
                    x.iter().copied().zip(space.probs.iter().copied()).collect();
                atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut mass = 0.0;
                for (v, p) in atoms {
                    mass += p;
                    if mass >= *level {
                        return v / threshold;
                    }
                }
                f64::INFINITY
            }
        }
    }

    /// Componentwise upper bound of the accepted region, when it is bounded.
    pub fn upper_envelope(&self, n: usize) -> Option<Vec<f64>> {
        match self {
            AcceptancePredicate::Box { upper } => Some(upper.clone()),
            AcceptancePredicate::HalfSpaces(hs) => {
                let ub: Vec<f64> = (0..n)
                    .map(|j| {
                        hs.iter()
                            .filter(|h| h.coeffs.get(j).copied().unwrap_or(0.0) > 0.0)
                            .map(|h| h.bound / h.coeffs[j])
                            .fold(f64::INFINITY, f64::min)
                    })
                    .collect();
                ub.iter().all(|v| v.is_finite() && *v > 0.0).then_some(ub)
            }
            _ => None,
        }
    }

    /// Samples dominated pairs `Y <= X` and returns one with `X` accepted
    /// and `Y` rejected, if any.
    pub fn monotonicity_witness(&self, n: usize, trials: usize, seed: u64) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..trials {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..3.0)).collect();
            let y: Vec<f64> = x.iter().map(|v| v * rng.random_range(0.01..=1.0)).collect();
            if self.accepts(&x) && !self.accepts(&y) {
                return Some((x, y));
            }
        }
        None
    }
}

/// Eligible payoffs and their prices.
#[derive(Debug, Clone, PartialEq)]
pub struct SecurityGrid {
    pub payoffs: Vec<FinitePosition>,
    pub prices: Vec<f64>,
}

impl SecurityGrid {
    pub fn new(payoffs: Vec<FinitePosition>, prices: Vec<f64>) -> Result<Self> {
        if payoffs.len() != prices.len() {
            return Err(Error::DimensionMismatch {
                what: "prices",
                expected: payoffs.len(),
                got: prices.len(),
            });
        }
        if payoffs.iter().any(|z| !z.is_strictly_positive()) {
            return Err(Error::Input("payoffs must be strictly positive".into()));
        }
        if prices.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Input("prices must be > 0".into()));
        }
        Ok(Self { payoffs, prices })
    }

    /// Constant payoffs priced at their value.
    pub fn scalars(n_atoms: usize, values: &[f64]) -> Result<Self> {
        Self::new(
            values.iter().map(|v| FinitePosition::constant(n_atoms, *v)).collect(),
            values.to_vec(),
        )
    }

    /// Unit-price payoffs `a + t (b - a)`, `t = 0, h, 2h, .., 1`.
    pub fn segment(a: &[f64], b: &[f64], resolution: f64) -> Result<Self> {
        let steps = (1.0 / resolution).round() as usize;
        let payoffs: Vec<FinitePosition> = (0..=steps)
            .map(|k| {
                let t = k as f64 / steps as f64;
                FinitePosition::new(a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect())
            })
            .collect();
        let n = payoffs.len();
        Self::new(payoffs, vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.payoffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payoffs.is_empty()
    }

    fn all_unit_price(&self) -> bool {
        self.prices.iter().all(|p| *p == 1.0)
    }
}

fn check_loss(loss: &FinitePosition, grid: &SecurityGrid) -> Result<()> {
    if !loss.is_strictly_positive() {
        return Err(Error::Input("loss must be strictly positive".into()));
    }
    if let Some(z) = grid.payoffs.iter().find(|z| z.len() != loss.len()) {
        return Err(Error::DimensionMismatch {
            what: "payoff",
            expected: loss.len(),
            got: z.len(),
        });
    }
    Ok(())
}

/// `min { price(Z) : Z in grid, X / Z accepted }`, `+inf` if empty.
pub fn brute_force_marrm(loss: &FinitePosition, grid: &SecurityGrid, acc: &AcceptancePredicate) -> Result<f64> {
    check_loss(loss, grid)?;
    Ok(grid
        .payoffs
        .iter()
        .zip(&grid.prices)
        .filter(|(z, _)| acc.accepts(&loss.div(z).values))
        .map(|(_, p)| *p)
        .fold(f64::INFINITY, f64::min))
}

/// Two evaluations of the capital over the cone spanned by unit-price payoffs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionOutcome {
    /// `min over Z of the least t with X / (t Z) accepted`, exact per payoff.
    pub direct: f64,
    /// Least `t` on the scale grid with `X / t` in the product set `B . S1`.
    pub reduced: f64,
}

/// Compares the direct minimization over scaled unit-price payoffs with the
/// scan for the least scale putting `X / t` into `B . S1`.
pub fn reduction_check(
    loss: &FinitePosition,
    grid: &SecurityGrid,
    acc: &AcceptancePredicate,
    lambda_grid: &[f64],
) -> Result<ReductionOutcome> {
    check_loss(loss, grid)?;
    if !grid.all_unit_price() {
        return Err(Error::Input("reduction check needs unit-price payoffs".into()));
    }
    let direct = grid
        .payoffs
        .iter()
        .map(|z| acc.min_scale(&loss.div(z).values))
        .fold(f64::INFINITY, f64::min);

    let mut scales = lambda_grid.to_vec();
    scales.sort_by(f64::total_cmp);
    let reduced = scales
        .into_iter()
        .find(|&t| in_product_set(&loss.scale(1.0 / t).values, grid, acc))
        .unwrap_or(f64::INFINITY);
    Ok(ReductionOutcome { direct, reduced })
}

/// `x in B . S1`: some payoff `Z` with `x / Z` accepted.
pub fn in_product_set(x: &[f64], s1: &SecurityGrid, acc: &AcceptancePredicate) -> bool {
    s1.payoffs.iter().any(|z| {
        let y: Vec<f64> = x.iter().zip(&z.values).map(|(a, b)| a / b).collect();
        acc.accepts(&y)
    })
}

/// Positively homogeneous capital `inf { t : x / t in B . S1 }`.
pub fn product_set_gauge(x: &[f64], s1: &SecurityGrid, acc: &AcceptancePredicate) -> f64 {
    s1.payoffs
        .iter()
        .map(|z| {
            let y: Vec<f64> = x.iter().zip(&z.values).map(|(a, b)| a / b).collect();
            acc.min_scale(&y)
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeOutcome {
    Convex { trials: usize },
    /// `p, q` in `B . S1` whose midpoint is not.
    Witness {
        p: Vec<f64>,
        q: Vec<f64>,
        midpoint: Vec<f64>,
    },
}

impl ProbeOutcome {
    pub fn is_convex(&self) -> bool {
        matches!(self, ProbeOutcome::Convex { .. })
    }
}

/// Searches for a non-convexity of `B . S1` on a two-atom space, where `S1`
/// is the segment between two unit-price payoffs.
///
/// Points of `B . S1` are products of a uniform draw from the accepted
/// region (within its upper envelope) and a uniform draw from the segment.
/// Midpoint membership scans the segment at the default resolution; a
/// midpoint counts as outside only if it stays outside after shrinking by
/// `5 * resolution`, so the discretization alone never produces a witness.
pub fn product_set_convexity_probe(
    region: &AcceptancePredicate,
    s1_a: &[f64],
    s1_b: &[f64],
    trials: usize,
    seed: u64,
) -> Result<ProbeOutcome> {
    if s1_a.len() != 2 || s1_b.len() != 2 {
        return Err(Error::Input("convexity probe works on two atoms".into()));
    }
    let ub = region
        .upper_envelope(2)
        .ok_or_else(|| Error::Input("region needs a bounded positive part to sample from".into()))?;
    let res = Tolerances::DEFAULT.segment_resolution;
    let s1 = SecurityGrid::segment(s1_a, s1_b, res)?;
    let shrink = 1.0 - 5.0 * res;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let draw = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
        for _ in 0..10_000 {
            let y = [rng.random_range(0.0..=ub[0]), rng.random_range(0.0..=ub[1])];
            if region.accepts(&y) {
                let t: f64 = rng.random_range(0.0..=1.0);
                return Ok((0..2).map(|j| y[j] * (s1_a[j] + t * (s1_b[j] - s1_a[j]))).collect());
            }
        }
        Err(Error::Input("accepted region has negligible mass in its envelope".into()))
    };

    for _ in 0..trials {
        let p = draw(&mut rng)?;
        let q = draw(&mut rng)?;
        let mid: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
        let shrunk: Vec<f64> = mid.iter().map(|v| v * shrink).collect();
        if !in_product_set(&shrunk, &s1, region) {
            return Ok(ProbeOutcome::Witness { p, q, midpoint: mid });
        }
    }
    Ok(ProbeOutcome::Convex { trials })
}

/// `x`, `y`, `alpha` with `alpha eta(x) + (1 - alpha) eta(y) < eta(alpha x + (1 - alpha) y)`
/// beyond a relative slack, for the gauge of `B . S1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubadditivityWitness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub alpha: f64,
    pub combined: f64,
    pub mixed: f64,
}

/// Random search for a convexity failure of the capital `eta` built from
/// the segment `S1` and the region. Points are drawn in `(0, 3]^2`.
pub fn subadditivity_witness(
    region: &AcceptancePredicate,
    s1_a: &[f64],
    s1_b: &[f64],
    trials: usize,
    seed: u64,
    rel_slack: f64,
) -> Result<Option<SubadditivityWitness>> {
    let s1 = SecurityGrid::segment(s1_a, s1_b, Tolerances::DEFAULT.segment_resolution)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let x = vec![rng.random_range(0.01..3.0), rng.random_range(0.01..3.0)];
        let y = vec![rng.random_range(0.01..3.0), rng.random_range(0.01..3.0)];
        let alpha: f64 = rng.random_range(0.0..1.0);
        if let Some(w) = check_triple(region, &s1, &x, &y, alpha, rel_slack) {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// Evaluates one triple; `Some` when it violates convexity of the gauge.
pub fn check_triple(
    region: &AcceptancePredicate,
    s1: &SecurityGrid,
    x: &[f64],
    y: &[f64],
    alpha: f64,
    rel_slack: f64,
) -> Option<SubadditivityWitness> {
    let ex = product_set_gauge(x, s1, region);
    let ey = product_set_gauge(y, s1, region);
    let m: Vec<f64> = x.iter().zip(y).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
    let em = product_set_gauge(&m, s1, region);
    let combined = alpha * ex + (1.0 - alpha) * ey;
    (combined < em * (1.0 - rel_slack)).then(|| SubadditivityWitness {
        x: x.to_vec(),
        y: y.to_vec(),
        alpha,
        combined,
        mixed: em,
    })
}

/// `f1 = a (1 - lambda x)`: the combination of Expected Shortfalls of the
/// logs of two two-point positions.
///
/// `f2 = (1-x) log(lambda e^a + 1 - lambda) + x log((1-lambda) e^a + lambda)`:
/// the Expected Shortfall of the log of their mixture. Computed as
/// `a + log(lambda + (1-lambda) e^-a)` and so on, finite for any `a > 0`.
pub fn es_log_counterexample(lambda: f64, x: f64, a: f64) -> (f64, f64) {
    let f1 = a * (1.0 - lambda * x);
    let f2 = (1.0 - x) * (a + (lambda + (1.0 - lambda) * (-a).exp()).ln())
        + x * (a + ((1.0 - lambda) + lambda * (-a).exp()).ln());
    (f1, f2)
}

/// Direct evaluation of the same `f2`; overflows once `e^a` does.
pub fn es_log_counterexample_unstable(lambda: f64, x: f64, a: f64) -> (f64, f64) {
    let ea = a.exp();
    let f1 = a * (1.0 - lambda * x);
    let f2 = (1.0 - x) * (lambda * ea + 1.0 - lambda).ln() + x * ((1.0 - lambda) * ea + lambda).ln();
    (f1, f2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualCheck {
    /// `E[X]`.
    pub primal: f64,
    /// `exp(E[Y* log X] - E[Y* log Y*])` at `Y* = X / E[X]`.
    pub dual: f64,
    pub optimal_density: FinitePosition,
    /// Largest dual objective over the density grid.
    pub grid_sup: f64,
}

/// `exp(E[Y log X] - E[Y log Y])` for a density `Y` given through its
/// reweighted probabilities `q = p Y`.
fn dual_objective(q: &[f64], x: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..q.len() {
        if q[i] > 0.0 {
            s += q[i] * (x[i].ln() - (q[i] / p[i]).ln());
        }
    }
    s.exp()
}

/// Entropic dual form of the expectation on a finite space, with a grid
/// search over densities `Y >= 0`, `E[Y] = 1` whose reweighted
/// probabilities are multiples of `1 / grid_steps`.
pub fn entropic_dual_check(x: &FinitePosition, space: &FiniteSpace, grid_steps: usize) -> Result<DualCheck> {
    space.check()?;
    x.check_positive_on(space)?;
    let p = &space.probs;
    let primal = space.expectation(&x.values);
    let ystar: Vec<f64> = x.values.iter().map(|v| v / primal).collect();
    let mut s = 0.0;
    for i in 0..p.len() {
        s += p[i] * ystar[i] * (x.values[i].ln() - ystar[i].ln());
    }
    let dual = s.exp();

    let mut grid_sup = 0.0f64;
    let mut counts = vec![0usize; p.len()];
    let mut q = vec![0.0; p.len()];
    visit_compositions(grid_steps, &mut counts, 0, &mut |c| {
        for (qi, ci) in q.iter_mut().zip(c) {
            *qi = *ci as f64 / grid_steps as f64;
        }
        grid_sup = grid_sup.max(dual_objective(&q, &x.values, p));
    });

    Ok(DualCheck {
        primal,
        dual,
        optimal_density: FinitePosition::new(ystar),
        grid_sup,
    })
}

fn visit_compositions(remaining: usize, counts: &mut [usize], i: usize, f: &mut impl FnMut(&[usize])) {
    let n = counts.len();
    if i == n - 1 {
        counts[i] = remaining;
        f(counts);
        return;
    }
    for k in 0..=remaining {
        counts[i] = k;
        visit_compositions(remaining - k, counts, i + 1, f);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfConvOutcome {
    pub marrm: f64,
    pub infconv: f64,
}

/// Multiplicative inf-convolution `inf { f(Y) h(V) : X = Y V }` of the
/// acceptance indicator `f` (1 on accepted, `+inf` otherwise) and the
/// price `h` on the grid, next to [`brute_force_marrm`].
pub fn infconv_check(loss: &FinitePosition, grid: &SecurityGrid, acc: &AcceptancePredicate) -> Result<InfConvOutcome> {
    let marrm = brute_force_marrm(loss, grid, acc)?;
    let indicator = |y: &FinitePosition| if acc.accepts(&y.values) { 1.0 } else { f64::INFINITY };
    let infconv = grid
        .payoffs
        .iter()
        .zip(&grid.prices)
        .map(|(v, h)| indicator(&loss.div(v)) * h)
        .fold(f64::INFINITY, f64::min);
    Ok(InfConvOutcome { marrm, infconv })
}

/// Discretization of `Uniform(0,1)` into `bins` intervals with edges
/// geometric between `smallest_edge` and 1 (the first bin is
/// `[0, smallest_edge]`). Atom probabilities are the bin widths and atom
/// values the geometric bin midpoints (half the edge for the first bin),
/// so the law puts mass arbitrarily close to zero.
pub fn uniform_discretization(bins: usize, smallest_edge: f64) -> Result<(FiniteSpace, FinitePosition)> {
    if bins < 2 || !(smallest_edge > 0.0 && smallest_edge < 1.0) {
        return Err(Error::Input("need >= 2 bins and a smallest edge in (0,1)".into()));
    }
    let k = bins - 1;
    let edges: Vec<f64> = std::iter::once(0.0)
        .chain((0..=k).map(|i| smallest_edge.powf(1.0 - i as f64 / k as f64)))
        .collect();
    let mut probs: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
    let sum: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= sum;
    }
    let values = edges
        .windows(2)
        .map(|w| if w[0] == 0.0 { 0.5 * w[1] } else { (w[0] * w[1]).sqrt() })
        .collect();
    Ok((FiniteSpace::new(probs)?, FinitePosition::new(values)))
}

/// Capital of the discretized uniform loss under `P(Y <= 1) > 0` with the
/// bank account priced at face value, on scalars `10^-j/10`, `j = 0..=80`.
pub fn arbitrage_demo() -> Result<f64> {
    let (space, loss) = uniform_discretization(100, 1e-7)?;
    let scalars: Vec<f64> = (0..=80).map(|j| 10f64.powf(-(j as f64) / 10.0)).collect();
    let grid = SecurityGrid::scalars(loss.len(), &scalars)?;
    brute_force_marrm(&loss, &grid, &AcceptancePredicate::MassRule { space })
}
