//! Independent checks on the bounds.
//!
//! Nothing here calls into the root finders or the sharp constants except
//! [`sharpness_search_two_point`], whose job is to compare against them.
//! Moments are computed from first principles: survival sums for
//! finite-support laws, quadrature against the Beta density for quantile
//! functions, and seeded Monte Carlo.

pub mod quadrature;
pub mod sweeps;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beta_kernel::{ln_order_pdf, order_sf, OrderStatParams};
use crate::error::{domain, Result};
use crate::report::decimal;
use crate::sharp_bounds::solve_rho;

/// Finite-support nonnegative law with strictly increasing atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
}

pub const PROB_SUM_TOL: f64 = 1e-12;

impl DiscreteDistribution {
    /// `atoms` are `(value, probability)` pairs.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return domain("discrete law needs at least one atom");
        }
        let (values, probs): (Vec<f64>, Vec<f64>) = atoms.into_iter().unzip();
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return domain("atom values must be finite and nonnegative");
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return domain("atom values must be strictly increasing");
        }
        if probs.iter().any(|p| !(*p > 0.0)) {
            return domain("atom probabilities must be positive");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return domain(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self { values, probs })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.atoms().map(|(x, p)| x * p).sum()
    }

    /// `E X^alpha`.
    pub fn moment(&self, alpha: f64) -> f64 {
        self.atoms().map(|(x, p)| x.powf(alpha) * p).sum()
    }

    /// Multiplies every atom by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|x| x * c).collect(),
            probs: self.probs.clone(),
        }
    }

    /// `(P(X < x_j), P(X >= x_j))` for each atom, each side summed
    /// separately so neither loses relative precision to cancellation.
    pub fn split_masses(&self) -> Vec<(f64, f64)> {
        let m = self.probs.len();
        let mut below = vec![0.0; m];
        let mut at_or_above = vec![0.0; m];
        for j in 1..m {
            below[j] = below[j - 1] + self.probs[j - 1];
        }
        let mut acc = 0.0;
        for j in (0..m).rev() {
            acc += self.probs[j];
            at_or_above[j] = acc;
        }
        below.into_iter().zip(at_or_above).collect()
    }

    /// `P(X >= x)`.
    pub fn tail_at_or_above(&self, x: f64) -> f64 {
        self.atoms().filter(|(v, _)| *v >= x).map(|(_, p)| p).sum()
    }
}

/// Nondecreasing left-continuous step function on `(0,1)`:
/// `g = d_1 + ... + d_j` on `(s_{j-1}, s_j]`, `s_0 = 0`, `s_k = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    /// `0, s_1, ..., s_{k-1}, 1`.
    breakpoints: Vec<f64>,
    /// `d_1, ..., d_k`, all nonnegative.
    increments: Vec<f64>,
}

impl StepFunction {
    /// `interior` holds `s_1 < ... < s_{k-1}` strictly inside `(0,1)`.
    pub fn new(interior: &[f64], increments: Vec<f64>) -> Result<Self> {
        if increments.len() != interior.len() + 1 {
            return domain(format!(
                "{} breakpoints need {} increments, got {}",
                interior.len(),
                interior.len() + 1,
                increments.len()
            ));
        }
        if increments.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return domain("increments must be finite and nonnegative");
        }
        let mut breakpoints = Vec::with_capacity(interior.len() + 2);
        breakpoints.push(0.0);
        breakpoints.extend_from_slice(interior);
        breakpoints.push(1.0);
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return domain("breakpoints must be strictly increasing inside (0,1)");
        }
        Ok(Self {
            breakpoints,
            increments,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Cumulative levels `d_1, d_1 + d_2, ...`.
    pub fn levels(&self) -> Vec<f64> {
        self.increments
            .iter()
            .scan(0.0, |acc, d| {
                *acc += d;
                Some(*acc)
            })
            .collect()
    }

    /// `∫_0^1 g = sum_j (1 - s_{j-1}) d_j`.
    pub fn integral(&self) -> f64 {
        self.increments
            .iter()
            .zip(&self.breakpoints)
            .map(|(d, s)| (1.0 - s) * d)
            .sum()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let levels = self.levels();
        let j = self.breakpoints[1..].partition_point(|s| *s < t);
        levels[j.min(levels.len() - 1)]
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    #[serde(with = "decimal")]
    pub mean: f64,
    #[serde(with = "decimal")]
    pub stderr: f64,
    pub trials: u64,
}

/// A nondecreasing nonnegative quantile function on `(0,1)`.
pub trait QuantileFunction {
    fn quantile(&self, u: f64) -> f64;

    /// Points in `(0,1)` where the function is not smooth.
    fn knots(&self) -> Vec<f64> {
        Vec::new()
    }

    /// The finite-support law, when the quantile is a step function.
    fn as_discrete(&self) -> Option<DiscreteDistribution> {
        None
    }
}

impl QuantileFunction for DiscreteDistribution {
    fn quantile(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for (x, p) in self.atoms() {
            acc += p;
            if u <= acc {
                return x;
            }
        }
        *self.values.last().expect("nonempty")
    }

    fn as_discrete(&self) -> Option<DiscreteDistribution> {
        Some(self.clone())
    }
}

/// Adapts a closure to [`QuantileFunction`].
pub struct FnQuantile<F> {
    f: F,
    knots: Vec<f64>,
}

impl<F: Fn(f64) -> f64> FnQuantile<F> {
    pub fn new(f: F) -> Self {
        Self { f, knots: Vec::new() }
    }

    pub fn with_knots(f: F, knots: Vec<f64>) -> Self {
        Self { f, knots }
    }
}

impl<F: Fn(f64) -> f64> QuantileFunction for FnQuantile<F> {
    fn quantile(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    fn knots(&self) -> Vec<f64> {
        self.knots.clone()
    }
}

fn check_moment_args(k: u32, n: u32, alpha: f64) -> Result<OrderStatParams> {
    let params = OrderStatParams::new(k, n)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return domain(format!("alpha must be positive, got {alpha}"));
    }
    Ok(params)
}

/// `E (X_{k:n})^alpha` for an iid sample from a finite-support law.
///
/// Summed in survival form,
/// `sum_j (x_j^alpha - x_{j-1}^alpha) P(X_{k:n} >= x_j)` with
/// `P(X_{k:n} >= x_j) = 1 - G_{k:n}(F(x_j-))`, which is the increment sum
/// `sum_j x_j^alpha [G(F(x_j)) - G(F(x_j-))]` after summation by parts.
pub fn exact_moment_iid_discrete(dist: &DiscreteDistribution, k: u32, n: u32, alpha: f64) -> Result<f64> {
    let params = check_moment_args(k, n, alpha)?;
    let mut prev = 0.0;
    let mut total = 0.0;
    for (&x, (below, above)) in dist.values().iter().zip(dist.split_masses()) {
        let xa = x.powf(alpha);
        total += (xa - prev) * crate::beta_kernel::order_sf_split(params, below, above);
        prev = xa;
    }
    Ok(total)
}

/// `P(at least `need` of the events occur)` for independent events with the
/// given probabilities.
pub fn poisson_binomial_at_least(probs: &[f64], need: usize) -> f64 {
    // dist[c] = P(exactly c successes so far)
    let mut dist = vec![0.0f64; probs.len() + 1];
    dist[0] = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        for c in (1..=i + 1).rev() {
            dist[c] = dist[c] * (1.0 - p) + dist[c - 1] * p;
        }
        dist[0] *= 1.0 - p;
    }
    dist[need.min(probs.len() + 1)..].iter().sum()
}

/// `E (X_{k:n})^alpha` for independent finite-support components, `n` the
/// number of components.
pub fn exact_moment_indep_discrete(dists: &[DiscreteDistribution], k: u32, alpha: f64) -> Result<f64> {
    let n = dists.len() as u32;
    check_moment_args(k, n, alpha)?;
    let mut support: Vec<f64> = dists.iter().flat_map(|d| d.values().iter().copied()).collect();
    support.sort_by(f64::total_cmp);
    support.dedup();
    // X_{k:n} >= v iff at least n+1-k components are >= v
    let need = (n + 1 - k) as usize;
    let mut prev = 0.0;
    let mut total = 0.0;
    let mut tails = vec![0.0; dists.len()];
    for &v in &support {
        for (t, d) in tails.iter_mut().zip(dists) {
            *t = d.tail_at_or_above(v);
        }
        let va = v.powf(alpha);
        total += (va - prev) * poisson_binomial_at_least(&tails, need);
        prev = va;
    }
    Ok(total)
}

/// `E (X_{k:n})^alpha = ∫_0^1 g_{k:n}(u) F^{-1}(u)^alpha du`.
///
/// Step quantiles are summed exactly; anything else goes to adaptive
/// quadrature with the function's knots as mandatory breakpoints.
pub fn moment_from_quantile<Q: QuantileFunction + ?Sized>(qf: &Q, k: u32, n: u32, alpha: f64) -> Result<f64> {
    let params = check_moment_args(k, n, alpha)?;
    if let Some(d) = qf.as_discrete() {
        return exact_moment_iid_discrete(&d, k, n, alpha);
    }
    let mut points = vec![0.0];
    let mut knots: Vec<f64> = qf.knots().into_iter().filter(|u| *u > 0.0 && *u < 1.0).collect();
    knots.sort_by(f64::total_cmp);
    points.extend(knots);
    points.push(1.0);
    let f = |u: f64| {
        let q = qf.quantile(u);
        if q == 0.0 {
            0.0
        } else {
            (ln_order_pdf(params, u) + alpha * q.ln()).exp()
        }
    };
    Ok(quadrature::integrate_breaks(f, &points, quadrature::DEFAULT_REL_TOL, 0.0)?.value)
}

/// Minimum number of replicates for [`mc_estimate_moment`].
pub const MIN_TRIALS: u64 = 1000;

/// Monte Carlo estimate of `E (X_{k:n})^alpha` where component `i` is drawn
/// from `components[i]` by inverse transform. Same seed, same estimate.
pub fn mc_estimate_moment<Q: QuantileFunction>(
    components: &[Q],
    k: u32,
    alpha: f64,
    trials: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    let n = components.len() as u32;
    check_moment_args(k, n, alpha)?;
    if trials < MIN_TRIALS {
        return domain(format!("need at least {MIN_TRIALS} trials, got {trials}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = vec![0.0; components.len()];
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for t in 1..=trials {
        for (d, c) in draws.iter_mut().zip(components) {
            *d = c.quantile(rng.random::<f64>());
        }
        let (_, kth, _) = draws.select_nth_unstable_by((k - 1) as usize, f64::total_cmp);
        let y = kth.powf(alpha);
        // Welford
        let delta = y - mean;
        mean += delta / t as f64;
        m2 += delta * (y - mean);
    }
    let var = if trials > 1 { m2 / (trials - 1) as f64 } else { 0.0 };
    Ok(MomentEstimate {
        mean,
        stderr: (var / trials as f64).sqrt(),
        trials,
    })
}

/// Grid search over the two-point laws `{0 w.p. rho, mu/(1-rho)}` for the
/// largest exact moment. Returns `(rho_star, value_star)`.
pub fn sharpness_search_two_point(k: u32, n: u32, alpha: f64, mu: f64, grid_size: u32) -> Result<(f64, f64)> {
    solve_rho(k, n, alpha)?;
    if grid_size < 100 {
        return domain(format!("grid needs at least 100 points, got {grid_size}"));
    }
    if !(mu > 0.0) {
        return domain(format!("mean must be positive, got {mu}"));
    }
    let params = OrderStatParams::new(k, n)?;
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 1..grid_size {
        let rho = f64::from(i) / f64::from(grid_size);
        let d = DiscreteDistribution::new(vec![(0.0, rho), (mu / (1.0 - rho), 1.0 - rho)])?;
        let v = exact_moment_iid_discrete(&d, k, n, alpha)?;
        if v > best.1 {
            best = (rho, v);
        }
    }
    debug_assert!(order_sf(params, best.0).is_ok());
    Ok(best)
}

/// Both sides of `alpha ∫ (1-t)^{alpha-1} g^alpha <= (∫ g)^alpha` for a
/// step function, in closed form.
pub fn lemma3_lhs_rhs(g: &StepFunction, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 1.0) {
        return domain(format!("needs alpha > 1, got {alpha}"));
    }
    let levels = g.levels();
    let s = g.breakpoints();
    let mut lhs = levels[0].powf(alpha);
    for j in 1..levels.len() {
        // (1 - s_j)^alpha [L_{j+1}^alpha - L_j^alpha], 1-based j
        lhs += (1.0 - s[j]).powf(alpha) * (levels[j].powf(alpha) - levels[j - 1].powf(alpha));
    }
    Ok((lhs, g.integral().powf(alpha)))
}
