//! Sharp upper bounds for `E (X_{k:n})^alpha` given the mean(s).
//!
//! Regimes for an iid sample with mean `mu` and `2 <= k <= n-1`:
//!
//! | moment order            | bound                        | extremal law        |
//! |-------------------------|------------------------------|---------------------|
//! | `0 < alpha < 1`         | `A_low(alpha) mu^alpha`      | Beta-power quantile |
//! | `1 <= alpha < n+1-k`    | `A_mid(alpha) mu^alpha`      | two-point `{0, x0}` |
//! | `alpha = n+1-k`         | `C(n,k-1) mu^alpha`          | approached only     |
//! | `alpha > n+1-k`         | infinite                     | heavy-tail witness  |
//!
//! The minimum (`k = 1`) and maximum (`k = n`) have their own closed forms,
//! and for merely independent samples the minimum and the `alpha = n+1-k`
//! power moment are covered. Everything else is rejected as unsupported.

use serde::{Deserialize, Serialize};

use crate::beta_kernel::{
    binomial, elementary_symmetric, ln_incomplete_beta_lower, ln_order_pdf, order_sf,
    OrderStatParams,
};
use crate::error::{domain, BoundsError, Result};
use crate::extremal::{self, ExtremalDistribution};
use crate::report::{decimal, decimal_opt};

/// Distance to a regime boundary below which `alpha` is snapped onto it.
pub const BOUNDARY_SNAP: f64 = 1e-6;

/// Approach-family parameter used for non-attained bounds, as a multiple of
/// the largest mean.
pub const APPROACH_SCALE: f64 = 1000.0;

const BISECT_MAX_ITER: usize = 200;
const BISECT_LO: f64 = 1e-15;
const ROOT_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleModel {
    Iid,
    #[serde(alias = "indep")]
    Independent,
}

/// A single bound problem: which moment of which order statistic, under
/// which sampling model and mean constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentQuery {
    pub model: SampleModel,
    pub n: u32,
    pub k: u32,
    #[serde(with = "decimal")]
    pub alpha: f64,
    #[serde(with = "decimal::vec")]
    pub means: Vec<f64>,
}

impl MomentQuery {
    pub fn iid(n: u32, k: u32, alpha: f64, mean: f64) -> Result<Self> {
        Self::new(SampleModel::Iid, n, k, alpha, vec![mean])
    }

    pub fn independent(k: u32, alpha: f64, means: Vec<f64>) -> Result<Self> {
        let n = means.len() as u32;
        Self::new(SampleModel::Independent, n, k, alpha, means)
    }

    pub fn new(model: SampleModel, n: u32, k: u32, alpha: f64, means: Vec<f64>) -> Result<Self> {
        let q = Self {
            model,
            n,
            k,
            alpha,
            means,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        OrderStatParams::new(self.k, self.n)?;
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return domain(format!("alpha must be positive and finite, got {}", self.alpha));
        }
        if let Some(m) = self.means.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
            return domain(format!("means must be positive and finite, got {m}"));
        }
        let want = match self.model {
            SampleModel::Iid => 1,
            SampleModel::Independent => self.n as usize,
        };
        if self.means.len() != want {
            return domain(format!(
                "{:?} model needs exactly {want} mean(s), got {}",
                self.model,
                self.means.len()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `0 < alpha < 1`, non-minimum ranks.
    SubUnit,
    /// `1 <= alpha < n+1-k`, non-extreme ranks.
    Mid,
    /// `alpha = n+1-k`; elementary symmetric bound.
    BoundaryPower,
    MinimumIid,
    MinimumIndep,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attainability {
    Attained,
    BestPossibleNotAttained,
    AttainedByDegenerate,
}

/// Result of [`bound_moment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Sharp upper bound; `f64::INFINITY` when the moment can be infinite.
    #[serde(with = "decimal")]
    pub bound: f64,
    /// Multiplier of `mu^alpha` in the iid regimes.
    #[serde(with = "decimal_opt")]
    pub constant_a: Option<f64>,
    #[serde(with = "decimal_opt")]
    pub rho: Option<f64>,
    pub regime: Regime,
    pub attainability: Option<Attainability>,
    pub extremal: Option<ExtremalDistribution>,
    /// `alpha` was within [`BOUNDARY_SNAP`] of a regime boundary and the
    /// boundary formula was used.
    pub snapped: bool,
    /// `M` of the two-point approach family when the bound is not attained.
    #[serde(with = "decimal_opt")]
    pub approach_m: Option<f64>,
    /// Ascending order of the means: `sorted[i] = means[order[i]]`.
    pub order: Option<Vec<usize>>,
}

impl BoundReport {
    fn finite(bound: f64, regime: Regime, attainability: Attainability) -> Self {
        Self {
            bound,
            constant_a: None,
            rho: None,
            regime,
            attainability: Some(attainability),
            extremal: None,
            snapped: false,
            approach_m: None,
            order: None,
        }
    }

    fn unbounded(extremal: ExtremalDistribution) -> Self {
        Self {
            bound: f64::INFINITY,
            constant_a: None,
            rho: None,
            regime: Regime::Unbounded,
            attainability: None,
            extremal: Some(extremal),
            snapped: false,
            approach_m: None,
            order: None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.regime == Regime::Unbounded
    }
}

/// `t(x) = alpha (1 - G(x)) - (1 - x) g(x)`; its root in `(0, (k-1)/(n-alpha))`
/// is the tangency point of `1 - G` with `A (1-x)^alpha`.
pub fn tangency_residual(params: OrderStatParams, alpha: f64, x: f64) -> f64 {
    let sf = order_sf(params, x).unwrap_or(f64::NAN);
    alpha * sf - (1.0 - x) * ln_order_pdf(params, x).exp()
}

fn bisect_tangency(params: OrderStatParams, alpha: f64) -> Result<f64> {
    let t = |x: f64| tangency_residual(params, alpha, x);
    let mut lo = BISECT_LO;
    let mut hi = f64::from(params.k() - 1) / (f64::from(params.n()) - alpha);
    let (t_lo, t_hi) = (t(lo), t(hi));
    if !(t_lo > 0.0 && t_hi < 0.0) {
        return Err(BoundsError::Numeric {
            what: "tangency root bracket",
            achieved: t_hi,
        });
    }
    for _ in 0..BISECT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if t(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (r_lo, r_hi) = (t(lo).abs(), t(hi).abs());
    let (rho, resid) = if r_lo <= r_hi { (lo, r_lo) } else { (hi, r_hi) };
    let g = ln_order_pdf(params, rho).exp();
    if resid > ROOT_RESIDUAL * g.max(1.0) {
        return Err(BoundsError::Numeric {
            what: "tangency root bisection",
            achieved: resid,
        });
    }
    Ok(rho)
}

fn check_mid_regime(k: u32, n: u32, alpha: f64) -> Result<OrderStatParams> {
    if n < 3 || k < 2 || k > n - 1 {
        return domain(format!(
            "mid regime needs n >= 3 and 2 <= k <= n-1, got k={k}, n={n}"
        ));
    }
    let top = f64::from(n + 1 - k);
    if !(alpha >= 1.0 && alpha < top) {
        return domain(format!("mid regime needs 1 <= alpha < {top}, got {alpha}"));
    }
    OrderStatParams::new(k, n)
}

/// Root `rho_{k:n}(alpha)` of `alpha (1 - G(rho)) = (1 - rho) g(rho)`.
pub fn solve_rho(k: u32, n: u32, alpha: f64) -> Result<f64> {
    let params = check_mid_regime(k, n, alpha)?;
    bisect_tangency(params, alpha)
}

/// Knot of the greatest convex minorant of `G_{k:n}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GcmRoot {
    Interior(f64),
    /// `k = n`: `G_{n:n}(u) = u^n` is already convex.
    NotNeeded,
}

impl GcmRoot {
    pub fn interior(self) -> Option<f64> {
        match self {
            GcmRoot::Interior(r) => Some(r),
            GcmRoot::NotNeeded => None,
        }
    }
}

/// Root of `1 - G(rho) = (1 - rho) g(rho)`, where the convex minorant of
/// `G_{k:n}` leaves the curve and becomes its tangent line through `(1,1)`.
pub fn solve_rho_gcm(k: u32, n: u32) -> Result<GcmRoot> {
    let params = OrderStatParams::new(k, n)?;
    if k < 2 {
        return domain(format!("convex minorant knot needs k >= 2, got k={k}"));
    }
    if k == n {
        return Ok(GcmRoot::NotNeeded);
    }
    bisect_tangency(params, 1.0).map(GcmRoot::Interior)
}

/// `A_{k:n}(alpha) = (1 - G(rho)) / (1 - rho)^alpha` for `1 <= alpha < n+1-k`.
pub fn constant_a_mid(k: u32, n: u32, alpha: f64) -> Result<f64> {
    let params = check_mid_regime(k, n, alpha)?;
    let rho = bisect_tangency(params, alpha)?;
    Ok(order_sf(params, rho)? / (1.0 - rho).powf(alpha))
}

/// The same constant through the tangency condition:
/// `g(rho) / (alpha (1 - rho)^(alpha - 1))`.
pub fn constant_a_mid_tangent_form(k: u32, n: u32, alpha: f64) -> Result<f64> {
    let params = check_mid_regime(k, n, alpha)?;
    let rho = bisect_tangency(params, alpha)?;
    Ok(ln_order_pdf(params, rho).exp() / (alpha * (1.0 - rho).powf(alpha - 1.0)))
}

/// `A_{k:n}(alpha)` for `0 < alpha < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowConstant {
    pub value: f64,
    /// Convex minorant knot; absent for `k = n`.
    pub rho: Option<f64>,
    /// `alpha` was within [`BOUNDARY_SNAP`] of 1 and the limit `g(rho)` was
    /// returned.
    pub snapped: bool,
}

/// `∫_0^1 gbar(u)^p du = g(rho)^p * mass` with `p = 1/(1-alpha)` and
/// `gbar(u) = g(min(u, rho))`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GcmPowerIntegral {
    pub ln_g_rho: f64,
    pub mass: f64,
}

/// Evaluates the flattened-density power integral through the
/// real-parameter incomplete beta. Shared by the constant and by the
/// extremal quantile normalizer.
pub(crate) fn gcm_power_integral(params: OrderStatParams, rho: f64, p: f64) -> Result<GcmPowerIntegral> {
    let (k, n) = (f64::from(params.k()), f64::from(params.n()));
    let a = (k - 1.0) * p + 1.0;
    let b = (n - k) * p + 1.0;
    // ∫_0^rho (u/rho)^{a-1} ((1-u)/(1-rho))^{b-1} du
    let ln_lower = ln_incomplete_beta_lower(a, b, rho)?;
    let below = (ln_lower - (a - 1.0) * rho.ln() - (b - 1.0) * (1.0 - rho).ln()).exp();
    Ok(GcmPowerIntegral {
        ln_g_rho: ln_order_pdf(params, rho),
        mass: (1.0 - rho) + below,
    })
}

/// `A_{k:n}(alpha) = (∫_0^1 gbar(u)^{1/(1-alpha)} du)^{1-alpha}`.
pub fn constant_a_low(k: u32, n: u32, alpha: f64) -> Result<LowConstant> {
    let params = OrderStatParams::new(k, n)?;
    if k < 2 {
        return domain(format!("sub-unit constant needs k >= 2, got k={k}"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("sub-unit constant needs 0 < alpha < 1, got {alpha}"));
    }
    let nf = f64::from(n);
    let rho = match solve_rho_gcm(k, n)? {
        GcmRoot::NotNeeded => {
            return Ok(LowConstant {
                value: nf * ((1.0 - alpha) / (nf - alpha)).powf(1.0 - alpha),
                rho: None,
                snapped: false,
            })
        }
        GcmRoot::Interior(r) => r,
    };
    if 1.0 - alpha < BOUNDARY_SNAP {
        return Ok(LowConstant {
            value: ln_order_pdf(params, rho).exp(),
            rho: Some(rho),
            snapped: true,
        });
    }
    let p = 1.0 / (1.0 - alpha);
    let integral = gcm_power_integral(params, rho, p)?;
    Ok(LowConstant {
        value: integral.ln_g_rho.exp() * integral.mass.powf(1.0 - alpha),
        rho: Some(rho),
        snapped: false,
    })
}

fn approach_family_m(means: &[f64]) -> f64 {
    APPROACH_SCALE * means.iter().cloned().fold(0.0, f64::max)
}

/// Bound on `E (X_{k:n})^{n+1-k}` for independent components:
/// the elementary symmetric polynomial of order `n+1-k` in the means.
pub fn bound_independent_power(k: u32, n: u32, means: &[f64]) -> Result<BoundReport> {
    OrderStatParams::new(k, n)?;
    if means.len() != n as usize {
        return domain(format!("need exactly {n} means, got {}", means.len()));
    }
    let bound = elementary_symmetric(means, (n + 1 - k) as usize)?;
    let max = means.iter().cloned().fold(0.0, f64::max);
    if k == 1 {
        // attained by the two-point family with atom M = max mean
        let mut rep = BoundReport::finite(bound, Regime::BoundaryPower, Attainability::Attained);
        rep.extremal = Some(ExtremalDistribution::IndepMinConfig {
            components: extremal::theorem1_approach_family(k, n, means, max)?,
        });
        return Ok(rep);
    }
    let m = approach_family_m(means);
    let mut rep = BoundReport::finite(
        bound,
        Regime::BoundaryPower,
        Attainability::BestPossibleNotAttained,
    );
    rep.extremal = Some(ExtremalDistribution::IndepMinConfig {
        components: extremal::theorem1_approach_family(k, n, means, m)?,
    });
    rep.approach_m = Some(m);
    Ok(rep)
}

/// Ascending permutation of the means.
pub fn ascending_order(means: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)));
    order
}

/// `mu_(1) ... mu_(m-1) mu_(m)^{alpha-m+1}` for `alpha` in `(m-1, m]`, means
/// sorted ascending.
fn minimum_product_bound(sorted: &[f64], alpha: f64) -> f64 {
    let m = alpha.ceil() as usize;
    let head: f64 = sorted[..m - 1].iter().product();
    head * sorted[m - 1].powf(alpha - (m as f64) + 1.0)
}

fn bound_iid(q: &MomentQuery) -> Result<BoundReport> {
    let (n, k, alpha, mu) = (q.n, q.k, q.alpha, q.means[0]);
    let nf = f64::from(n);
    let power = f64::from(n + 1 - k);
    let scale = mu.powf(alpha);

    if alpha > power {
        return Ok(BoundReport::unbounded(extremal::heavy_tail_witness(mu)?));
    }

    if k == 1 {
        // Jensen on top of E X_{1:n}^n <= mu^n
        if alpha < nf {
            let mut rep = BoundReport::finite(scale, Regime::MinimumIid, Attainability::AttainedByDegenerate);
            rep.constant_a = Some(1.0);
            rep.extremal = Some(ExtremalDistribution::Degenerate { value: mu });
            return Ok(rep);
        }
        let mut rep = BoundReport::finite(scale, Regime::MinimumIid, Attainability::Attained);
        rep.constant_a = Some(1.0);
        // any p in (0,1]; p = 1/2 is reported
        rep.extremal = Some(ExtremalDistribution::TwoPoint {
            zero_prob: 0.5,
            atom: 2.0 * mu,
        });
        return Ok(rep);
    }

    let boundary = |snapped: bool| {
        let c = binomial(n, k - 1);
        let m = APPROACH_SCALE * mu;
        let mut rep = BoundReport::finite(
            c * scale,
            Regime::BoundaryPower,
            Attainability::BestPossibleNotAttained,
        );
        rep.constant_a = Some(c);
        rep.snapped = snapped;
        rep.approach_m = Some(m);
        rep.extremal = Some(ExtremalDistribution::TwoPoint {
            zero_prob: 1.0 - mu / m,
            atom: m,
        });
        rep
    };

    if alpha == power {
        return Ok(boundary(false));
    }

    if alpha < 1.0 {
        let low = constant_a_low(k, n, alpha)?;
        let mut rep = BoundReport::finite(low.value * scale, Regime::SubUnit, Attainability::Attained);
        rep.constant_a = Some(low.value);
        rep.rho = low.rho;
        rep.snapped = low.snapped;
        rep.extremal = Some(extremal::quantile_extremal_low(k, n, alpha, mu)?);
        return Ok(rep);
    }

    // here 2 <= k <= n-1 and 1 <= alpha < n+1-k, so n >= 3
    if power - alpha < BOUNDARY_SNAP {
        return Ok(boundary(true));
    }
    let params = check_mid_regime(k, n, alpha)?;
    let rho = bisect_tangency(params, alpha)?;
    let a = order_sf(params, rho)? / (1.0 - rho).powf(alpha);
    let mut rep = BoundReport::finite(a * scale, Regime::Mid, Attainability::Attained);
    rep.constant_a = Some(a);
    rep.rho = Some(rho);
    rep.extremal = Some(ExtremalDistribution::TwoPoint {
        zero_prob: rho,
        atom: mu / (1.0 - rho),
    });
    Ok(rep)
}

fn bound_indep(q: &MomentQuery) -> Result<BoundReport> {
    let (n, k, alpha) = (q.n, q.k, q.alpha);
    let power = f64::from(n + 1 - k);
    if alpha > power {
        let components = q
            .means
            .iter()
            .map(|&m| extremal::heavy_tail_witness(m))
            .collect::<Result<Vec<_>>>()?;
        return Ok(BoundReport::unbounded(ExtremalDistribution::IndepMinConfig { components }));
    }
    if k == 1 {
        let order = ascending_order(&q.means);
        let sorted: Vec<f64> = order.iter().map(|&i| q.means[i]).collect();
        let bound = minimum_product_bound(&sorted, alpha);
        let attain = if alpha <= 1.0 {
            Attainability::AttainedByDegenerate
        } else {
            Attainability::Attained
        };
        let mut rep = BoundReport::finite(bound, Regime::MinimumIndep, attain);
        rep.extremal = Some(extremal::minimum_extremal_indep(&sorted, alpha)?);
        rep.order = Some(order);
        return Ok(rep);
    }
    if alpha == power {
        return bound_independent_power(k, n, &q.means);
    }
    Err(BoundsError::UnsupportedRegime(format!(
        "independent non-identical samples have no known sharp bound for k={k}, alpha={alpha} \
         (only k=1 with alpha <= n, or alpha = n+1-k = {power})"
    )))
}

/// Dispatches a query to the matching sharp bound.
pub fn bound_moment(query: &MomentQuery) -> Result<BoundReport> {
    query.validate()?;
    match query.model {
        SampleModel::Iid => bound_iid(query),
        SampleModel::Independent => bound_indep(query),
    }
}
