//! Equality-attaining laws and non-integrability witnesses.
//!
//! Each univariate variant has a distribution function, a left-continuous
//! quantile function `F^{-1}(u) = inf{x : F(x) >= u}`, a closed-form mean and
//! an inverse-transform sampler. [`ExtremalDistribution::IndepMinConfig`]
//! is a vector of independent components and only exposes them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::beta_kernel::{ln_order_pdf, OrderStatParams};
use crate::error::{domain, BoundsError, Result};
use crate::oracle::{DiscreteDistribution, QuantileFunction};
use crate::report::decimal;
use crate::sharp_bounds::{gcm_power_integral, solve_rho, solve_rho_gcm, GcmRoot};

const INVERT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ExtremalDistribution {
    /// Mass `zero_prob` at 0 and the rest at `atom`.
    TwoPoint {
        #[serde(with = "decimal")]
        zero_prob: f64,
        #[serde(with = "decimal")]
        atom: f64,
    },
    Degenerate {
        #[serde(with = "decimal")]
        value: f64,
    },
    /// Quantile `plateau * (g(min(u, rho)) / g(rho))^{1/(1-alpha)}`: a scaled
    /// power of the flattened Beta density, constant on `(rho, 1)`.
    BetaPowerQuantile {
        k: u32,
        n: u32,
        #[serde(with = "decimal")]
        alpha: f64,
        #[serde(with = "decimal")]
        rho: f64,
        /// Value of the quantile on `(rho, 1)`.
        #[serde(with = "decimal")]
        plateau: f64,
        #[serde(with = "decimal")]
        mean: f64,
    },
    /// Quantile `mu (n-alpha)/(1-alpha) u^{(n-1)/(1-alpha)}`.
    PowerLaw {
        n: u32,
        #[serde(with = "decimal")]
        alpha: f64,
        #[serde(with = "decimal")]
        mean: f64,
    },
    /// Survival `1/(y (1 + ln y)^2)` with `y = 2x/mu` for `x >= mu/2`.
    HeavyTailWitness {
        #[serde(with = "decimal")]
        mean: f64,
    },
    /// `F(x) = 1 - e/(x ln^2 x)`, `x >= e`, rescaled by `mu / (2e)`.
    LogSquareTail {
        #[serde(with = "decimal")]
        mean: f64,
    },
    /// Independent, non-identical components.
    IndepMinConfig { components: Vec<ExtremalDistribution> },
}

use ExtremalDistribution as Ed;

impl ExtremalDistribution {
    fn univariate(&self) -> Result<()> {
        match self {
            Ed::IndepMinConfig { .. } => Err(BoundsError::NotUnivariate("IndepMinConfig")),
            _ => Ok(()),
        }
    }

    /// The independent components: itself for a univariate law.
    pub fn components(&self) -> Vec<ExtremalDistribution> {
        match self {
            Ed::IndepMinConfig { components } => components.clone(),
            other => vec![other.clone()],
        }
    }

    /// Closed-form mean.
    pub fn mean(&self) -> Result<f64> {
        self.univariate()?;
        Ok(match *self {
            Ed::TwoPoint { zero_prob, atom } => (1.0 - zero_prob) * atom,
            Ed::Degenerate { value } => value,
            Ed::BetaPowerQuantile { mean, .. }
            | Ed::PowerLaw { mean, .. }
            | Ed::HeavyTailWitness { mean }
            | Ed::LogSquareTail { mean } => mean,
            Ed::IndepMinConfig { .. } => unreachable!(),
        })
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.univariate()?;
        if x < 0.0 {
            return Ok(0.0);
        }
        Ok(match *self {
            Ed::TwoPoint { zero_prob, atom } => {
                if x >= atom {
                    1.0
                } else {
                    zero_prob
                }
            }
            Ed::Degenerate { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
            Ed::PowerLaw { n, alpha, mean } => {
                let (top, e) = power_law_shape(n, alpha, mean);
                if x >= top {
                    1.0
                } else {
                    (x / top).powf(1.0 / e)
                }
            }
            Ed::BetaPowerQuantile { rho, plateau, .. } => {
                if x >= plateau {
                    1.0
                } else {
                    // quantile is strictly increasing on (0, rho)
                    invert_increasing(|u| self.quantile_unchecked(u), x, 0.0, rho)
                }
            }
            Ed::HeavyTailWitness { mean } => 1.0 - heavy_tail_survival(x / mean),
            Ed::LogSquareTail { mean } => {
                let u = x * LOG_SQUARE_MEAN / mean;
                if u <= std::f64::consts::E {
                    0.0
                } else {
                    1.0 - std::f64::consts::E / (u * u.ln().powi(2))
                }
            }
            Ed::IndepMinConfig { .. } => unreachable!(),
        })
    }

    /// Left-continuous inverse of [`cdf`](Self::cdf) on `[0, 1]`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        self.univariate()?;
        if !(0.0..=1.0).contains(&u) {
            return domain(format!("quantile level must lie in [0,1], got {u}"));
        }
        Ok(self.quantile_unchecked(u))
    }

    fn quantile_unchecked(&self, u: f64) -> f64 {
        match *self {
            Ed::TwoPoint { zero_prob, atom } => {
                if u <= zero_prob {
                    0.0
                } else {
                    atom
                }
            }
            Ed::Degenerate { value } => value,
            Ed::PowerLaw { n, alpha, mean } => {
                let (top, e) = power_law_shape(n, alpha, mean);
                top * u.powf(e)
            }
            Ed::BetaPowerQuantile {
                k,
                n,
                alpha,
                rho,
                plateau,
                ..
            } => {
                if u >= rho {
                    return plateau;
                }
                if u <= 0.0 {
                    return 0.0;
                }
                let params = OrderStatParams::new(k, n).expect("validated at construction");
                let p = 1.0 / (1.0 - alpha);
                plateau * (p * (ln_order_pdf(params, u) - ln_order_pdf(params, rho))).exp()
            }
            Ed::HeavyTailWitness { mean } => 0.5 * mean * heavy_tail_quantile_y(u),
            Ed::LogSquareTail { mean } => mean / LOG_SQUARE_MEAN * log_square_quantile(u),
            Ed::IndepMinConfig { .. } => unreachable!(),
        }
    }

    /// Inverse-transform draw from a seeded stream.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        self.univariate()?;
        Ok(self.quantile_unchecked(rng.random::<f64>()))
    }

    /// Finite-support form, for the exact oracles.
    pub fn to_discrete(&self) -> Option<DiscreteDistribution> {
        match *self {
            Ed::TwoPoint { zero_prob, atom } => {
                let mut atoms = Vec::with_capacity(2);
                if zero_prob > 0.0 {
                    atoms.push((0.0, zero_prob));
                }
                atoms.push((atom, 1.0 - zero_prob));
                DiscreteDistribution::new(atoms).ok()
            }
            Ed::Degenerate { value } => DiscreteDistribution::new(vec![(value, 1.0)]).ok(),
            _ => None,
        }
    }

    /// Breakpoints of the quantile function inside `(0, 1)`.
    pub fn quantile_knots(&self) -> Vec<f64> {
        match *self {
            Ed::TwoPoint { zero_prob, .. } if zero_prob > 0.0 => vec![zero_prob],
            Ed::BetaPowerQuantile { rho, .. } => vec![rho],
            _ => Vec::new(),
        }
    }
}

impl QuantileFunction for ExtremalDistribution {
    fn quantile(&self, u: f64) -> f64 {
        assert!(
            !matches!(self, Ed::IndepMinConfig { .. }),
            "IndepMinConfig has no single quantile function"
        );
        self.quantile_unchecked(u)
    }

    fn knots(&self) -> Vec<f64> {
        self.quantile_knots()
    }

    fn as_discrete(&self) -> Option<DiscreteDistribution> {
        self.to_discrete()
    }
}

fn power_law_shape(n: u32, alpha: f64, mean: f64) -> (f64, f64) {
    let nf = f64::from(n);
    (mean * (nf - alpha) / (1.0 - alpha), (nf - 1.0) / (1.0 - alpha))
}

/// `sup{u in [lo, hi] : q(u) <= x}` for strictly increasing `q`.
fn invert_increasing(q: impl Fn(f64) -> f64, x: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..INVERT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if q(mid) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Survival of the unit-mean heavy-tail witness at `x / mu`.
fn heavy_tail_survival(x_over_mu: f64) -> f64 {
    let y = 2.0 * x_over_mu;
    if y <= 1.0 {
        1.0
    } else {
        1.0 / (y * (1.0 + y.ln()).powi(2))
    }
}

/// Solves `y (1 + ln y)^2 = 1/(1-u)` for `y >= 1` by bisection on `s = ln y`.
fn heavy_tail_quantile_y(u: f64) -> f64 {
    if u <= 0.0 {
        return 1.0;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    let target = -(-u).ln_1p();
    // s + 2 ln(1+s) is increasing and >= s, so the root lies in [0, target]
    let h = |s: f64| s + 2.0 * s.ln_1p();
    let s = invert_increasing(h, target, 0.0, target);
    s.exp()
}

const LOG_SQUARE_MEAN: f64 = 2.0 * std::f64::consts::E;

/// Unscaled quantile of `F(x) = 1 - e/(x ln^2 x)`: solves
/// `s + 2 ln s = 1 + L` with `x = e^s`, `L = -ln(1-u)`.
fn log_square_quantile(u: f64) -> f64 {
    if u <= 0.0 {
        return std::f64::consts::E;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    let target = 1.0 - (-u).ln_1p();
    let h = |s: f64| s + 2.0 * s.ln();
    invert_increasing(h, target, 1.0, target).exp()
}

fn check_mean(mu: f64) -> Result<()> {
    if !(mu > 0.0) || !mu.is_finite() {
        return domain(format!("mean must be positive and finite, got {mu}"));
    }
    Ok(())
}

/// Two-point law attaining the mid-regime bound: `P(X = 0) = rho`,
/// `P(X = mu/(1-rho)) = 1 - rho`.
pub fn two_point_extremal(k: u32, n: u32, alpha: f64, mu: f64) -> Result<ExtremalDistribution> {
    check_mean(mu)?;
    let rho = solve_rho(k, n, alpha)?;
    Ok(Ed::TwoPoint {
        zero_prob: rho,
        atom: mu / (1.0 - rho),
    })
}

/// Law attaining the sub-unit bound; a [`PowerLaw`](Ed::PowerLaw) for the
/// maximum and a [`BetaPowerQuantile`](Ed::BetaPowerQuantile) otherwise.
pub fn quantile_extremal_low(k: u32, n: u32, alpha: f64, mu: f64) -> Result<ExtremalDistribution> {
    check_mean(mu)?;
    let params = OrderStatParams::new(k, n)?;
    if k < 2 {
        return domain(format!("sub-unit extremal needs k >= 2, got k={k}"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("sub-unit extremal needs 0 < alpha < 1, got {alpha}"));
    }
    match solve_rho_gcm(k, n)? {
        GcmRoot::NotNeeded => Ok(Ed::PowerLaw { n, alpha, mean: mu }),
        GcmRoot::Interior(rho) => {
            let integral = gcm_power_integral(params, rho, 1.0 / (1.0 - alpha))?;
            Ok(Ed::BetaPowerQuantile {
                k,
                n,
                alpha,
                rho,
                plateau: mu / integral.mass,
                mean: mu,
            })
        }
    }
}

/// Independent configuration attaining the bound on `E (X_{1:n})^alpha`.
///
/// With `m` the integer such that `m-1 < alpha <= m`, components `i <= m`
/// take values `{0, mu_m}` with `P(X_i = mu_m) = mu_i / mu_m`; the rest are
/// degenerate at their means.
pub fn minimum_extremal_indep(sorted_means: &[f64], alpha: f64) -> Result<ExtremalDistribution> {
    if sorted_means.is_empty() {
        return domain("need at least one mean");
    }
    for &m in sorted_means {
        check_mean(m)?;
    }
    if sorted_means.windows(2).any(|w| w[0] > w[1]) {
        return domain("means must be sorted ascending");
    }
    let n = sorted_means.len();
    if !(alpha > 0.0) || alpha > n as f64 {
        return domain(format!("minimum bound needs 0 < alpha <= {n}, got {alpha}"));
    }
    let m = alpha.ceil() as usize;
    let top = sorted_means[m - 1];
    let components = sorted_means
        .iter()
        .enumerate()
        .map(|(i, &mu)| {
            if i < m && mu < top {
                Ed::TwoPoint {
                    zero_prob: 1.0 - mu / top,
                    atom: top,
                }
            } else {
                Ed::Degenerate { value: mu }
            }
        })
        .collect();
    Ok(Ed::IndepMinConfig { components })
}

/// Independent two-valued laws `P(X_i = M) = mu_i / M`, the family that
/// approaches the elementary symmetric bound as `M` grows.
pub fn theorem1_approach_family(k: u32, n: u32, means: &[f64], big_m: f64) -> Result<Vec<ExtremalDistribution>> {
    OrderStatParams::new(k, n)?;
    if means.len() != n as usize {
        return domain(format!("need exactly {n} means, got {}", means.len()));
    }
    for &m in means {
        check_mean(m)?;
    }
    let max = means.iter().cloned().fold(0.0, f64::max);
    if !(big_m >= max) || !big_m.is_finite() {
        return domain(format!("M must be at least the largest mean {max}, got {big_m}"));
    }
    Ok(means
        .iter()
        .map(|&mu| {
            if mu == big_m {
                Ed::Degenerate { value: mu }
            } else {
                Ed::TwoPoint {
                    zero_prob: 1.0 - mu / big_m,
                    atom: big_m,
                }
            }
        })
        .collect())
}

/// Mean-`mu` law whose `alpha`-moment is finite iff `alpha <= 1`.
pub fn heavy_tail_witness(mu: f64) -> Result<ExtremalDistribution> {
    check_mean(mu)?;
    Ok(Ed::HeavyTailWitness { mean: mu })
}

/// Mean-`mu` law whose sample minimum has no moment above order `n`.
pub fn log_square_witness(mu: f64) -> Result<ExtremalDistribution> {
    check_mean(mu)?;
    Ok(Ed::LogSquareTail { mean: mu })
}

/// Mean of the unscaled log-square law, `2e`.
pub const fn log_square_unscaled_mean() -> f64 {
    LOG_SQUARE_MEAN
}
