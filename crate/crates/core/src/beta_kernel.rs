//! Order-statistic distribution kernel.
//!
//! If `U_1, ..., U_n` are iid uniform on `(0,1)`, the k-th order statistic
//! `U_{k:n}` has distribution function
//!
//! ```text
//! G_{k:n}(x) = sum_{j=k}^{n} C(n,j) x^j (1-x)^{n-j}
//! ```
//!
//! and Beta(k, n+1-k) density `g_{k:n}`. Any iid sample from `F` has
//! `X_{k:n} ~ G_{k:n}(F(x))`, which is why every bound in this crate is
//! expressed through these two functions.
//!
//! The integer-parameter path sums binomial terms in log space. The
//! real-parameter path ([`regularized_incomplete_beta`]) is a continued
//! fraction evaluated with the modified Lentz method.

use crate::error::{domain, BoundsError, Result};

const CF_MAX_ITER: usize = 300;
const CF_TOL: f64 = 1e-14;
const CF_TINY: f64 = 1e-300;

/// Rank and sample size of an order statistic, `1 <= k <= n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderStatParams {
    k: u32,
    n: u32,
}

impl OrderStatParams {
    pub fn new(k: u32, n: u32) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return domain(format!("order statistic needs 1 <= k <= n, got k={k}, n={n}"));
        }
        Ok(Self { k, n })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `ln B(k, n+1-k)`.
    pub fn ln_beta_normalizer(&self) -> f64 {
        ln_beta(self.k as f64, (self.n + 1 - self.k) as f64)
    }

    /// `G_{k:n}(x)`; see [`order_cdf`].
    pub fn cdf(&self, x: f64) -> Result<f64> {
        order_cdf(*self, x)
    }

    /// `1 - G_{k:n}(x)`; see [`order_sf`].
    pub fn sf(&self, x: f64) -> Result<f64> {
        order_sf(*self, x)
    }

    /// `g_{k:n}(x)`; see [`order_pdf`].
    pub fn pdf(&self, x: f64) -> Result<f64> {
        order_pdf(*self, x)
    }
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, nine terms).
#[allow(clippy::excessive_precision)]
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const SMALL_BINOMIAL_N: u32 = 60;

/// `C(n, j)`. For `n <= 60` the running product `C(n, i) (n - i)` is an
/// integer, so every step is exact until it passes `2^53`; beyond that each
/// step rounds once.
pub fn binomial(n: u32, j: u32) -> f64 {
    debug_assert!(j <= n);
    let j = j.min(n - j);
    if n <= SMALL_BINOMIAL_N {
        let mut c = 1.0f64;
        for i in 0..j {
            c = c * f64::from(n - i) / f64::from(i + 1);
        }
        return c;
    }
    ln_binomial(n, j).exp()
}

/// `ln C(n, j)`: product form for small `n`, log-gamma otherwise.
pub fn ln_binomial(n: u32, j: u32) -> f64 {
    debug_assert!(j <= n);
    if n <= SMALL_BINOMIAL_N {
        return binomial(n, j).ln();
    }
    let j = j.min(n - j);
    ln_gamma(f64::from(n) + 1.0) - ln_gamma(f64::from(j) + 1.0) - ln_gamma(f64::from(n - j) + 1.0)
}

fn check_unit(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("probability argument must lie in [0,1], got {x}"));
    }
    Ok(())
}

/// `P(Bin(n, x) in [lo, hi])` by direct summation of log-space terms.
/// `y` is `1 - x`, passed separately so callers holding an exact complement
/// keep it.
fn binomial_range(n: u32, lo: u32, hi: u32, x: f64, y: f64) -> f64 {
    if lo > hi {
        return 0.0;
    }
    if x == 0.0 {
        return if lo == 0 { 1.0 } else { 0.0 };
    }
    if y == 0.0 {
        return if hi == n { 1.0 } else { 0.0 };
    }
    let (lx, ly) = (x.ln(), y.ln());
    (lo..=hi)
        .map(|j| (ln_binomial(n, j) + f64::from(j) * lx + f64::from(n - j) * ly).exp())
        .sum()
}

/// `G_{k:n}(x) = P(Bin(n, x) >= k)`.
pub fn order_cdf(params: OrderStatParams, x: f64) -> Result<f64> {
    check_unit(x)?;
    // sum whichever tail is smaller; near 1 the complement is monotone where
    // the raw sum would wobble by an ulp
    if x * f64::from(params.n) > f64::from(params.k) - 0.5 {
        Ok(1.0 - order_sf_split(params, x, 1.0 - x))
    } else {
        Ok(binomial_range(params.n, params.k, params.n, x, 1.0 - x))
    }
}

/// `1 - G_{k:n}(x) = P(Bin(n, x) <= k-1)`, summed directly so small tails
/// keep full relative accuracy.
pub fn order_sf(params: OrderStatParams, x: f64) -> Result<f64> {
    check_unit(x)?;
    Ok(order_sf_split(params, x, 1.0 - x))
}

/// Survival of `U_{k:n}` at `x` when the caller also knows `1 - x` exactly.
pub(crate) fn order_sf_split(params: OrderStatParams, x: f64, one_minus_x: f64) -> f64 {
    binomial_range(params.n, 0, params.k - 1, x, one_minus_x)
}

/// `ln g_{k:n}(x)` for `x` in `(0,1)`.
pub fn ln_order_pdf(params: OrderStatParams, x: f64) -> f64 {
    let (k, n) = (f64::from(params.k), f64::from(params.n));
    // 1/B(k, n+1-k) = n C(n-1, k-1)
    let ln_norm = n.ln() + ln_binomial(params.n - 1, params.k - 1);
    let mut v = ln_norm;
    if params.k > 1 {
        v += (k - 1.0) * x.ln();
    }
    if params.k < params.n {
        v += (n - k) * (1.0 - x).ln();
    }
    v
}

/// Beta(k, n+1-k) density `g_{k:n}(x)` on the open interval.
pub fn order_pdf(params: OrderStatParams, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return domain(format!("density argument must lie in (0,1), got {x}"));
    }
    Ok(ln_order_pdf(params, x).exp())
}

/// Continued fraction for the incomplete beta function, modified Lentz.
///
/// Returns `cf` such that `B_x(a,b) = x^a (1-x)^b / a * cf`.
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    let mut last = f64::INFINITY;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        last = (del - 1.0).abs();
        if last < CF_TOL {
            return Ok(h);
        }
    }
    Err(BoundsError::Numeric {
        what: "incomplete beta continued fraction",
        achieved: last,
    })
}

fn check_beta_args(a: f64, b: f64, x: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return domain(format!("incomplete beta needs a, b > 0, got a={a}, b={b}"));
    }
    check_unit(x)
}

/// Regularized incomplete beta `I_x(a, b)` for real `a, b > 0`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    check_beta_args(a, b, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    if x > (a + 1.0) / (a + b + 2.0) {
        let cf = beta_cf(b, a, 1.0 - x)?;
        Ok(1.0 - ln_front.exp() * cf / b)
    } else {
        let cf = beta_cf(a, b, x)?;
        Ok(ln_front.exp() * cf / a)
    }
}

/// `ln ∫_0^x t^{a-1} (1-t)^{b-1} dt` (unregularized), safe for very large
/// `a` and `b` where the integral itself under- or overflows.
pub fn ln_incomplete_beta_lower(a: f64, b: f64, x: f64) -> Result<f64> {
    check_beta_args(a, b, x)?;
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if x == 1.0 {
        return Ok(ln_beta(a, b));
    }
    if x <= (a + 1.0) / (a + b + 2.0) {
        let cf = beta_cf(a, b, x)?;
        Ok(a * x.ln() + b * (1.0 - x).ln() - a.ln() + cf.ln())
    } else {
        let cf = beta_cf(b, a, 1.0 - x)?;
        let ln_upper = b * (1.0 - x).ln() + a * x.ln() - b.ln() + cf.ln();
        let ln_full = ln_beta(a, b);
        Ok(ln_full + (-(ln_upper - ln_full).exp()).ln_1p())
    }
}

/// Elementary symmetric polynomial `e_m(means)`.
///
/// Uses the expansion of `prod_i (1 + mu_i z)` one factor at a time, so the
/// work is `O(len * m)` and every intermediate is a sum of nonnegative terms.
pub fn elementary_symmetric(means: &[f64], m: usize) -> Result<f64> {
    if m == 0 || m > means.len() {
        return domain(format!(
            "elementary symmetric order must be in 1..={}, got {m}",
            means.len()
        ));
    }
    if let Some(bad) = means.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return domain(format!("entries must be positive and finite, got {bad}"));
    }
    // coef[j] = e_j of the entries seen so far
    let mut coef = vec![0.0f64; m + 1];
    coef[0] = 1.0;
    for (i, &mu) in means.iter().enumerate() {
        for j in (1..=m.min(i + 1)).rev() {
            coef[j] += mu * coef[j - 1];
        }
    }
    Ok(coef[m])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(k: u32, n: u32) -> OrderStatParams {
        OrderStatParams::new(k, n).unwrap()
    }

    #[test]
    fn params_reject_bad_rank() {
        assert!(OrderStatParams::new(0, 3).is_err());
        assert!(OrderStatParams::new(4, 3).is_err());
        assert!(OrderStatParams::new(1, 0).is_err());
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut f = 1.0f64;
        for i in 1..30u32 {
            f *= f64::from(i);
            let got = ln_gamma(f64::from(i) + 1.0);
            assert!((got - f.ln()).abs() <= 1e-13 * f.ln().max(1.0), "i={i}");
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn cdf_examples() {
        assert!((order_cdf(p(2, 2), 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(order_cdf(p(1, 3), 0.0).unwrap(), 0.0);
        let v = order_cdf(p(2, 5), 1.0 / 6.0).unwrap();
        assert!((v - 763.0 / 3888.0).abs() < 1e-15);
        assert_eq!(order_cdf(p(3, 7), 1.0).unwrap(), 1.0);
    }

    #[test]
    fn cdf_domain_errors() {
        assert!(order_cdf(p(1, 2), -0.1).is_err());
        assert!(order_cdf(p(1, 2), 1.1).is_err());
        assert!(order_cdf(p(1, 2), f64::NAN).is_err());
    }

    #[test]
    fn pdf_examples() {
        assert!((order_pdf(p(2, 3), 0.25).unwrap() - 1.125).abs() < 1e-14);
        assert!((order_pdf(p(1, 1), 0.7).unwrap() - 1.0).abs() < 1e-15);
        assert!((order_pdf(p(3, 3), 0.5).unwrap() - 0.75).abs() < 1e-15);
        assert!(order_pdf(p(2, 3), 0.0).is_err());
        assert!(order_pdf(p(2, 3), 1.0).is_err());
    }

    #[test]
    fn incomplete_beta_examples() {
        assert!((regularized_incomplete_beta(1.0, 1.0, 0.3).unwrap() - 0.3).abs() < 1e-15);
        let v = regularized_incomplete_beta(2.0, 4.0, 1.0 / 6.0).unwrap();
        assert!((v - 763.0 / 3888.0).abs() < 1e-14);
        let v = regularized_incomplete_beta(2.5, 2.5, 0.5).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn incomplete_beta_errors() {
        assert!(regularized_incomplete_beta(0.0, 1.0, 0.5).is_err());
        assert!(regularized_incomplete_beta(1.0, -2.0, 0.5).is_err());
        assert!(regularized_incomplete_beta(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn incomplete_beta_symmetry() {
        for &(a, b) in &[(0.5, 3.0), (2.0, 7.5), (12.0, 1.5), (40.0, 40.0)] {
            for i in 1..20 {
                let x = f64::from(i) / 20.0;
                let l = regularized_incomplete_beta(a, b, x).unwrap();
                let r = 1.0 - regularized_incomplete_beta(b, a, 1.0 - x).unwrap();
                assert!((l - r).abs() <= 1e-13, "a={a} b={b} x={x}");
            }
        }
    }

    #[test]
    fn incomplete_beta_matches_order_cdf() {
        for n in 1..=30u32 {
            for k in 1..=n {
                for i in 1..50 {
                    let x = f64::from(i) / 50.0;
                    let c = order_cdf(p(k, n), x).unwrap();
                    let ib = regularized_incomplete_beta(f64::from(k), f64::from(n + 1 - k), x)
                        .unwrap();
                    assert!((c - ib).abs() <= 1e-13, "k={k} n={n} x={x}: {c} vs {ib}");
                    if c > 1e-300 {
                        assert!((c - ib).abs() <= 1e-12 * c, "rel k={k} n={n} x={x}");
                    }
                }
            }
        }
    }

    #[test]
    fn cdf_plus_sf_is_one() {
        for n in 1..=25u32 {
            for k in 1..=n {
                for i in 0..=40 {
                    let x = f64::from(i) / 40.0;
                    let s = order_cdf(p(k, n), x).unwrap() + order_sf(p(k, n), x).unwrap();
                    assert!((s - 1.0).abs() <= 1e-13);
                }
            }
        }
    }

    #[test]
    fn cdf_monotone_on_grid() {
        for n in [1u32, 2, 5, 12, 40] {
            for k in 1..=n {
                let mut prev = 0.0;
                for i in 0..=1000 {
                    let v = order_cdf(p(k, n), f64::from(i) / 1000.0).unwrap();
                    assert!(v >= prev - 1e-16, "k={k} n={n} i={i}");
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn pdf_is_derivative_of_cdf() {
        for &(k, n) in &[(1u32, 1u32), (2, 3), (3, 7), (5, 9), (10, 10)] {
            for i in 1..100 {
                let x = f64::from(i) / 100.0;
                let h = 1e-6;
                let fd = (order_cdf(p(k, n), x + h).unwrap() - order_cdf(p(k, n), x - h).unwrap())
                    / (2.0 * h);
                assert!((fd - order_pdf(p(k, n), x).unwrap()).abs() <= 1e-6, "k={k} n={n} x={x}");
            }
        }
    }

    #[test]
    fn large_exponent_lower_integral() {
        // ∫_0^x t^{a-1} dt = x^a / a when b = 1
        let (a, x) = (2.0e5, 0.3f64);
        let got = ln_incomplete_beta_lower(a, 1.0, x).unwrap();
        assert!((got - (a * x.ln() - a.ln())).abs() <= 1e-12 * got.abs());
        // crossing the symmetry switch
        let got = ln_incomplete_beta_lower(3.0, 2.0, 0.9).unwrap();
        let exact = (0.9f64.powi(3) / 3.0 - 0.9f64.powi(4) / 4.0).ln();
        assert!((got - exact).abs() < 1e-14);
    }

    #[test]
    fn elementary_symmetric_examples() {
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0], 2).unwrap(), 11.0);
        assert_eq!(elementary_symmetric(&[2.0, 3.0], 2).unwrap(), 6.0);
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0, 4.0], 1).unwrap(), 10.0);
        assert!(elementary_symmetric(&[1.0, 2.0], 0).is_err());
        assert!(elementary_symmetric(&[1.0, 2.0], 3).is_err());
        assert!(elementary_symmetric(&[1.0, -2.0], 1).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn elementary_symmetric_permutation_invariant(
                mut v in prop::collection::vec(0.01f64..10.0, 1..9),
                m_frac in 0.0f64..1.0,
                seed in any::<u64>(),
            ) {
                let m = 1 + ((v.len() as f64 - 1.0) * m_frac).round() as usize;
                let a = elementary_symmetric(&v, m).unwrap();
                // deterministic shuffle
                let len = v.len();
                let mut s = seed;
                for i in (1..len).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    v.swap(i, (s >> 33) as usize % (i + 1));
                }
                let b = elementary_symmetric(&v, m).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a);
            }

            #[test]
            fn elementary_symmetric_homogeneous(
                v in prop::collection::vec(0.01f64..10.0, 1..9),
                c in 0.1f64..5.0,
            ) {
                let m = v.len().div_ceil(2);
                let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
                let a = elementary_symmetric(&scaled, m).unwrap();
                let b = c.powi(m as i32) * elementary_symmetric(&v, m).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * b);
            }
        }
    }
}
