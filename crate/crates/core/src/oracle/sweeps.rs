//! Seeded property sweeps over random laws and step functions.
//!
//! Every case draws from its own ChaCha stream, selected by the case index
//! under the master seed, so results do not depend on how rayon schedules
//! the work. A case is a violation when its relative slack
//! `(rhs - lhs) / rhs` drops below `-tolerance`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::quadrature::integrate;
use super::{
    exact_moment_iid_discrete, exact_moment_indep_discrete, lemma3_lhs_rhs, sharpness_search_two_point,
    DiscreteDistribution, StepFunction,
};
use crate::error::Result;
use crate::report::format_decimal;
use crate::sharp_bounds::{bound_moment, solve_rho, MomentQuery};

/// Relative slack below which an inequality counts as violated.
pub const SLACK_TOL: f64 = 1e-12;
/// Relative disagreement allowed between the iid and independent oracles.
pub const AGREEMENT_TOL: f64 = 1e-11;
/// Allowed distance between the grid argmax and the analytic root.
pub const SHARPNESS_RHO_TOL: f64 = 2e-4;
pub const SHARPNESS_GRID: u32 = 10_000;
pub const SHARPNESS_CASES: [(u32, u32, f64); 3] = [(2, 5, 2.0), (2, 3, 1.0), (3, 5, 1.5)];

const MAX_ATOMS: usize = 6;
const MAX_PIECES: usize = 6;
const VALIDITY_MAX_N: u32 = 6;
const VALIDITY_ALPHAS: [f64; 11] = [0.25, 0.5, 0.9, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0];
const SURVIVAL_ALPHAS: [f64; 3] = [1.5, 2.0, 2.7];
const STEP_ALPHAS: [f64; 3] = [1.1, 2.0, 3.5];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub name: String,
    pub cases: u64,
    pub violations: u64,
    /// Smallest relative slack seen; negative means the inequality failed.
    #[serde(serialize_with = "ser_decimal")]
    pub worst_slack: f64,
    pub first_violation: Option<Value>,
    /// Per-case rows, for suites with a handful of named cases.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<Value>,
}

fn ser_decimal<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_decimal(*x))
}

impl SweepOutcome {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// One checked inequality: its relative slack and a reproduction record.
struct Check {
    slack: f64,
    violated: bool,
    record: Value,
}

impl Check {
    fn inequality(lhs: f64, rhs: f64, record: Value) -> Self {
        let slack = relative_slack(lhs, rhs);
        Self {
            slack,
            violated: slack < -SLACK_TOL || !lhs.is_finite(),
            record,
        }
    }
}

fn relative_slack(lhs: f64, rhs: f64) -> f64 {
    if rhs == 0.0 {
        if lhs <= 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        (rhs - lhs) / rhs.abs()
    }
}

fn summarize(name: &str, checks: Vec<Check>) -> SweepOutcome {
    let mut out = SweepOutcome {
        name: name.to_string(),
        cases: checks.len() as u64,
        violations: 0,
        worst_slack: f64::INFINITY,
        first_violation: None,
        details: Vec::new(),
    };
    for c in checks {
        out.worst_slack = out.worst_slack.min(c.slack);
        if c.violated {
            out.violations += 1;
            if out.first_violation.is_none() {
                out.first_violation = Some(c.record);
            }
        }
    }
    out
}

/// The stream for case `index` under `seed`.
pub fn case_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Random finite-support law with mean `mu`: up to six atoms, sometimes one
/// at zero, values rescaled so the mean is exact.
pub fn random_discrete<R: Rng>(rng: &mut R, mu: f64) -> DiscreteDistribution {
    let m = rng.random_range(1..=MAX_ATOMS);
    let mut values: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    if m > 1 && rng.random_bool(0.3) {
        values[0] = 0.0;
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    if values.iter().all(|v| *v == 0.0) {
        values.push(1.0);
    }
    let weights: Vec<f64> = values.iter().map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let raw_mean: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
    let scale = mu / raw_mean;
    DiscreteDistribution::new(values.iter().map(|v| v * scale).zip(probs).collect())
        .expect("generator produces valid laws")
}

/// Random nondecreasing step function with up to six pieces; some
/// increments are zero.
pub fn random_step_function<R: Rng>(rng: &mut R) -> StepFunction {
    let pieces = rng.random_range(1..=MAX_PIECES);
    let mut interior: Vec<f64> = (1..pieces).map(|_| rng.random::<f64>()).filter(|s| *s > 0.0).collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    let increments = (0..=interior.len())
        .map(|_| {
            if rng.random_bool(0.2) {
                0.0
            } else {
                2.0 * rng.random::<f64>()
            }
        })
        .collect();
    StepFunction::new(&interior, increments).expect("generator produces valid step functions")
}

fn atoms_json(d: &DiscreteDistribution) -> Value {
    Value::Array(
        d.atoms()
            .map(|(x, p)| json!([format_decimal(x), format_decimal(p)]))
            .collect(),
    )
}

fn step_json(g: &StepFunction) -> Value {
    json!({
        "breakpoints": g.breakpoints().iter().map(|x| format_decimal(*x)).collect::<Vec<_>>(),
        "increments": g.increments().iter().map(|x| format_decimal(*x)).collect::<Vec<_>>(),
    })
}

fn random_mean<R: Rng>(rng: &mut R) -> f64 {
    0.5 + 2.5 * rng.random::<f64>()
}

/// `(k, n, alpha, bound at unit mean)` for every finite-bound cell of the
/// validity grid.
fn validity_grid() -> Result<Vec<(u32, u32, f64, f64)>> {
    let mut cells = Vec::new();
    for n in 1..=VALIDITY_MAX_N {
        for k in 1..=n {
            for &alpha in &VALIDITY_ALPHAS {
                if alpha > f64::from(n + 1 - k) {
                    continue;
                }
                let report = bound_moment(&MomentQuery::iid(n, k, alpha, 1.0)?)?;
                cells.push((k, n, alpha, report.bound));
            }
        }
    }
    Ok(cells)
}

/// Exact moments of `laws` random laws never exceed the sharp bound, over
/// every finite-bound `(k, n, alpha)` with `n <= 6`. Bounds are positively
/// homogeneous of degree `alpha` in the mean.
pub fn bound_validity_sweep(seed: u64, laws: u64) -> Result<SweepOutcome> {
    let grid = validity_grid()?;
    let checks: Vec<Vec<Check>> = (0..laws)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, i);
            let mu = random_mean(&mut rng);
            let law = random_discrete(&mut rng, mu);
            grid.iter()
                .map(|&(k, n, alpha, unit_bound)| {
                    let bound = unit_bound * mu.powf(alpha);
                    let exact = exact_moment_iid_discrete(&law, k, n, alpha).expect("valid grid cell");
                    Check::inequality(
                        exact,
                        bound,
                        json!({"case": i, "k": k, "n": n, "alpha": format_decimal(alpha),
                               "mean": format_decimal(mu), "atoms": atoms_json(&law),
                               "exact": format_decimal(exact), "bound": format_decimal(bound)}),
                    )
                })
                .collect()
        })
        .collect();
    Ok(summarize("bound_validity", checks.into_iter().flatten().collect()))
}

/// The iid oracle agrees with the independent oracle fed `n` copies.
pub fn oracle_agreement_sweep(seed: u64, cases: u64) -> Result<SweepOutcome> {
    let checks = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, i);
            let mu = random_mean(&mut rng);
            let law = random_discrete(&mut rng, mu);
            let n = rng.random_range(1..=VALIDITY_MAX_N);
            let k = rng.random_range(1..=n);
            let alpha = 0.1 + 4.0 * rng.random::<f64>();
            let iid = exact_moment_iid_discrete(&law, k, n, alpha).expect("valid case");
            let copies = vec![law.clone(); n as usize];
            let indep = exact_moment_indep_discrete(&copies, k, alpha).expect("valid case");
            let slack = -(iid - indep).abs() / indep.abs().max(f64::MIN_POSITIVE);
            Check {
                slack,
                violated: slack < -AGREEMENT_TOL,
                record: json!({"case": i, "k": k, "n": n, "alpha": format_decimal(alpha),
                               "atoms": atoms_json(&law), "iid": format_decimal(iid),
                               "indep": format_decimal(indep)}),
            }
        })
        .collect();
    Ok(summarize("oracle_agreement", checks))
}

/// `alpha ∫ x^{alpha-1} (1-F(x))^alpha dx`, summed piece by piece.
pub fn survival_power_integral(law: &DiscreteDistribution, alpha: f64) -> f64 {
    let mut prev = 0.0;
    let mut total = 0.0;
    for (&x, (_, at_or_above)) in law.values().iter().zip(law.split_masses()) {
        let xa = x.powf(alpha);
        total += (xa - prev) * at_or_above.powf(alpha);
        prev = xa;
    }
    total
}

/// `alpha ∫ x^{alpha-1} (1-F)^alpha <= mu^alpha` for random laws.
pub fn survival_power_sweep(seed: u64, cases: u64) -> Result<SweepOutcome> {
    let checks: Vec<Vec<Check>> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, i);
            let mu = random_mean(&mut rng);
            let law = random_discrete(&mut rng, mu);
            SURVIVAL_ALPHAS
                .iter()
                .map(|&alpha| {
                    let lhs = survival_power_integral(&law, alpha);
                    let rhs = law.mean().powf(alpha);
                    Check::inequality(
                        lhs,
                        rhs,
                        json!({"case": i, "alpha": format_decimal(alpha), "atoms": atoms_json(&law),
                               "lhs": format_decimal(lhs), "rhs": format_decimal(rhs)}),
                    )
                })
                .collect()
        })
        .collect();
    Ok(summarize("survival_power", checks.into_iter().flatten().collect()))
}

/// Relative tolerance for the closed-form equality cases of the step
/// function inequality.
pub const EQUALITY_TOL: f64 = 1e-13;

/// The step-function inequality on random step functions, plus the
/// constant and single-jump equality cases at every `alpha`.
pub fn step_inequality_sweep(seed: u64, cases: u64) -> Result<SweepOutcome> {
    let mut checks: Vec<Check> = (0..cases)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = case_rng(seed, i);
            let g = random_step_function(&mut rng);
            STEP_ALPHAS
                .iter()
                .map(|&alpha| {
                    let (lhs, rhs) = lemma3_lhs_rhs(&g, alpha).expect("alpha > 1");
                    Check::inequality(
                        lhs,
                        rhs,
                        json!({"case": i, "alpha": format_decimal(alpha), "g": step_json(&g),
                               "lhs": format_decimal(lhs), "rhs": format_decimal(rhs)}),
                    )
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let mut rng = case_rng(seed, cases);
    for _ in 0..100 {
        let c = 0.01 + 3.0 * rng.random::<f64>();
        let t0 = rng.random::<f64>().max(1e-3);
        let shapes = [
            StepFunction::new(&[], vec![c])?,
            StepFunction::new(&[t0], vec![0.0, c])?,
        ];
        for g in &shapes {
            for &alpha in &STEP_ALPHAS {
                let (lhs, rhs) = lemma3_lhs_rhs(g, alpha)?;
                let gap = (lhs - rhs).abs() / rhs;
                checks.push(Check {
                    slack: -gap,
                    violated: gap > EQUALITY_TOL,
                    record: json!({"equality_case": true, "alpha": format_decimal(alpha), "g": step_json(g),
                                   "lhs": format_decimal(lhs), "rhs": format_decimal(rhs)}),
                });
            }
        }
    }
    Ok(summarize("step_inequality", checks))
}

/// `E X_{1:N} <= (E X^{1/n})^n` for `N >= n`, `n <= 4`; a degenerate law
/// attains it.
pub fn minimum_root_mean_sweep(seed: u64, cases: u64) -> Result<SweepOutcome> {
    let mut checks: Vec<Check> = (0..cases)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = case_rng(seed, i);
            let mu = random_mean(&mut rng);
            let law = random_discrete(&mut rng, mu);
            let mut out = Vec::new();
            for n in 1..=4u32 {
                let rhs = law.moment(1.0 / f64::from(n)).powi(n as i32);
                for big_n in n..=n + 3 {
                    let lhs = exact_moment_iid_discrete(&law, 1, big_n, 1.0).expect("valid case");
                    out.push(Check::inequality(
                        lhs,
                        rhs,
                        json!({"case": i, "n": n, "sample_size": big_n, "atoms": atoms_json(&law),
                               "lhs": format_decimal(lhs), "rhs": format_decimal(rhs)}),
                    ));
                }
            }
            out
        })
        .collect();
    let deg = DiscreteDistribution::new(vec![(1.7, 1.0)])?;
    for n in 1..=4u32 {
        let lhs = exact_moment_iid_discrete(&deg, 1, n, 1.0)?;
        let rhs = deg.moment(1.0 / f64::from(n)).powi(n as i32);
        let gap = (lhs - rhs).abs() / rhs;
        checks.push(Check {
            slack: -gap,
            violated: gap > EQUALITY_TOL,
            record: json!({"degenerate": true, "n": n, "lhs": format_decimal(lhs), "rhs": format_decimal(rhs)}),
        });
    }
    Ok(summarize("minimum_root_mean", checks))
}

/// Grid search over two-point laws at the three reference cases. A case
/// fails if the argmax misses the root by more than the tolerance or the
/// best value exceeds the bound.
pub fn sharpness_suite(grid: u32) -> Result<SweepOutcome> {
    let mut checks = Vec::new();
    let mut details = Vec::new();
    for &(k, n, alpha) in &SHARPNESS_CASES {
        let (rho_star, value_star) = sharpness_search_two_point(k, n, alpha, 1.0, grid)?;
        let rho = solve_rho(k, n, alpha)?;
        let bound = bound_moment(&MomentQuery::iid(n, k, alpha, 1.0)?)?.bound;
        let slack = relative_slack(value_star, bound);
        let rho_err = (rho_star - rho).abs();
        let record = json!({"k": k, "n": n, "alpha": format_decimal(alpha),
                            "rho": format_decimal(rho), "rho_star": format_decimal(rho_star),
                            "value_star": format_decimal(value_star), "bound": format_decimal(bound),
                            "slack": format_decimal(slack)});
        details.push(record.clone());
        checks.push(Check {
            slack,
            violated: slack < -SLACK_TOL || rho_err > SHARPNESS_RHO_TOL,
            record,
        });
    }
    let mut out = summarize("sharpness", checks);
    out.details = details;
    Ok(out)
}

/// `alpha ∫_{mu/2}^T x^{alpha-1} P(X > x) dx` for the heavy-tail witness,
/// via `x = (mu/2) e^s`.
pub fn heavy_tail_partial_moment(mu: f64, alpha: f64, t: f64) -> Result<f64> {
    let upper = (2.0 * t / mu).ln();
    if upper <= 0.0 {
        return Ok(0.0);
    }
    let f = |s: f64| ((alpha - 1.0) * s).exp() / (1.0 + s).powi(2);
    Ok(alpha * (0.5 * mu).powf(alpha) * integrate(f, 0.0, upper, 1e-12)?.value)
}

/// Mean of the heavy-tail witness by quadrature, after `t = 1/(1+ln(2x/mu))`.
pub fn heavy_tail_mean_by_quadrature(mu: f64) -> Result<f64> {
    Ok(0.5 * mu * integrate(|t| 1.0 + 2.0 * t, 0.0, 1.0, 1e-14)?.value)
}

/// `(n+delta) ∫_e^T x^{n+delta-1} (1-F(x))^n dx` for the unscaled
/// log-square law, via `x = e^s`.
pub fn log_square_partial_moment(n: u32, delta: f64, t: f64) -> Result<f64> {
    let e = std::f64::consts::E;
    let upper = t.ln();
    if upper <= 1.0 {
        return Ok(0.0);
    }
    let nf = f64::from(n);
    let a = nf + delta;
    // x^{a-1} (e/(x s^2))^n dx with dx = x ds
    let f = |s: f64| ((a - nf) * s).exp() / s.powi(2 * n as i32);
    Ok(a * e.powi(n as i32) * integrate(f, 1.0, upper, 1e-12)?.value)
}

/// Unscaled log-square mean `∫_0^∞ (1 - F)` by quadrature, after `t = 1/ln x`.
pub fn log_square_mean_by_quadrature() -> Result<f64> {
    let e = std::f64::consts::E;
    Ok(e + e * integrate(|_| 1.0, 0.0, 1.0, 1e-14)?.value)
}

pub const HEAVY_TAIL_HORIZONS: [f64; 3] = [1e3, 1e6, 1e9];
pub const LOG_SQUARE_HORIZONS: [f64; 4] = [1e3, 1e6, 1e9, 1e12];

/// Divergence checks for both witnesses. Partial integrals must increase
/// strictly; the heavy-tail 1.5-moment must grow past ten times its
/// `T = 1e3` value and the log-square `(X_{1:2})^{2.5}` moment past twice.
pub fn witness_suite() -> Result<SweepOutcome> {
    let mut checks = Vec::new();
    let mut details = Vec::new();
    let mut growth = |name: &str, partials: Vec<(f64, f64)>, min_ratio: f64| {
        let increasing = partials.windows(2).all(|w| w[1].1 > w[0].1);
        let ratio = partials.last().expect("nonempty").1 / partials[0].1;
        let record = json!({
            "witness": name,
            "partials": partials.iter().map(|(t, v)| json!([format_decimal(*t), format_decimal(*v)])).collect::<Vec<_>>(),
            "ratio": format_decimal(ratio),
            "required_ratio": format_decimal(min_ratio),
        });
        details.push(record.clone());
        checks.push(Check {
            slack: (ratio - min_ratio) / min_ratio,
            violated: !increasing || !(ratio > min_ratio),
            record,
        });
    };
    let heavy = HEAVY_TAIL_HORIZONS
        .iter()
        .map(|&t| Ok((t, heavy_tail_partial_moment(1.0, 1.5, t)?)))
        .collect::<Result<Vec<_>>>()?;
    growth("heavy_tail", heavy, 10.0);
    let log_square = LOG_SQUARE_HORIZONS
        .iter()
        .map(|&t| Ok((t, log_square_partial_moment(2, 0.5, t)?)))
        .collect::<Result<Vec<_>>>()?;
    growth("log_square", log_square, 2.0);

    let mean_checks = [
        ("heavy_tail_mean", heavy_tail_mean_by_quadrature(1.0)?, 1.0, 1e-12),
        ("log_square_mean", log_square_mean_by_quadrature()?, 2.0 * std::f64::consts::E, 1e-10),
    ];
    for (name, got, want, tol) in mean_checks {
        let gap = (got - want).abs() / want;
        let record = json!({"witness": name, "quadrature": format_decimal(got), "analytic": format_decimal(want)});
        details.push(record.clone());
        checks.push(Check {
            slack: -gap,
            violated: gap > tol,
            record,
        });
    }
    let mut out = summarize("witness", checks);
    out.details = details;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_reproducible_and_mean_exact() {
        let a = random_discrete(&mut case_rng(3, 17), 2.0);
        let b = random_discrete(&mut case_rng(3, 17), 2.0);
        assert_eq!(a, b);
        for i in 0..200 {
            let d = random_discrete(&mut case_rng(9, i), 1.3);
            assert!((d.mean() - 1.3).abs() < 1e-13);
        }
        assert_ne!(random_step_function(&mut case_rng(1, 0)), random_step_function(&mut case_rng(1, 1)));
    }

    #[test]
    fn survival_power_integral_at_one_is_mean() {
        for i in 0..50 {
            let d = random_discrete(&mut case_rng(5, i), 1.9);
            assert!((survival_power_integral(&d, 1.0) - 1.9).abs() < 1e-13);
        }
    }

    #[test]
    fn witness_partials_match_reference_values() {
        let refs = [(1e3, 1.59751784091658), (1e6, 9.67393004029682), (1e9, 119.574680724073)];
        for (t, want) in refs {
            let got = heavy_tail_partial_moment(1.0, 1.5, t).unwrap();
            assert!((got - want).abs() <= 1e-10 * want, "T={t}: {got}");
        }
        let got = log_square_partial_moment(2, 0.5, 1e3).unwrap();
        assert!((got - 13.8438).abs() < 1e-3, "{got}");
        let got = log_square_partial_moment(2, 0.5, 1e12).unwrap();
        assert!((got - 109.02).abs() < 1e-1, "{got}");
    }

    #[test]
    fn small_sweeps_pass() {
        for out in [
            bound_validity_sweep(11, 30).unwrap(),
            oracle_agreement_sweep(11, 100).unwrap(),
            survival_power_sweep(11, 100).unwrap(),
            step_inequality_sweep(11, 300).unwrap(),
            minimum_root_mean_sweep(11, 100).unwrap(),
            witness_suite().unwrap(),
        ] {
            assert!(out.passed(), "{}: {:?}", out.name, out.first_violation);
        }
    }

    #[test]
    fn detects_a_planted_violation() {
        let out = summarize(
            "planted",
            vec![
                Check::inequality(1.0, 2.0, json!(0)),
                Check::inequality(2.0 + 1e-9, 2.0, json!(1)),
                Check::inequality(3.0, 2.0, json!(2)),
            ],
        );
        assert_eq!(out.violations, 2);
        assert_eq!(out.first_violation, Some(json!(1)));
        assert!((out.worst_slack + 0.5).abs() < 1e-15);
    }
}
