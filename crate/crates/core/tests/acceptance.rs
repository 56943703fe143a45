//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs with `cargo test --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use orderstat_bounds::extremal::log_square_unscaled_mean;
use orderstat_bounds::oracle::quadrature::integrate;
use orderstat_bounds::oracle::sweeps;
use orderstat_bounds::report::{ReportEnvelope, Verification};
use orderstat_bounds::sharp_bounds::BOUNDARY_SNAP;
use orderstat_bounds::*;
use std::result::Result;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

/// Closed-form k = 2 constants and roots.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (mut worst_a, mut worst_rho) = (0.0f64, 0.0f64);
    for n in 3..=10u32 {
        let nf = f64::from(n);
        for i in 0..20 {
            let alpha = 1.0 + f64::from(i) * (nf - 2.0) / 20.0;
            let closed_a = (1.0 + alpha / (nf - alpha)).powf(nf - alpha)
                * (1.0 - alpha / (nf - 1.0)).powf(nf - 1.0 - alpha);
            let closed_rho = alpha / ((nf - 1.0) * (nf - alpha));
            let a = constant_a_mid(2, n, alpha).map_err(e)?;
            let rho = solve_rho(2, n, alpha).map_err(e)?;
            worst_a = worst_a.max(rel(a, closed_a));
            worst_rho = worst_rho.max((rho - closed_rho).abs());
            ensure(rel(a, closed_a) <= 1e-10, || format!("A(2,{n},{alpha}) = {a}, closed form {closed_a}"))?;
            ensure((rho - closed_rho).abs() <= 1e-12, || {
                format!("rho(2,{n},{alpha}) = {rho}, closed form {closed_rho}")
            })?;
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(1), || format!("took {took:?}"))?;
    Ok(format!("160 cells, max rel A err {worst_a:.1e}, max rho err {worst_rho:.1e}, {took:?}"))
}

/// `rho_gcm(2, n) = 1/(n-1)^2`.
fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for n in 3..=20u32 {
        let want = 1.0 / f64::from(n - 1).powi(2);
        let got = solve_rho_gcm(2, n)
            .map_err(e)?
            .interior()
            .ok_or_else(|| format!("no interior root for n={n}"))?;
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() <= 1e-12, || format!("n={n}: {got} vs {want}"))?;
    }
    Ok(format!("max abs err {worst:.1e}"))
}

/// Maximum closed form, and the k = 2 sub-unit expression by quadrature.
fn criterion_3() -> Outcome {
    let mut worst_max = 0.0f64;
    for n in 2..=10u32 {
        let nf = f64::from(n);
        for i in 1..=9 {
            let alpha = f64::from(i) / 10.0;
            let want = nf * ((1.0 - alpha) / (nf - alpha)).powf(1.0 - alpha);
            let got = constant_a_low(n, n, alpha).map_err(e)?.value;
            worst_max = worst_max.max(rel(got, want));
            ensure(rel(got, want) <= 1e-12, || format!("A_low({n},{n},{alpha}) = {got}, want {want}"))?;
        }
    }
    let mut worst_k2 = 0.0f64;
    for n in 3..=10u32 {
        let nf = f64::from(n);
        let rho = 1.0 / (nf - 1.0).powi(2);
        for i in 1..=9 {
            let alpha = f64::from(i) / 10.0;
            let p = 1.0 / (1.0 - alpha);
            let integral = integrate(|u: f64| u.powf(p) * (1.0 - u).powf((nf - 2.0) * p), 0.0, rho, 1e-13)
                .map_err(e)?
                .value;
            let head = rho.powf(p) * (1.0 - rho).powf((nf - 1.0 - alpha) * p);
            let want = nf * (nf - 1.0) * (head + integral).powf(1.0 - alpha);
            let got = constant_a_low(2, n, alpha).map_err(e)?.value;
            worst_k2 = worst_k2.max(rel(got, want));
            ensure(rel(got, want) <= 1e-9, || format!("A_low(2,{n},{alpha}) = {got}, want {want}"))?;
        }
    }
    Ok(format!("max rel err: k=n {worst_max:.1e}, k=2 {worst_k2:.1e}"))
}

const MEAN: f64 = 1.7;

/// Extremal laws reproduce the bound through the independent oracles.
fn criterion_4() -> Outcome {
    let (mut mid_cases, mut low_cases, mut min_cases) = (0, 0, 0);
    let (mut worst_mid, mut worst_low, mut worst_min) = (0.0f64, 0.0f64, 0.0f64);
    for n in 3..=8u32 {
        for k in 2..n {
            let power = f64::from(n + 1 - k);
            for i in 0..12 {
                let alpha = 1.0 + f64::from(i) * 0.25;
                if alpha >= power - BOUNDARY_SNAP {
                    break;
                }
                let bound = bound_moment(&MomentQuery::iid(n, k, alpha, MEAN).map_err(e)?).map_err(e)?;
                ensure(bound.regime == Regime::Mid, || format!("({k},{n},{alpha}) not mid"))?;
                let law = two_point_extremal(k, n, alpha, MEAN)
                    .map_err(e)?
                    .to_discrete()
                    .ok_or("two-point law has no discrete form")?;
                let exact = exact_moment_iid_discrete(&law, k, n, alpha).map_err(e)?;
                worst_mid = worst_mid.max(rel(exact, bound.bound));
                mid_cases += 1;
                ensure(rel(exact, bound.bound) <= 1e-12, || {
                    format!("mid ({k},{n},{alpha}): exact {exact} vs bound {}", bound.bound)
                })?;
            }
        }
    }
    for n in 2..=8u32 {
        for k in 2..=n {
            for i in 1..=9 {
                let alpha = f64::from(i) / 10.0;
                let bound = bound_moment(&MomentQuery::iid(n, k, alpha, MEAN).map_err(e)?).map_err(e)?;
                let law = quantile_extremal_low(k, n, alpha, MEAN).map_err(e)?;
                let got = moment_from_quantile(&law, k, n, alpha).map_err(e)?;
                worst_low = worst_low.max(rel(got, bound.bound));
                low_cases += 1;
                ensure(rel(got, bound.bound) <= 1e-8, || {
                    format!("sub-unit ({k},{n},{alpha}): quadrature {got} vs bound {}", bound.bound)
                })?;
            }
        }
    }
    let mean_sets: [&[f64]; 4] = [&[1.0, 2.0], &[3.0, 0.5, 2.0], &[1.0, 1.0, 4.0, 2.5], &[0.7, 2.2, 1.3, 5.0, 0.9]];
    for means in mean_sets {
        let n = means.len();
        for i in 1..=(4 * n) {
            let alpha = i as f64 / 4.0;
            let bound = bound_moment(&MomentQuery::independent(1, alpha, means.to_vec()).map_err(e)?).map_err(e)?;
            // the product formula, independently of the dispatcher
            let mut sorted = means.to_vec();
            sorted.sort_by(f64::total_cmp);
            let m = alpha.ceil() as usize;
            let formula: f64 =
                sorted[..m - 1].iter().product::<f64>() * sorted[m - 1].powf(alpha - m as f64 + 1.0);
            let config = minimum_extremal_indep(&sorted, alpha).map_err(e)?;
            let laws: Vec<_> = config
                .components()
                .iter()
                .map(|c| c.to_discrete().ok_or("component has no discrete form"))
                .collect::<Result<_, _>>()?;
            let exact = exact_moment_indep_discrete(&laws, 1, alpha).map_err(e)?;
            worst_min = worst_min.max(rel(exact, formula)).max(rel(bound.bound, formula));
            min_cases += 1;
            ensure(rel(exact, formula) <= 1e-12 && rel(bound.bound, formula) <= 1e-12, || {
                format!("minimum {means:?} alpha={alpha}: exact {exact}, bound {}, formula {formula}", bound.bound)
            })?;
        }
    }
    Ok(format!(
        "mid {mid_cases} cases (max {worst_mid:.1e}), sub-unit {low_cases} (max {worst_low:.1e}), \
         minimum {min_cases} (max {worst_min:.1e})"
    ))
}

/// The approach family closes the gap to `e_2(1,1,1) = 3`.
fn criterion_5() -> Outcome {
    let means = [1.0, 1.0, 1.0];
    let mut prev = 0.0;
    let mut ratios = Vec::new();
    for big_m in [10.0, 100.0, 1000.0] {
        let laws: Vec<_> = theorem1_approach_family(2, 3, &means, big_m)
            .map_err(e)?
            .iter()
            .map(|d| d.to_discrete().ok_or("no discrete form"))
            .collect::<Result<_, _>>()?;
        let v = exact_moment_indep_discrete(&laws, 2, 2.0).map_err(e)?;
        let ratio = v / 3.0;
        ensure(v <= 3.0, || format!("M={big_m}: moment {v} exceeds 3"))?;
        ensure(ratio > 1.0 - 1.0 / big_m, || format!("M={big_m}: ratio {ratio}"))?;
        ensure(ratio > prev, || format!("M={big_m}: ratio {ratio} not increasing"))?;
        prev = ratio;
        ratios.push(format!("{ratio:.6}"));
    }
    Ok(format!("ratios {}", ratios.join(", ")))
}

/// Sub-unit and mid constants meet at alpha = 1.
fn criterion_6() -> Outcome {
    let mut worst = 0.0f64;
    for n in 3..=8u32 {
        for k in 2..n {
            let low = constant_a_low(k, n, 1.0 - 1e-8).map_err(e)?.value;
            let mid = constant_a_mid(k, n, 1.0).map_err(e)?;
            worst = worst.max((low - mid).abs());
            ensure((low - mid).abs() <= 1e-6, || format!("({k},{n}): {low} vs {mid}"))?;
        }
    }
    let low = constant_a_low(2, 3, 1.0 - 1e-8).map_err(e)?.value;
    let mid = constant_a_mid(2, 3, 1.0).map_err(e)?;
    ensure((low - 1.125).abs() <= 1e-6 && (mid - 1.125).abs() <= 1e-12, || {
        format!("(2,3): {low}, {mid}, want 9/8")
    })?;
    Ok(format!("max gap {worst:.1e}; (2,3) gives {mid}"))
}

/// `A_{2:n}(1) - 1 ~ 1/(2 n^2)`.
fn criterion_7() -> Outcome {
    let a = constant_a_mid(2, 200, 1.0).map_err(e)?;
    let scaled = (a - 1.0) * 2.0 * 200f64.powi(2);
    ensure((0.95..=1.05).contains(&scaled), || format!("scaled gap {scaled}"))?;
    Ok(format!("(A - 1) * 2n^2 = {scaled:.6}"))
}

/// Grid search over two-point laws finds the analytic root.
fn criterion_8() -> Outcome {
    let out = sweeps::sharpness_suite(sweeps::SHARPNESS_GRID).map_err(e)?;
    ensure(out.passed(), || format!("{:?}", out.first_violation))?;
    let mut parts = Vec::new();
    for &(k, n, alpha) in &sweeps::SHARPNESS_CASES {
        let (rho_star, value_star) = sharpness_search_two_point(k, n, alpha, 1.0, sweeps::SHARPNESS_GRID).map_err(e)?;
        let rho = solve_rho(k, n, alpha).map_err(e)?;
        let bound = constant_a_mid(k, n, alpha).map_err(e)?;
        ensure((rho_star - rho).abs() <= 2e-4, || format!("({k},{n},{alpha}): {rho_star} vs {rho}"))?;
        ensure(value_star <= bound, || format!("({k},{n},{alpha}): {value_star} > {bound}"))?;
        parts.push(format!("({k},{n},{alpha}) |drho|={:.1e}", (rho_star - rho).abs()));
    }
    Ok(parts.join(", "))
}

/// Property sweeps at full size.
fn criterion_9() -> Outcome {
    let start = Instant::now();
    let seed = 20_240_601;
    let outcomes = [
        sweeps::bound_validity_sweep(seed, 1_000).map_err(e)?,
        sweeps::survival_power_sweep(seed, 1_000).map_err(e)?,
        sweeps::step_inequality_sweep(seed, 10_000).map_err(e)?,
        sweeps::minimum_root_mean_sweep(seed, 1_000).map_err(e)?,
    ];
    let took = start.elapsed();
    for o in &outcomes {
        ensure(o.passed(), || format!("{}: {} violations, first {:?}", o.name, o.violations, o.first_violation))?;
    }
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    let summary: Vec<String> = outcomes.iter().map(|o| format!("{} {} checks", o.name, o.cases)).collect();
    Ok(format!("{}, 0 violations, {took:.1?}", summary.join(", ")))
}

/// Witness means and divergence of the partial moments.
fn criterion_10() -> Outcome {
    let w = heavy_tail_witness(1.0).map_err(e)?;
    ensure(w.mean().map_err(e)? == 1.0, || "heavy-tail mean is not 1".into())?;
    let by_quad = sweeps::heavy_tail_mean_by_quadrature(1.0).map_err(e)?;
    ensure((by_quad - 1.0).abs() <= 1e-12, || format!("heavy-tail mean by quadrature {by_quad}"))?;
    let partials: Vec<f64> = sweeps::HEAVY_TAIL_HORIZONS
        .iter()
        .map(|&t| sweeps::heavy_tail_partial_moment(1.0, 1.5, t))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    ensure(partials.windows(2).all(|p| p[1] > p[0]), || format!("not increasing: {partials:?}"))?;
    let ratio = partials[2] / partials[0];
    ensure(ratio > 10.0, || format!("ratio {ratio}"))?;
    let two_e = 2.0 * std::f64::consts::E;
    let quad = sweeps::log_square_mean_by_quadrature().map_err(e)?;
    ensure(rel(log_square_unscaled_mean(), two_e) <= 1e-10 && rel(quad, two_e) <= 1e-10, || {
        format!("log-square mean {quad}")
    })?;
    Ok(format!("1.5-moment partials {partials:.4?}, ratio {ratio:.1}; log-square mean {quad:.12}"))
}

fn mc_envelope(seed: u64) -> Result<(ReportEnvelope, MomentEstimate), String> {
    let query = MomentQuery::iid(5, 2, 2.0, 1.0).map_err(e)?;
    let report = bound_moment(&query).map_err(e)?;
    let law = report.extremal.clone().ok_or("no extremal law")?;
    let est = mc_estimate_moment(&vec![law; 5], 2, 2.0, 1_000_000, seed).map_err(e)?;
    let bound = report.bound;
    let mut env = ReportEnvelope::new(query, report, seed);
    env.verification = Some(Verification {
        method: "mc".into(),
        value: est.mean,
        stderr: Some(est.stderr),
        trials: Some(est.trials),
        relative_gap: (bound - est.mean) / bound,
    });
    Ok((env, est))
}

/// Monte Carlo agrees with the exact constant and is reproducible.
fn criterion_11() -> Outcome {
    let want = 125.0 / 108.0;
    let (a, est) = mc_envelope(42)?;
    let (b, _) = mc_envelope(42)?;
    let z = (est.mean - want) / est.stderr;
    ensure(z.abs() <= 4.0, || format!("mean {} stderr {} z {z}", est.mean, est.stderr))?;
    ensure(a.to_json() == b.to_json(), || "reports differ between identical seeds".into())?;
    ensure(a.to_csv_row() == b.to_csv_row(), || "CSV rows differ between identical seeds".into())?;
    Ok(format!("mean {:.6} +/- {:.1e} (z = {z:.2}), reports byte-identical", est.mean, est.stderr))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("closed-form k=2 constants", criterion_1),
        ("convex-minorant root closed form", criterion_2),
        ("maximum and k=2 sub-unit constants", criterion_3),
        ("equality attainment", criterion_4),
        ("approach family", criterion_5),
        ("continuity at alpha=1", criterion_6),
        ("asymptotics", criterion_7),
        ("sharpness search", criterion_8),
        ("property sweeps", criterion_9),
        ("witness behavior", criterion_10),
        ("Monte Carlo consistency", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
