use std::io::Write;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use orderstat_bounds::oracle::sweeps::{self, SweepOutcome};
use orderstat_bounds::oracle::{exact_moment_indep_discrete, mc_estimate_moment, moment_from_quantile};
use orderstat_bounds::report::format_decimal;
use orderstat_bounds::{
    bound_moment, BoundReport, ExtremalDistribution, MomentQuery, ReportEnvelope, SampleModel, Verification,
};

#[derive(Parser)]
#[command(name = "osbound", version, about = "Sharp moment bounds for order statistics")]
struct Cli {
    /// Worker threads for tables and sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bound E(X_{k:n})^alpha for one query.
    Bound(BoundArgs),
    /// CSV table of the iid constants over a grid of (n, k, alpha).
    Table(TableArgs),
    /// Run the oracle property suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Iid,
    Indep,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyMethod {
    Exact,
    Mc,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Suite {
    Sharpness,
    Sweep,
    Lemma3,
    Witness,
    All,
}

#[derive(clap::Args)]
struct BoundArgs {
    #[arg(long, value_enum, default_value = "iid")]
    model: Model,
    /// Sample size; inferred from --means for the independent model.
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    k: u32,
    #[arg(long)]
    alpha: f64,
    /// Common mean (iid model).
    #[arg(long, conflicts_with = "means")]
    mean: Option<f64>,
    /// Comma-separated component means (independent model).
    #[arg(long, value_delimiter = ',')]
    means: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Check the bound against the extremal law.
    #[arg(long, value_enum)]
    verify: Option<VerifyMethod>,
    /// Monte Carlo replicates for --verify mc.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exit with status 3 when the moment can be infinite.
    #[arg(long)]
    require_finite: bool,
}

#[derive(clap::Args)]
struct TableArgs {
    /// Values of n: `lo:hi`, a single value, or a comma list.
    #[arg(long)]
    n_range: String,
    /// Values of k, same syntax; cells with k > n are skipped.
    #[arg(long)]
    k_range: String,
    /// Values of alpha: `start:stop:step` or a comma list.
    #[arg(long)]
    alpha_grid: String,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random cases per sweep (default 1000 laws, 10000 step functions).
    #[arg(long)]
    cases: Option<u64>,
}

/// Failure with its exit status.
struct Exit {
    code: u8,
    message: String,
}

impl Exit {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }
}

impl From<anyhow::Error> for Exit {
    fn from(e: anyhow::Error) -> Self {
        Self {
            code: 1,
            message: format!("{e:#}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("osbound: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Bound(args) => cmd_bound(args),
        Command::Table(args) => cmd_table(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("osbound: {}", e.message);
            }
            ExitCode::from(e.code)
        }
    }
}

fn emit(text: &str) -> Result<(), Exit> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Exit::from(anyhow!(e)))
}

fn build_query(args: &BoundArgs) -> anyhow::Result<MomentQuery> {
    let q = match args.model {
        Model::Iid => {
            let n = args.n.context("--n is required for the iid model")?;
            let mean = match (&args.mean, &args.means) {
                (Some(m), _) => *m,
                (None, Some(ms)) if ms.len() == 1 => ms[0],
                _ => bail!("the iid model needs a single --mean"),
            };
            MomentQuery::iid(n, args.k, args.alpha, mean)?
        }
        Model::Indep => {
            let means = args.means.clone().context("--means is required for the independent model")?;
            if let Some(n) = args.n {
                if n as usize != means.len() {
                    bail!("--n {n} does not match the {} values given in --means", means.len());
                }
            }
            MomentQuery::new(SampleModel::Independent, means.len() as u32, args.k, args.alpha, means)?
        }
    };
    Ok(q)
}

/// The laws whose order statistic the verification evaluates: `n` copies of
/// the extremal law for iid samples, the components otherwise.
fn verification_components(query: &MomentQuery, extremal: &ExtremalDistribution) -> Vec<ExtremalDistribution> {
    match (query.model, extremal) {
        (_, ExtremalDistribution::IndepMinConfig { components }) => components.clone(),
        (SampleModel::Iid, e) => vec![e.clone(); query.n as usize],
        (SampleModel::Independent, e) => vec![e.clone()],
    }
}

fn verify_report(
    query: &MomentQuery,
    report: &BoundReport,
    method: VerifyMethod,
    trials: u64,
    seed: u64,
) -> anyhow::Result<Option<Verification>> {
    let Some(extremal) = report.extremal.as_ref().filter(|_| !report.is_unbounded()) else {
        return Ok(None);
    };
    let components = verification_components(query, extremal);
    let (name, value, stderr, n_trials) = match method {
        VerifyMethod::Exact => {
            let value = match (query.model, extremal) {
                (SampleModel::Iid, e) if !matches!(e, ExtremalDistribution::IndepMinConfig { .. }) => {
                    moment_from_quantile(e, query.k, query.n, query.alpha)?
                }
                _ => {
                    let laws = components
                        .iter()
                        .map(|c| c.to_discrete().context("exact verification needs finite-support components"))
                        .collect::<anyhow::Result<Vec<_>>>()?;
                    exact_moment_indep_discrete(&laws, query.k, query.alpha)?
                }
            };
            ("exact", value, None, None)
        }
        VerifyMethod::Mc => {
            let est = mc_estimate_moment(&components, query.k, query.alpha, trials, seed)?;
            ("mc", est.mean, Some(est.stderr), Some(est.trials))
        }
    };
    Ok(Some(Verification {
        method: name.to_string(),
        value,
        stderr,
        trials: n_trials,
        relative_gap: (report.bound - value) / report.bound,
    }))
}

fn cmd_bound(args: BoundArgs) -> Result<(), Exit> {
    let query = build_query(&args).map_err(Exit::usage)?;
    let report = bound_moment(&query).map_err(Exit::usage)?;
    let unbounded = report.is_unbounded();
    let mut envelope = ReportEnvelope::new(query, report, args.seed);
    if let Some(method) = args.verify {
        envelope.verification = verify_report(&envelope.query, &envelope.report, method, args.trials, args.seed)?;
    }
    let text = match args.format {
        Format::Json => envelope.to_json() + "\n",
        Format::Csv => format!("{}\n{}\n", ReportEnvelope::CSV_HEADER, envelope.to_csv_row()),
    };
    emit(&text)?;
    if unbounded && args.require_finite {
        return Err(Exit {
            code: 3,
            message: "the moment can be infinite in this regime".to_string(),
        });
    }
    Ok(())
}

fn parse_int_range(text: &str, what: &str) -> anyhow::Result<Vec<u32>> {
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once(':') {
        let lo: u32 = lo.trim().parse().with_context(|| format!("bad {what} start {lo:?}"))?;
        let hi: u32 = hi.trim().parse().with_context(|| format!("bad {what} end {hi:?}"))?;
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().with_context(|| format!("bad {what} value {s:?}")))
        .collect()
}

fn parse_alpha_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().with_context(|| format!("bad alpha value {s:?}"));
    if parts.len() == 3 {
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step.is_nan() || step <= 0.0 {
            bail!("alpha step must be positive, got {step}");
        }
        // index-based so the grid points do not accumulate rounding
        let count = ((stop - start) / step + 1e-9).floor();
        if count < 0.0 {
            return Ok(Vec::new());
        }
        return Ok((0..=count as u64).map(|i| start + i as f64 * step).collect());
    }
    if parts.len() != 1 {
        bail!("alpha grid must be start:stop:step or a comma list");
    }
    text.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(s.trim())).collect()
}

fn table_row(n: u32, k: u32, alpha: f64) -> anyhow::Result<String> {
    let report = bound_moment(&MomentQuery::iid(n, k, alpha, 1.0)?)?;
    let a = report.constant_a.unwrap_or(report.bound);
    let rho = report.rho.map(format_decimal).unwrap_or_default();
    Ok(format!(
        "{n},{k},{},{},{rho},{},{}",
        format_decimal(alpha),
        orderstat_bounds::report::enum_tag(&report.regime),
        format_decimal(a),
        format_decimal(report.bound)
    ))
}

fn cmd_table(args: TableArgs) -> Result<(), Exit> {
    let ns = parse_int_range(&args.n_range, "n").map_err(Exit::usage)?;
    let ks = parse_int_range(&args.k_range, "k").map_err(Exit::usage)?;
    let alphas = parse_alpha_grid(&args.alpha_grid).map_err(Exit::usage)?;
    let cells: Vec<(u32, u32, f64)> = ns
        .iter()
        .flat_map(|&n| ks.iter().filter(move |&&k| k >= 1 && k <= n).map(move |&k| (n, k)))
        .flat_map(|(n, k)| alphas.iter().map(move |&a| (n, k, a)))
        .collect();
    if cells.is_empty() {
        return Err(Exit::usage("the grid has no cells with 1 <= k <= n"));
    }
    let rows = cells
        .par_iter()
        .map(|&(n, k, a)| table_row(n, k, a).with_context(|| format!("cell n={n} k={k} alpha={a}")))
        .collect::<anyhow::Result<Vec<_>>>()
        .map_err(Exit::usage)?;
    let mut text = String::from("n,k,alpha,regime,rho,A,bound_for_unit_mean\n");
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    emit(&text)
}

const DEFAULT_LAWS: u64 = 1_000;
const DEFAULT_STEP_FUNCTIONS: u64 = 10_000;

fn run_suites(suite: Suite, seed: u64, cases: Option<u64>) -> anyhow::Result<Vec<SweepOutcome>> {
    let laws = cases.unwrap_or(DEFAULT_LAWS);
    let wants = |s: Suite| suite == s || suite == Suite::All;
    let mut out = Vec::new();
    if wants(Suite::Sharpness) {
        out.push(sweeps::sharpness_suite(sweeps::SHARPNESS_GRID)?);
    }
    if wants(Suite::Sweep) {
        out.push(sweeps::bound_validity_sweep(seed, laws)?);
        out.push(sweeps::oracle_agreement_sweep(seed, laws)?);
        out.push(sweeps::survival_power_sweep(seed, laws)?);
        out.push(sweeps::minimum_root_mean_sweep(seed, laws)?);
    }
    if wants(Suite::Lemma3) {
        out.push(sweeps::step_inequality_sweep(seed, cases.unwrap_or(DEFAULT_STEP_FUNCTIONS))?);
    }
    if wants(Suite::Witness) {
        out.push(sweeps::witness_suite()?);
    }
    Ok(out)
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Exit> {
    let outcomes = run_suites(args.suite, args.seed, args.cases)?;
    let violations: u64 = outcomes.iter().map(|o| o.violations).sum();
    let doc = serde_json::json!({
        "seed": args.seed,
        "passed": violations == 0,
        "violations": violations,
        "suites": outcomes,
        "tool_version": env!("CARGO_PKG_VERSION"),
    });
    emit(&(serde_json::to_string_pretty(&doc).map_err(|e| Exit::from(anyhow!(e)))? + "\n"))?;
    if violations > 0 {
        let first = outcomes.iter().find(|o| o.violations > 0).expect("some suite failed");
        return Err(Exit {
            code: 1,
            message: format!(
                "{} violation(s); first in {}: {}",
                violations,
                first.name,
                first.first_violation.as_ref().map(|v| v.to_string()).unwrap_or_default()
            ),
        });
    }
    Ok(())
}
