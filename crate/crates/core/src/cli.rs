//! Command-line front end. [`run`] is the whole program minus process
//! plumbing so that it can be driven from tests.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::allocation::{envelope_rule, virtual_rule, AllocationRule};
use crate::battery::{run_battery, DEFAULT_CASES, DEFAULT_SEED};
use crate::canonical::{build, Depth, ExampleId, ExampleParams};
use crate::conditions::{
    linear_bounded_params, rhr_bound_alpha_hat, slowly_increasing_beta, small_tail_eta, top_type_idle, verify,
    Extremum, RevVariant, ScanConfig, TailKind, Theorem,
};
use crate::incentives::{ic_grid_check, induced_rule, menu_revenue, menu_size, IcReport, IC_GRID};
use crate::instance::Instance;
use crate::metrics::{best_linear, linear_revenue, LinearOptimum, Metrics};
use crate::report::{csv, dist_from_spec, load_contract, load_dist, load_instance, InputEcho, InputError, Report};
use crate::typedist::{TypeDistribution, DEFAULT_GRID};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "agency",
    version,
    about = "Principal-agent contract analysis with private cost types"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Welfare, virtual welfare, best linear contract and distribution conditions.
    Analyze(AnalyzeArgs),
    /// Linear contract revenue on a uniform grid of shares.
    SweepAlpha(SweepArgs),
    /// Check one approximation guarantee. Exit 0 pass, 2 fail, 3 hypothesis not met.
    Verify(VerifyArgs),
    /// Rebuild a canonical example and check its facts.
    Reproduce(ReproduceArgs),
    /// Grid check of truthfulness and the curvature condition for a menu.
    CheckIc(CheckIcArgs),
    /// Verify the default theorems on seeded random instances.
    Battery(BatteryArgs),
}

#[derive(Args, Debug)]
struct Output {
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct Inputs {
    #[arg(long)]
    instance: PathBuf,
    /// Distribution file; defaults to the instance file's `dist` key.
    #[arg(long)]
    dist: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Share used for the slowly-increasing scan.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Threshold type for the tail conditions; defaults to the lowest type.
    #[arg(long)]
    kappa: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum TheoremName {
    Universal,
    Slow,
    LinBounded1,
    LinBounded2,
    UpperN,
    Smooth,
    WelImplications,
    RevImplicationsNonincreasing,
    RevImplicationsUniform,
    RevImplicationsNormal,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum)]
    theorem: TheoremName,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    /// gap, scaling_uniform, non_monotone, menu, non_implementable or smoothed
    example: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    r1: Option<f64>,
    #[arg(long)]
    r2: Option<f64>,
    #[arg(long)]
    c_high: Option<f64>,
    /// Payment grid step for the audits.
    #[arg(long)]
    step: Option<f64>,
    /// Largest payment on the audit grids.
    #[arg(long)]
    t_max: Option<f64>,
    /// Type at which non-implementability is certified.
    #[arg(long)]
    anchor: Option<f64>,
    /// Skip the exhaustive grid audits.
    #[arg(long)]
    quick: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct CheckIcArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    contract: PathBuf,
    /// Optional distribution for the expected revenue of the menu.
    #[arg(long)]
    dist: Option<PathBuf>,
    #[arg(long, default_value_t = IC_GRID)]
    grid: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct BatteryArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CASES)]
    count: usize,
    #[command(flatten)]
    output: Output,
}

enum Failure {
    Input(InputError),
    Usage(String),
    Io(String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e)
    }
}

/// Runs the command line `argv` (program name first), writing reports to
/// `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_INPUT
                }
            };
        }
    };
    let scan = ScanConfig::from_env();
    let result = match cli.command {
        Command::Analyze(a) => analyze(a, scan, out),
        Command::SweepAlpha(a) => sweep(a, scan, out),
        Command::Verify(a) => verify_cmd(a, scan, out),
        Command::Reproduce(a) => reproduce(a, scan, out),
        Command::CheckIc(a) => check_ic(a, scan, out),
        Command::Battery(a) => battery(a, scan, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let msg = match f {
                Failure::Input(e) => e.to_string(),
                Failure::Usage(m) | Failure::Io(m) => m,
            };
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT
        }
    }
}

fn emit(output: &Output, text: String, out: &mut dyn Write) -> Result<(), Failure> {
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string())),
    }
}

fn emit_report<T: Serialize>(output: &Output, report: Report<T>, out: &mut dyn Write) -> Result<(), Failure> {
    emit(output, report.to_json(), out)
}

fn load_inputs(inputs: &Inputs) -> Result<(Instance, TypeDistribution, Vec<InputEcho>), Failure> {
    let loaded = load_instance(&inputs.instance)?;
    let mut echoes = vec![loaded.echo];
    let dist = match &inputs.dist {
        Some(path) => {
            let (d, echo) = load_dist(path)?;
            echoes.push(echo);
            d
        }
        None => {
            let name = inputs.instance.display().to_string();
            let spec = loaded.dist.ok_or_else(|| InputError {
                file: name.clone(),
                key: Some("dist".into()),
                message: "missing; pass --dist or add a dist record".into(),
            })?;
            dist_from_spec(&name, spec)?
        }
    };
    Ok((loaded.instance, dist, echoes))
}

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

#[derive(Serialize)]
struct Rules {
    welfare: AllocationRule,
    #[serde(skip_serializing_if = "Option::is_none")]
    virtual_welfare: Option<AllocationRule>,
    best_linear: AllocationRule,
}

#[derive(Serialize)]
struct LinearBounds {
    sup_c_over_phi: Extremum,
    inf_c_over_phi: Extremum,
}

#[derive(Serialize)]
struct ConditionReport {
    alpha: f64,
    kappa: f64,
    slowly_increasing_beta: Extremum,
    #[serde(skip_serializing_if = "Option::is_none")]
    linear_bounded: Option<LinearBounds>,
    eta_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta_virtual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rhr_alpha_hat: Option<Extremum>,
    density_nonincreasing: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    top_type_idle: Option<bool>,
}

#[derive(Serialize)]
struct Analysis {
    support: (f64, f64),
    metrics: Metrics,
    rules: Rules,
    conditions: ConditionReport,
}

fn analyze(a: AnalyzeArgs, scan: ScanConfig, out: &mut dyn Write) -> Result<i32, Failure> {
    let (inst, dist, echoes) = load_inputs(&a.inputs)?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Failure::Usage(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let iv = dist.iron(DEFAULT_GRID).ok();
    let metrics = Metrics::compute(&inst, &dist, iv.as_ref(), &[0.25, 0.5, 0.75]);
    let span = (dist.low(), dist.grid_high());
    let kappa = a.kappa.unwrap_or(dist.low());
    let conditions = ConditionReport {
        alpha: a.alpha,
        kappa,
        slowly_increasing_beta: slowly_increasing_beta(&dist, a.alpha, kappa, scan),
        linear_bounded: iv.as_ref().map(|iv| {
            let (sup, inf) = linear_bounded_params(iv, kappa, scan);
            LinearBounds {
                sup_c_over_phi: sup,
                inf_c_over_phi: inf,
            }
        }),
        eta_cost: small_tail_eta(&inst, &dist, iv.as_ref(), kappa, TailKind::Cost).unwrap_or(f64::NAN),
        eta_virtual: iv
            .as_ref()
            .and_then(|iv| small_tail_eta(&inst, &dist, Some(iv), kappa, TailKind::Virtual).ok()),
        rhr_alpha_hat: rhr_bound_alpha_hat(&dist, scan).ok(),
        density_nonincreasing: dist.density_nonincreasing(),
        top_type_idle: iv.as_ref().map(|iv| top_type_idle(&inst, iv)),
    };
    let rules = Rules {
        welfare: envelope_rule(&inst, 1.0, span),
        virtual_welfare: iv.as_ref().map(|iv| virtual_rule(&inst, iv, span)),
        best_linear: envelope_rule(&inst, metrics.apx_best.alpha, span),
    };
    let analysis = Analysis {
        support: dist.support(),
        metrics,
        rules,
        conditions,
    };
    if a.output.format == Format::Csv {
        let m = &analysis.metrics;
        let mut rows = vec![
            vec!["wel".into(), fmt_f(m.wel)],
            vec!["apx_best_alpha".into(), fmt_f(m.apx_best.alpha)],
            vec!["apx_best_revenue".into(), fmt_f(m.apx_best.revenue)],
        ];
        if let Some(v) = m.vwel {
            rows.insert(1, vec!["vwel".into(), fmt_f(v)]);
        }
        for (al, r) in &m.apx_at {
            rows.push(vec![format!("apx_at_{al}"), fmt_f(*r)]);
        }
        emit(&a.output, csv(&["quantity", "value"], rows), out)?;
    } else {
        emit_report(&a.output, Report::new("analyze", echoes, scan, analysis), out)?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Sweep {
    steps: usize,
    table: Vec<LinearOptimum>,
    best: LinearOptimum,
}

fn sweep(a: SweepArgs, scan: ScanConfig, out: &mut dyn Write) -> Result<i32, Failure> {
    if a.steps == 0 {
        return Err(Failure::Usage("--steps must be positive".into()));
    }
    let (inst, dist, echoes) = load_inputs(&a.inputs)?;
    let iv = dist.iron(DEFAULT_GRID).ok();
    let table: Vec<LinearOptimum> = (0..=a.steps)
        .map(|k| {
            let alpha = k as f64 / a.steps as f64;
            LinearOptimum {
                alpha,
                revenue: linear_revenue(&inst, &dist, alpha),
            }
        })
        .collect();
    let best = best_linear(&inst, &dist, iv.as_ref());
    if a.output.format == Format::Csv {
        let mut rows: Vec<Vec<String>> = table
            .iter()
            .map(|r| vec![fmt_f(r.alpha), fmt_f(r.revenue), "grid".into()])
            .collect();
        rows.push(vec![fmt_f(best.alpha), fmt_f(best.revenue), "best".into()]);
        emit(&a.output, csv(&["alpha", "revenue", "kind"], rows), out)?;
    } else {
        let sweep = Sweep {
            steps: a.steps,
            table,
            best,
        };
        emit_report(&a.output, Report::new("sweep-alpha", echoes, scan, sweep), out)?;
    }
    Ok(EXIT_OK)
}

fn theorem_from(a: &VerifyArgs, dist: &TypeDistribution) -> Result<Theorem, Failure> {
    let low = dist.low();
    Ok(match a.theorem {
        TheoremName::Universal => Theorem::Universal {
            q: a.q.unwrap_or(0.5),
            alpha: a.alpha.unwrap_or(0.5),
        },
        TheoremName::Slow => {
            let alpha = a.alpha.unwrap_or(0.5);
            Theorem::Slow {
                alpha,
                beta: a.beta,
                kappa: a.kappa.unwrap_or(low / alpha),
                eta: a.eta,
            }
        }
        TheoremName::LinBounded1 => Theorem::LinBounded1 {
            kappa: a.kappa.unwrap_or(low),
            alpha: a.alpha,
        },
        TheoremName::LinBounded2 => Theorem::LinBounded2 {
            kappa: a.kappa.unwrap_or(low),
            alpha: a.alpha,
        },
        TheoremName::UpperN => Theorem::UpperN,
        TheoremName::Smooth => Theorem::Smooth {
            eps: a
                .eps
                .ok_or_else(|| Failure::Usage("--eps is required for smooth".into()))?,
        },
        TheoremName::WelImplications => Theorem::WelImplications {
            kappa: a.kappa.unwrap_or(2.0),
        },
        TheoremName::RevImplicationsNonincreasing => Theorem::RevImplications(RevVariant::NonIncreasingDensity {
            kappa: a.kappa.unwrap_or(2.0),
        }),
        TheoremName::RevImplicationsUniform => Theorem::RevImplications(RevVariant::Uniform),
        TheoremName::RevImplicationsNormal => Theorem::RevImplications(RevVariant::TruncatedNormal),
    })
}

fn verify_cmd(a: VerifyArgs, scan: ScanConfig, out: &mut dyn Write) -> Result<i32, Failure> {
    let (inst, dist, echoes) = load_inputs(&a.inputs)?;
    let theorem = theorem_from(&a, &dist)?;
    let iv = dist.iron(DEFAULT_GRID).ok();
    let verdict = verify(&inst, &dist, iv.as_ref(), theorem, scan);
    let code = verdict.exit_code();
    if a.output.format == Format::Csv {
        let rows = vec![vec![
            verdict.theorem.to_string(),
            verdict.hypothesis_satisfied.to_string(),
            fmt_f(verdict.benchmark_value),
            fmt_f(verdict.alpha),
            fmt_f(verdict.revenue),
            fmt_f(verdict.guarantee),
            fmt_f(verdict.achieved_ratio),
            verdict.pass.to_string(),
        ]];
        let header = [
            "theorem",
            "hypothesis_satisfied",
            "benchmark",
            "alpha",
            "revenue",
            "guarantee",
            "achieved_ratio",
            "pass",
        ];
        emit(&a.output, csv(&header, rows), out)?;
    } else {
        emit_report(&a.output, Report::new("verify", echoes, scan, verdict), out)?;
    }
    Ok(code)
}

fn reproduce_params(a: &ReproduceArgs) -> Result<ExampleParams, Failure> {
    let id: ExampleId = a.example.parse().map_err(Failure::Usage)?;
    let mut p = ExampleParams::defaults(id);
    match &mut p {
        ExampleParams::Gap { n, delta } => {
            *n = a.n.unwrap_or(*n);
            *delta = a.delta.unwrap_or(*delta);
        }
        ExampleParams::ScalingUniform { n, delta, c_high } => {
            *n = a.n.unwrap_or(*n);
            *delta = a.delta.unwrap_or(*delta);
            *c_high = a.c_high.unwrap_or(*c_high);
        }
        ExampleParams::NonMonotone {
            delta,
            eps,
            step,
            t_max,
        } => {
            *delta = a.delta.unwrap_or(*delta);
            *eps = a.eps.unwrap_or(*eps);
            *step = a.step.unwrap_or(*step);
            *t_max = a.t_max.unwrap_or(*t_max);
        }
        ExampleParams::Menu { n, r1, r2, c_high } => {
            *n = a.n.unwrap_or(*n);
            *r1 = a.r1.unwrap_or(*r1);
            *r2 = a.r2.unwrap_or(*r2);
            *c_high = a.c_high.or(*c_high);
        }
        ExampleParams::NonImplementable { anchor, step, t_max } => {
            *anchor = a.anchor.unwrap_or(*anchor);
            *step = a.step.or(*step);
            *t_max = a.t_max.or(*t_max);
        }
        ExampleParams::Smoothed { eps, n, delta } => {
            *eps = a.eps.unwrap_or(*eps);
            *n = a.n.unwrap_or(*n);
            *delta = a.delta.unwrap_or(*delta);
        }
    }
    Ok(p)
}

fn reproduce(a: ReproduceArgs, scan: ScanConfig, out: &mut dyn Write) -> Result<i32, Failure> {
    let params = reproduce_params(&a)?;
    let depth = if a.quick { Depth::Quick } else { Depth::Full };
    let ex = build(params, depth).map_err(|e| Failure::Usage(e.to_string()))?;
    let code = if ex.pass() { EXIT_OK } else { EXIT_FAIL };
    if a.output.format == Format::Csv {
        let rows = ex.facts.iter().map(|f| {
            vec![
                f.name.clone(),
                serde_json::to_value(f.relation)
                    .map(|v| v.as_str().unwrap_or("").to_string())
                    .unwrap_or_default(),
                fmt_f(f.expected),
                fmt_f(f.observed),
                fmt_f(f.tolerance),
                f.pass.to_string(),
            ]
        });
        emit(
            &a.output,
            csv(&["fact", "relation", "expected", "observed", "tolerance", "pass"], rows),
            out,
        )?;
    } else {
        #[derive(Serialize)]
        struct Reproduction {
            pass: bool,
            example: crate::canonical::CanonicalExample,
        }
        let body = Reproduction {
            pass: ex.pass(),
            example: ex,
        };
        emit_report(&a.output, Report::new("reproduce", Vec::new(), scan, body), out)?;
    }
    Ok(code)
}

#[derive(Serialize)]
struct IcSummary {
    menu_size: usize,
    induced_rule: AllocationRule,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected_revenue: Option<f64>,
    report: IcReport,
}

fn check_ic(a: CheckIcArgs, scan: ScanConfig, out: &mut dyn Write) -> Result<i32, Failure> {
    let loaded = load_instance(&a.instance)?;
    let inst = loaded.instance;
    let mut echoes = vec![loaded.echo];
    let (contract, echo) = load_contract(&a.contract, &inst)?;
    echoes.push(echo);
    let revenue = match &a.dist {
        Some(p) => {
            let (d, echo) = load_dist(p)?;
            echoes.push(echo);
            Some(menu_revenue(&inst, &d, &contract))
        }
        None => None,
    };
    if a.grid < 2 {
        return Err(Failure::Usage("--grid must be at least 2".into()));
    }
    let report = ic_grid_check(&inst, &contract, a.grid, true);
    let code = if report.pass { EXIT_OK } else { EXIT_FAIL };
    if a.output.format == Format::Csv {
        let rows = report.checks.iter().map(|c| {
            vec![
                fmt_f(c.anchor),
                c.allocated_action.to_string(),
                c.chosen_action.to_string(),
                c.consistent.to_string(),
                fmt_f(c.d_star),
                fmt_f(c.worst_type),
                c.pass.to_string(),
            ]
        });
        let header = [
            "type",
            "allocated",
            "chosen",
            "consistent",
            "d_star",
            "worst_type",
            "pass",
        ];
        emit(&a.output, csv(&header, rows), out)?;
    } else {
        let summary = IcSummary {
            menu_size: menu_size(&contract),
            induced_rule: induced_rule(&inst, &contract),
            expected_revenue: revenue,
            report,
        };
        emit_report(&a.output, Report::new("check-ic", echoes, scan, summary), out)?;
    }
    Ok(code)
}

fn battery(a: BatteryArgs, scan: ScanConfig, out: &mut dyn Write) -> Result<i32, Failure> {
    let report = run_battery(a.seed, a.count, scan);
    let code = report.exit_code();
    if a.output.format == Format::Csv {
        let rows = report.rows.iter().map(|r| {
            vec![
                r.case.clone(),
                r.verdict.theorem.to_string(),
                r.exit_code.to_string(),
                fmt_f(r.verdict.achieved_ratio),
                fmt_f(r.verdict.guarantee),
            ]
        });
        emit(
            &a.output,
            csv(&["case", "theorem", "exit_code", "achieved_ratio", "guarantee"], rows),
            out,
        )?;
    } else {
        emit_report(
            &a.output,
            Report::new("battery", Vec::new(), scan, report).with_seed(a.seed),
            out,
        )?;
    }
    Ok(code)
}
