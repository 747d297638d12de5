mod json;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use displace::axioms::Verdict;
use displace::calculus::{
    delta_derivative, ftc2_check, ftc_forward_check, integral_over, path_integral, ExprFn, MeasurePath, ScalarFn,
    DEFAULT_SHRINK_LEVELS,
};
use displace::displacement::{delta_ball, SpecJson};
use displace::gauge::{gauge_from_smooth, GaugeJson, DEFAULT_QUAD_TOL};
use displace::registry::{checks, find_check, make_builtin, CheckOptions};
use displace::solver::{solve_ivp, solve_surface, verify_solution, IvpProblem, IvpSolution, SurfaceProblem};
use displace::{DisplacementSpec, Expr, Gauge};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "displace", version, about = "Displacement calculus on a compact interval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run sampled hypothesis checks; one JSON report per line.
    Check(CheckArgs),
    /// Extract the gauge of a spec; JSON plus a sampled (t, g(t)) table.
    Gauge(GaugeArgs),
    /// Δ-ball {t : |Δ(x, t)| < r}.
    Ball(BallArgs),
    /// Δ-derivative of f with respect to a gauge.
    Derive(DeriveArgs),
    /// ∫_[lower, upper) f dμ_g.
    Integrate(IntegrateArgs),
    /// ∫_[a, upper) f(t) D2Δ(α(t), t) dt for a smooth spec.
    PathIntegrate(PathIntegrateArgs),
    /// Check (∫_[a, x) f dμ_g)^Δ = f on a grid.
    Ftc(FtcArgs),
    /// Check F(x) = F(a) + ∫_[a, x) F^Δ dμ_g on a grid.
    Ftc2(FtcArgs),
    /// Solve u'_g = rhs(t, u), u(a) = u0.
    SolveIvp(SolveIvpArgs),
    /// Solve u'_W + h = 0, u'_W(a) = 0, u(b) = C.
    SolveSurface(SolveSurfaceArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SpecSource {
    /// Spec file, or inline JSON.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    spec: Option<String>,
    /// Built-in spec name.
    #[arg(long)]
    builtin: Option<String>,
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    source: SpecSource,
    /// Comma-separated checks; defaults to every check that applies.
    #[arg(long, value_delimiter = ',')]
    which: Vec<String>,
    #[arg(long, default_value_t = 21)]
    samples: usize,
    #[arg(long, default_value_t = 8)]
    shrink_levels: usize,
    /// Lattice size for d2.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Rescaling φ(r) for h2prime.
    #[arg(long, default_value = "r")]
    phi: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GaugeArgs {
    #[command(flatten)]
    source: SpecSource,
    /// Points in the sampled table.
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[arg(long, default_value_t = DEFAULT_QUAD_TOL)]
    tol: f64,
    /// Gauge JSON path; the table goes next to it with a `.csv` extension.
    #[arg(long)]
    out: Option<PathBuf>,
    /// What to print when `--out` is absent.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct BallArgs {
    #[command(flatten)]
    source: SpecSource,
    #[arg(long)]
    x: f64,
    #[arg(long)]
    r: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GaugeRef {
    /// Gauge file or inline JSON, `extract:<builtin>`, or `identity`.
    #[arg(long)]
    gauge: String,
}

#[derive(Args)]
struct DeriveArgs {
    /// Function of t.
    #[arg(long)]
    f: String,
    #[command(flatten)]
    gauge: GaugeRef,
    /// Points to evaluate at; defaults to the grid.
    #[arg(long, num_args = 1..)]
    x: Vec<f64>,
    #[arg(long, default_value_t = 11)]
    grid: usize,
    #[arg(long, default_value_t = DEFAULT_SHRINK_LEVELS)]
    shrink_levels: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct IntegrateArgs {
    #[arg(long)]
    f: String,
    #[command(flatten)]
    gauge: GaugeRef,
    /// Defaults to the left end of the domain.
    #[arg(long)]
    lower: Option<f64>,
    /// Defaults to the right end of the domain.
    #[arg(long)]
    upper: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PathIntegrateArgs {
    #[command(flatten)]
    source: SpecSource,
    #[arg(long)]
    f: String,
    /// Path α(t) in the domain.
    #[arg(long, default_value = "t")]
    alpha: String,
    /// Defaults to the right end of the domain.
    #[arg(long)]
    upper: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FtcArgs {
    /// Function of t; for ftc2 `gauge` stands for the gauge itself.
    #[arg(long)]
    f: String,
    #[command(flatten)]
    gauge: GaugeRef,
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[arg(long, default_value_t = DEFAULT_SHRINK_LEVELS)]
    shrink_levels: usize,
    /// Exit with status 2 when the report exceeds this.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveIvpArgs {
    /// Right-hand side in t and u.
    #[arg(long)]
    rhs: String,
    #[command(flatten)]
    gauge: GaugeRef,
    #[arg(long)]
    u0: f64,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(long, default_value_t = 0)]
    picard: usize,
    /// Verify the residual on this many cells and exit with status 2 above `--tol`.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SolveSurfaceArgs {
    /// Source h(t).
    #[arg(long)]
    h: String,
    /// Work gauge.
    #[command(flatten)]
    gauge: GaugeRef,
    /// Terminal value u(b).
    #[arg(long = "C", default_value_t = 0.0)]
    c: f64,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[command(flatten)]
    output: Output,
}

fn read_source(src: &str) -> anyhow::Result<String> {
    if src.trim_start().starts_with('{') {
        Ok(src.to_string())
    } else {
        fs::read_to_string(src).with_context(|| format!("reading {src}"))
    }
}

fn load_spec(source: &SpecSource) -> anyhow::Result<DisplacementSpec> {
    if let Some(name) = &source.builtin {
        return Ok(make_builtin(name)?);
    }
    let src = source.spec.as_deref().expect("clap requires --spec or --builtin");
    let json: SpecJson = serde_json::from_str(&read_source(src)?).context("parsing spec")?;
    Ok(DisplacementSpec::from_json(&json)?)
}

fn spec_gauge(spec: &DisplacementSpec, tol: f64) -> anyhow::Result<Gauge> {
    match spec {
        DisplacementSpec::Smooth(s) => Ok(gauge_from_smooth(s, tol)?),
        DisplacementSpec::Stieltjes(g) => Ok(g.clone()),
        other => bail!("a `{}` spec has no gauge", other.kind()),
    }
}

fn load_gauge(reference: &str) -> anyhow::Result<Gauge> {
    if reference == "identity" {
        return Ok(Gauge::identity(0.0, 1.0)?);
    }
    if let Some(name) = reference.strip_prefix("extract:") {
        return spec_gauge(&make_builtin(name)?, DEFAULT_QUAD_TOL);
    }
    let text = read_source(reference)?;
    match serde_json::from_str::<GaugeJson>(&text) {
        Ok(g) => Ok(Gauge::from_json(&g)?),
        Err(gauge_err) => {
            let spec: SpecJson = serde_json::from_str(&text)
                .map_err(|_| anyhow!(gauge_err))
                .context("parsing gauge")?;
            spec_gauge(&DisplacementSpec::from_json(&spec)?, DEFAULT_QUAD_TOL)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> anyhow::Result<()> {
    emit(out, &(json::to_string(value)? + "\n"))
}

fn cmd_check(args: &CheckArgs) -> anyhow::Result<u8> {
    let spec = load_spec(&args.source)?;
    let opts = CheckOptions {
        samples: args.samples,
        shrink_levels: args.shrink_levels,
        grid: args.grid,
        phi: Expr::parse(&args.phi, &["r"])?,
        seed: args.seed,
    };
    let selected = if args.which.is_empty() {
        checks().iter().copied().filter(|c| c.applies_to(&spec)).collect()
    } else {
        let mut v = Vec::new();
        for name in &args.which {
            let c = find_check(name.trim())?;
            if !c.applies_to(&spec) {
                bail!("check `{}` does not apply to a `{}` spec", c.name(), spec.kind());
            }
            v.push(c);
        }
        v
    };
    let mut text = String::new();
    let (mut failed, mut inconclusive) = (false, false);
    for c in selected {
        log::info!("running {}", c.name());
        let report = c.run(&spec, &opts)?;
        failed |= report.verdict == Verdict::Fail;
        inconclusive |= report.verdict == Verdict::Inconclusive;
        text += &json::to_string(&report)?;
        text.push('\n');
    }
    emit(args.out.as_deref(), &text)?;
    Ok(if failed {
        2
    } else if inconclusive {
        3
    } else {
        0
    })
}

fn gauge_table(g: &Gauge, n: usize) -> anyhow::Result<String> {
    let mut out = String::from("t,g\n");
    for t in g.domain().grid(n) {
        out += &format!("{t:.16e},{:.16e}\n", g.eval(t)?);
    }
    Ok(out)
}

fn cmd_gauge(args: &GaugeArgs) -> anyhow::Result<u8> {
    let g = spec_gauge(&load_spec(&args.source)?, args.tol)?;
    let gauge_json = || -> anyhow::Result<String> {
        let j = g
            .to_json()
            .context("the density has no expression form; give the spec a closed-form `d2`")?;
        Ok(json::to_string(&j)? + "\n")
    };
    let table = gauge_table(&g, args.grid)?;
    match &args.out {
        Some(path) => {
            emit(Some(&path.with_extension("csv")), &table)?;
            emit(Some(path), &gauge_json()?)?;
        }
        None => match args.format {
            Format::Json => emit(None, &gauge_json()?)?,
            Format::Csv => emit(None, &table)?,
        },
    }
    Ok(0)
}

#[derive(Serialize)]
struct BallReport {
    x: f64,
    r: f64,
    lo: f64,
    hi: f64,
    lo_closed: bool,
    hi_closed: bool,
    interval: String,
}

fn cmd_ball(args: &BallArgs) -> anyhow::Result<u8> {
    let spec = load_spec(&args.source)?;
    let b = delta_ball(&spec, args.x, args.r, args.tol)?;
    emit_json(
        args.out.as_deref(),
        &BallReport {
            x: args.x,
            r: args.r,
            lo: b.lo,
            hi: b.hi,
            lo_closed: b.lo_closed,
            hi_closed: b.hi_closed,
            interval: b.to_string(),
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct DerivativeRow {
    x: f64,
    value: Option<f64>,
    point_class: displace::gauge::PointClass,
    error_estimate: f64,
    samples_used: usize,
}

fn cmd_derive(args: &DeriveArgs) -> anyhow::Result<u8> {
    let f = ExprFn::parse(&args.f)?;
    let g = load_gauge(&args.gauge.gauge)?;
    let xs = if args.x.is_empty() {
        g.domain().grid(args.grid)
    } else {
        args.x.clone()
    };
    let mut rows = Vec::with_capacity(xs.len());
    for x in xs {
        let d = delta_derivative(&f, &g, x, args.shrink_levels)?;
        rows.push(DerivativeRow {
            x,
            value: d.value,
            point_class: d.point_class,
            error_estimate: d.error_estimate,
            samples_used: d.samples_used,
        });
    }
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(args.output.out.as_deref(), &rows)?,
        Format::Csv => {
            let mut text = String::from("x,value,point_class,error_estimate\n");
            for r in &rows {
                let value = r.value.map_or(String::new(), |v| format!("{v:.16e}"));
                let class = serde_json::to_value(r.point_class)?;
                text += &format!(
                    "{:.16e},{value},{},{:.16e}\n",
                    r.x,
                    class.as_str().unwrap_or(""),
                    r.error_estimate
                );
            }
            emit(args.output.out.as_deref(), &text)?;
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct IntegralReport {
    lower: f64,
    upper: f64,
    value: f64,
}

fn cmd_integrate(args: &IntegrateArgs) -> anyhow::Result<u8> {
    let f = ExprFn::parse(&args.f)?;
    let g = load_gauge(&args.gauge.gauge)?;
    let lower = args.lower.unwrap_or(g.domain().a);
    let upper = args.upper.unwrap_or(g.domain().b);
    let value = integral_over(&f, &g, lower, upper)?;
    emit_json(args.out.as_deref(), &IntegralReport { lower, upper, value })?;
    Ok(0)
}

fn cmd_path_integrate(args: &PathIntegrateArgs) -> anyhow::Result<u8> {
    let spec = load_spec(&args.source)?;
    let f = ExprFn::parse(&args.f)?;
    let path = MeasurePath::parse(&args.alpha)?;
    let dom = spec
        .interval()
        .ok_or_else(|| anyhow!("a `{}` spec has no interval", spec.kind()))?;
    let upper = args.upper.unwrap_or(dom.b);
    let value = path_integral(&f, &path, &spec, upper)?;
    emit_json(
        args.out.as_deref(),
        &IntegralReport {
            lower: dom.a,
            upper,
            value,
        },
    )?;
    Ok(0)
}

fn cmd_ftc(args: &FtcArgs) -> anyhow::Result<u8> {
    let f = ExprFn::parse(&args.f)?;
    let g = load_gauge(&args.gauge.gauge)?;
    let report = ftc_forward_check(&f, &g, args.grid, args.shrink_levels)?;
    emit_json(args.out.as_deref(), &report)?;
    Ok(match args.tol {
        Some(tol) if !report.within(tol) => 2,
        _ => 0,
    })
}

fn cmd_ftc2(args: &FtcArgs) -> anyhow::Result<u8> {
    let g = load_gauge(&args.gauge.gauge)?;
    let expr;
    let big_f: &dyn ScalarFn = if args.f.trim() == "gauge" {
        &g
    } else {
        expr = ExprFn::parse(&args.f)?;
        &expr
    };
    let report = ftc2_check(big_f, &g, args.grid, args.shrink_levels)?;
    emit_json(args.out.as_deref(), &report)?;
    Ok(match args.tol {
        Some(tol) if !report.within(tol) => 2,
        _ => 0,
    })
}

#[derive(Serialize)]
struct SolutionJson<'a> {
    method: &'a str,
    step: f64,
    final_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_residual: Option<f64>,
    jump_records: &'a [displace::solver::JumpRecord],
    nodes: &'a [(f64, f64)],
}

fn emit_solution(output: &Output, sol: &IvpSolution, max_residual: Option<f64>) -> anyhow::Result<()> {
    match output.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(output.out.as_deref(), &sol.to_csv()),
        Format::Json => emit_json(
            output.out.as_deref(),
            &SolutionJson {
                method: &sol.method,
                step: sol.step_stat,
                final_value: sol.final_value(),
                max_residual,
                jump_records: &sol.jump_records,
                nodes: &sol.nodes,
            },
        ),
    }
}

fn cmd_solve_ivp(args: &SolveIvpArgs) -> anyhow::Result<u8> {
    let g = load_gauge(&args.gauge.gauge)?;
    let rhs = Expr::parse(&args.rhs, &["t", "u"])?;
    let p = IvpProblem::new(g, move |t, u| rhs.eval_slots(&[t, u]).unwrap_or(f64::NAN), args.u0);
    let sol = solve_ivp(&p, args.step, args.picard)?;
    log::info!(
        "{}: {} nodes, u(b) = {}",
        sol.method,
        sol.nodes.len(),
        sol.final_value()
    );
    let residual = match args.tol {
        Some(_) => Some(verify_solution(&p, &sol, args.grid)?.max_residual),
        None => None,
    };
    emit_solution(&args.output, &sol, residual)?;
    Ok(match (args.tol, residual) {
        (Some(tol), Some(r)) if r.is_nan() || r > tol => 2,
        _ => 0,
    })
}

fn cmd_solve_surface(args: &SolveSurfaceArgs) -> anyhow::Result<u8> {
    let w = load_gauge(&args.gauge.gauge)?;
    let h = Expr::parse(&args.h, &["t"])?;
    let p = SurfaceProblem::new(w, move |t| h.eval_slots(&[t]).unwrap_or(f64::NAN), args.c);
    let sol = solve_surface(&p, args.step)?;
    emit_solution(&args.output, &sol, None)?;
    Ok(0)
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Gauge(a) => cmd_gauge(a),
        Command::Ball(a) => cmd_ball(a),
        Command::Derive(a) => cmd_derive(a),
        Command::Integrate(a) => cmd_integrate(a),
        Command::PathIntegrate(a) => cmd_path_integrate(a),
        Command::Ftc(a) => cmd_ftc(a),
        Command::Ftc2(a) => cmd_ftc2(a),
        Command::SolveIvp(a) => cmd_solve_ivp(a),
        Command::SolveSurface(a) => cmd_solve_surface(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("DISPLACE_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
