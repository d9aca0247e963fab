//! `ranksolve` command-line front end.
//!
//! Exit codes: 0 when every solve converged, 1 on runtime errors, 2 on usage errors,
//! 3 when a result was produced but some solve did not converge.

mod settings;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ndarray::Array1;
use serde::Serialize;

use ranksolve::admm::AdmmConfig;
use ranksolve::bench::{self, BenchConfig, BenchRow};
use ranksolve::data::{self, Noise, Pattern, SyntheticSpec};
use ranksolve::metrics::{Covariance, EvalReport};
use ranksolve::ppmm::PpmmConfig;
use ranksolve::tune::{self, SelectionRule, TuneConfig, TuneProtocol, TuneRow};
use ranksolve::{AlgoKind, PenaltyKind, RegressionProblem, RegularizerSpec, SolutionRecord, SolverConfig};

use settings::{Settings, Usage};

const DEFAULT_TIME_CAP_SECS: f64 = 4.0 * 3600.0;

#[derive(Parser, Debug)]
#[command(name = "ranksolve", version, about = "Tuning-free robust regression with the Wilcoxon rank loss")]
struct Cli {
    /// TOML file with default values for any flag (flags and environment win).
    #[arg(long, global = true, env = "RANKSOLVE_CONFIG")]
    config: Option<PathBuf>,
    /// Worker threads for tune and bench.
    #[arg(long, global = true, env = "RANKSOLVE_THREADS")]
    threads: Option<String>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic data set as CSV (response in the last column).
    Gen(GenArgs),
    /// Solve one problem.
    Solve(SolveArgs),
    /// Choose lambda on a grid by held-out Wilcoxon loss.
    Tune(TuneArgs),
    /// Run the synthetic benchmark matrix.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// ppmm or admm.
    #[arg(long, env = "RANKSOLVE_ALGO")]
    algo: Option<String>,
    /// l1, scad or mcp.
    #[arg(long, env = "RANKSOLVE_REG")]
    reg: Option<String>,
    /// Shape parameter of SCAD (default 3.7) or MCP (default 2).
    #[arg(long, env = "RANKSOLVE_A")]
    a: Option<String>,
    /// Target relative KKT residual.
    #[arg(long, env = "RANKSOLVE_TOL")]
    tol: Option<String>,
    /// Outer iteration cap (PPMM per stage) or ADMM iteration cap.
    #[arg(long, env = "RANKSOLVE_MAX_ITERS")]
    max_iters: Option<String>,
    /// Wall-clock cap per solve in seconds.
    #[arg(long, env = "RANKSOLVE_TIME_CAP_SECS")]
    time_cap_secs: Option<String>,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// CSV file, one row per observation, response in the last column.
    #[arg(long = "in", env = "RANKSOLVE_IN")]
    input: Option<PathBuf>,
    /// The CSV file starts with a header row.
    #[arg(long)]
    header: bool,
    /// Single-column CSV with the true coefficients, for error columns.
    #[arg(long, env = "RANKSOLVE_TRUTH")]
    truth: Option<PathBuf>,
    /// Row correlation assumed for the model error (compound symmetry).
    #[arg(long, env = "RANKSOLVE_DESIGN_CORR")]
    design_corr: Option<String>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, env = "RANKSOLVE_PATTERN")]
    pattern: Option<String>,
    /// normal<variance>, mixture, t4 or cauchy.
    #[arg(long, env = "RANKSOLVE_NOISE")]
    noise: Option<String>,
    #[arg(long, env = "RANKSOLVE_N")]
    n: Option<String>,
    #[arg(long, env = "RANKSOLVE_P")]
    p: Option<String>,
    #[arg(long, env = "RANKSOLVE_SEED")]
    seed: Option<String>,
    #[arg(long, env = "RANKSOLVE_OUT")]
    out: Option<PathBuf>,
    /// Also write the true coefficients here.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, env = "RANKSOLVE_LAMBDA")]
    lambda: Option<String>,
    /// Lambda as a fraction of lambda_ref, the smallest value with a zero solution.
    #[arg(long, env = "RANKSOLVE_LAMBDA_FRACTION", conflicts_with = "lambda")]
    lambda_fraction: Option<String>,
    /// JSON result file.
    #[arg(long, env = "RANKSOLVE_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Comma-separated lambda values; defaults to a log grid below lambda_ref.
    #[arg(long, env = "RANKSOLVE_LAMBDA_GRID")]
    lambda_grid: Option<String>,
    #[arg(long, env = "RANKSOLVE_GRID_SIZE")]
    grid_size: Option<String>,
    #[arg(long, env = "RANKSOLVE_GRID_MIN_RATIO")]
    grid_min_ratio: Option<String>,
    /// K-fold cross-validation; 0 or 1 uses a single validation split.
    #[arg(long, env = "RANKSOLVE_FOLDS")]
    folds: Option<String>,
    /// Training share of the single validation split.
    #[arg(long, env = "RANKSOLVE_VAL_FRACTION")]
    val_fraction: Option<String>,
    #[arg(long, env = "RANKSOLVE_SEED")]
    seed: Option<String>,
    /// Stop after this many grid points without improvement; 0 walks the whole grid.
    #[arg(long, env = "RANKSOLVE_PATIENCE")]
    patience: Option<String>,
    /// 1se (largest lambda within one standard error of the best score) or min.
    #[arg(long, env = "RANKSOLVE_RULE")]
    rule: Option<String>,
    /// Stop the grid walk once a fit has more nonzeros than this share of its rows; 0 disables.
    #[arg(long, env = "RANKSOLVE_MAX_NNZ_FRACTION")]
    max_nnz_fraction: Option<String>,
    #[arg(long, env = "RANKSOLVE_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, env = "RANKSOLVE_N")]
    n: Option<String>,
    #[arg(long, env = "RANKSOLVE_P")]
    p: Option<String>,
    /// Comma-separated patterns (default: both).
    #[arg(long, env = "RANKSOLVE_PATTERNS")]
    patterns: Option<String>,
    /// Comma-separated noise laws (default: all six).
    #[arg(long, env = "RANKSOLVE_NOISES")]
    noises: Option<String>,
    /// Comma-separated penalties; overrides --reg.
    #[arg(long, env = "RANKSOLVE_REGS")]
    regs: Option<String>,
    /// Comma-separated algorithms; overrides --algo.
    #[arg(long, env = "RANKSOLVE_ALGOS")]
    algos: Option<String>,
    #[arg(long, env = "RANKSOLVE_SEED")]
    seed: Option<String>,
    /// Lambda as a fraction of lambda_ref for every penalty, replacing the tuned defaults.
    #[arg(long, env = "RANKSOLVE_LAMBDA_FRACTION")]
    lambda_fraction: Option<String>,
    /// JSON output file.
    #[arg(long, env = "RANKSOLVE_OUT")]
    out: Option<PathBuf>,
    /// CSV output file.
    #[arg(long, env = "RANKSOLVE_CSV")]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.downcast_ref::<Usage>().is_some() { 2 } else { 1 })
        }
    }
}

/// Returns whether every solve converged.
fn run(cli: Cli) -> Result<bool> {
    let mut s = Settings::load(cli.config.as_deref())?;
    if let Some(t) = s.parse::<usize>("threads", cli.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Gen(a) => cmd_gen(a, s),
        Command::Solve(a) => cmd_solve(a, s),
        Command::Tune(a) => cmd_tune(a, s),
        Command::Bench(a) => cmd_bench(a, s),
    }
}

struct SolverChoice {
    algo: AlgoKind,
    reg: PenaltyKind,
    a: Option<f64>,
    ppmm: PpmmConfig<f64>,
    admm: AdmmConfig<f64>,
}

impl SolverChoice {
    fn config(&self) -> SolverConfig<f64> {
        match self.algo {
            AlgoKind::Ppmm => SolverConfig::Ppmm(self.ppmm.clone()),
            AlgoKind::Admm => SolverConfig::Admm(self.admm.clone()),
        }
    }
}

fn solver_choice(a: SolverArgs, s: &mut Settings) -> Result<SolverChoice> {
    let algo = s.parse::<AlgoKind>("algo", a.algo)?.unwrap_or(AlgoKind::Ppmm);
    let reg = s.parse::<PenaltyKind>("reg", a.reg)?.unwrap_or(PenaltyKind::L1);
    let shape = s.parse::<f64>("a", a.a)?;
    let mut ppmm = PpmmConfig::default();
    let mut admm = AdmmConfig::default();
    if let Some(tol) = s.parse::<f64>("tol", a.tol)? {
        ppmm.stage2_tol = tol;
        ppmm.stage1_tol = ppmm.stage1_tol.max(tol);
        admm.tol = tol;
    }
    if let Some(m) = s.parse::<usize>("max_iters", a.max_iters)? {
        ppmm.max_outer_1 = m;
        ppmm.max_outer_2 = m;
        admm.max_iters = m;
    }
    let cap = s.parse::<f64>("time_cap_secs", a.time_cap_secs)?.unwrap_or(DEFAULT_TIME_CAP_SECS);
    if !(cap > 0.0) {
        return Err(Usage(format!("time cap must be positive, got {cap}")).into());
    }
    let cap = Duration::try_from_secs_f64(cap).map_err(|e| Usage(format!("time cap: {e}")))?;
    ppmm.time_cap = Some(cap);
    admm.time_cap = Some(cap);
    ppmm.validate().map_err(|e| Usage(e.to_string()))?;
    admm.validate().map_err(|e| Usage(e.to_string()))?;
    Ok(SolverChoice {
        algo,
        reg,
        a: shape,
        ppmm,
        admm,
    })
}

struct Input {
    name: String,
    x: ndarray::Array2<f64>,
    b: Array1<f64>,
    truth: Option<Array1<f64>>,
    cov: Covariance,
}

fn load_input(a: InputArgs, s: &mut Settings) -> Result<Input> {
    let path = s
        .path("in", a.input)
        .ok_or_else(|| Usage("missing --in".into()))?;
    let header = a.header || s.flag("header")?;
    let (x, b) = data::load_matrix_csv::<f64>(&path, header)?;
    let truth = match s.path("truth", a.truth) {
        Some(t) => {
            let col = read_column(&t)?;
            if col.len() != x.ncols() {
                anyhow::bail!("{}: {} coefficients for {} columns", t.display(), col.len(), x.ncols());
            }
            Some(col)
        }
        None => None,
    };
    let rho = s.parse::<f64>("design_corr", a.design_corr)?.unwrap_or(data::DESIGN_CORRELATION);
    Ok(Input {
        name: path.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        x,
        b,
        truth,
        cov: Covariance::CompoundSymmetry(rho),
    })
}

fn read_column(path: &Path) -> Result<Array1<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t
            .parse()
            .with_context(|| format!("{}:{}: not a number: {t}", path.display(), i + 1))?;
        out.push(v);
    }
    Ok(Array1::from(out))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    use std::io::Write;
    writeln!(w)?;
    Ok(())
}

fn cmd_gen(a: GenArgs, mut s: Settings) -> Result<bool> {
    let spec = SyntheticSpec {
        n: s.parse("n", a.n)?.unwrap_or(200),
        p: s.parse("p", a.p)?.unwrap_or(800),
        pattern: s.parse::<Pattern>("pattern", a.pattern)?.unwrap_or(Pattern::Sparse3),
        noise: s.parse::<Noise>("noise", a.noise)?.unwrap_or(Noise::Normal { variance: 0.25 }),
        seed: s.parse("seed", a.seed)?.unwrap_or(1),
    };
    spec.validate().map_err(|e| Usage(e.to_string()))?;
    let out = s.path("out", a.out).ok_or_else(|| Usage("missing --out".into()))?;
    let d = data::gen_synthetic::<f64>(&spec)?;
    data::save_matrix_csv(&out, &d.x, &d.b)?;
    if let Some(t) = s.path("truth", a.truth) {
        let body: String = d.beta_true.iter().map(|v| format!("{v:.16e}\n")).collect();
        std::fs::write(&t, body).with_context(|| format!("writing {}", t.display()))?;
    }
    #[derive(Serialize)]
    struct Echo<'a> {
        name: String,
        spec: &'a SyntheticSpec,
        out: String,
        config_echo: &'a BTreeMap<String, String>,
    }
    let echo = Echo {
        name: spec.name(),
        spec: &spec,
        out: out.display().to_string(),
        config_echo: s.echo(),
    };
    println!("{}", serde_json::to_string(&echo)?);
    Ok(true)
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    pbname: &'a str,
    reg: String,
    lambda: f64,
    n: usize,
    p: usize,
    nnz: usize,
    #[serde(flatten)]
    record: SolutionRecord,
}

fn cmd_solve(a: SolveArgs, mut s: Settings) -> Result<bool> {
    let input = load_input(a.input, &mut s)?;
    let choice = solver_choice(a.solver, &mut s)?;
    let lambda = s.parse::<f64>("lambda", a.lambda)?;
    let fraction = s.parse::<f64>("lambda_fraction", a.lambda_fraction)?;
    let base = RegressionProblem::new(input.x, input.b, RegularizerSpec::l1(1.0)?)?;
    let lambda = match (lambda, fraction) {
        (Some(l), _) => l,
        (None, Some(f)) => f * base.lambda_ref(),
        (None, None) => return Err(Usage("give --lambda or --lambda-fraction".into()).into()),
    };
    let spec = RegularizerSpec::new(choice.reg, lambda, choice.a).map_err(|e| Usage(e.to_string()))?;
    let problem = base.with_spec(spec);
    let sol = choice.config().solve(&problem, None)?;

    let mut report = EvalReport::new(sol.beta.view(), sol.objective, sol.eta_kkt);
    if let Some(t) = &input.truth {
        report = report.with_truth(sol.beta.view(), t.view(), &input.cov);
    }
    let row = BenchRow {
        pbname: input.name.clone(),
        reg: choice.reg.name().to_string(),
        algo: choice.algo.to_string(),
        n: problem.n(),
        p: problem.p(),
        lambda,
        lambda_source: "user".into(),
        status: Some(sol.status),
        nnz: Some(report.nnz),
        eta: Some(report.eta),
        pobj: Some(report.pobj),
        l1_err: report.l1_err,
        l2_err: report.l2_err,
        model_err: report.model_err,
        fp: report.fp,
        fn_: report.fn_,
        time_secs: sol.elapsed.as_secs_f64(),
        time_hms: bench::format_hms(sol.elapsed),
        error: None,
    };
    print!("{}", bench::format_table(std::slice::from_ref(&row)));
    let mut record = sol.to_record();
    record.config_echo = s.echo().clone();
    let nnz = report.nnz;
    record.report = Some(report);
    if let Some(out) = s.path("out", a.out) {
        let output = SolveOutput {
            pbname: &input.name,
            reg: choice.reg.name().to_string(),
            lambda,
            n: problem.n(),
            p: problem.p(),
            nnz,
            record,
        };
        write_json(&out, &output)?;
    }
    Ok(sol.is_converged())
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Usage(format!("bad lambda grid value '{}'", t.trim())).into())
        })
        .collect()
}

#[derive(Serialize)]
struct TuneOutput<'a> {
    best_lambda: f64,
    best_index: usize,
    min_index: usize,
    rule: SelectionRule,
    grid: &'a [f64],
    rows: &'a [TuneRow],
    best: Option<SolutionRecord>,
    time_secs: f64,
    config_echo: &'a BTreeMap<String, String>,
}

fn cmd_tune(a: TuneArgs, mut s: Settings) -> Result<bool> {
    let input = load_input(a.input, &mut s)?;
    let choice = solver_choice(a.solver, &mut s)?;
    let seed = s.parse::<u64>("seed", a.seed)?.unwrap_or(0);
    let folds = s.parse::<usize>("folds", a.folds)?.unwrap_or(0);
    let fraction = s.parse::<f64>("val_fraction", a.val_fraction)?.unwrap_or(0.8);
    let protocol = if folds >= 2 {
        TuneProtocol::KFold { folds, seed }
    } else {
        TuneProtocol::Validation { fraction, seed }
    };
    let grid = match s.get("lambda_grid", a.lambda_grid) {
        Some(text) => parse_grid(&text)?,
        None => {
            let size = s.parse::<usize>("grid_size", a.grid_size)?.unwrap_or(20);
            let ratio = s.parse::<f64>("grid_min_ratio", a.grid_min_ratio)?.unwrap_or(1e-4);
            let lref = RegressionProblem::new(input.x.clone(), input.b.clone(), RegularizerSpec::l1(1.0)?)?.lambda_ref();
            if !(lref > 0.0) {
                anyhow::bail!("lambda_ref is zero: the response carries no signal for any column");
            }
            tune::default_grid(lref, size, ratio).map_err(|e| Usage(e.to_string()))?
        }
    };
    let grid = tune::normalize_grid(&grid).map_err(|e| Usage(e.to_string()))?;
    let mut cfg = TuneConfig::new(choice.config(), choice.reg);
    cfg.a = choice.a;
    cfg.protocol = protocol;
    if let Some(p) = s.parse::<usize>("patience", a.patience)? {
        cfg.patience = p;
    }
    if let Some(r) = s.parse::<SelectionRule>("rule", a.rule)? {
        cfg.rule = r;
    }
    if let Some(f) = s.parse::<f64>("max_nnz_fraction", a.max_nnz_fraction)? {
        if !(f >= 0.0) {
            return Err(Usage(format!("--max-nnz-fraction must be nonnegative, got {f}")).into());
        }
        cfg.max_nnz_fraction = (f > 0.0).then_some(f);
    }
    let res = tune::tune(&input.x, &input.b, &grid, &cfg)?;

    println!("{:>14}  {:>14}  {:>10}  {:>8}  converged", "lambda", "score", "std err", "nnz");
    for (i, r) in res.rows.iter().enumerate() {
        let score = r.score.map(|v| format!("{v:.8e}")).unwrap_or_else(|| "-".into());
        let se = r.std_err.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
        let nnz: Vec<String> = r.folds.iter().map(|f| f.nnz.to_string()).collect();
        let mark = match (i == res.best_index, i == res.min_index) {
            (true, _) => "  <- best",
            (false, true) => "  <- min",
            _ => "",
        };
        println!(
            "{:>14.6e}  {:>14}  {:>10}  {:>8}  {}{}",
            r.lambda,
            score,
            se,
            nnz.join("/"),
            r.all_converged(),
            mark
        );
    }
    println!("best lambda ({} rule): {:.6e}", cfg.rule, res.best_lambda);
    let mut converged = res.rows.iter().all(TuneRow::all_converged);
    let best = res.best_solution.as_ref().map(|sol| {
        converged &= sol.is_converged();
        let mut rec = sol.to_record();
        let mut rep = EvalReport::new(sol.beta.view(), sol.objective, sol.eta_kkt);
        if let Some(t) = &input.truth {
            rep = rep.with_truth(sol.beta.view(), t.view(), &input.cov);
        }
        rec.report = Some(rep);
        rec
    });
    if let Some(rep) = best.as_ref().and_then(|b| b.report.as_ref()) {
        println!(
            "refit: nnz {} eta {:.2e} pobj {:.8e}{}",
            rep.nnz,
            rep.eta,
            rep.pobj,
            match (rep.fp, rep.fn_) {
                (Some(fp), Some(fnn)) => format!(" FP {fp} FN {fnn}"),
                _ => String::new(),
            }
        );
    }
    if let Some(out) = s.path("out", a.out) {
        let output = TuneOutput {
            best_lambda: res.best_lambda,
            best_index: res.best_index,
            min_index: res.min_index,
            rule: cfg.rule,
            grid: &res.grid,
            rows: &res.rows,
            best,
            time_secs: res.elapsed.as_secs_f64(),
            config_echo: s.echo(),
        };
        write_json(&out, &output)?;
    }
    Ok(converged)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|e| Usage(format!("bad {what} '{}': {e}", t.trim())).into())
        })
        .collect()
}

#[derive(Serialize)]
struct BenchOutput<'a> {
    rows: &'a [BenchRow],
    config_echo: &'a BTreeMap<String, String>,
}

fn cmd_bench(a: BenchArgs, mut s: Settings) -> Result<bool> {
    let regs_flag = s.get("regs", a.regs);
    let algos_flag = s.get("algos", a.algos);
    let choice = solver_choice(a.solver, &mut s)?;
    let mut cfg = BenchConfig::new(s.parse("n", a.n)?.unwrap_or(200), s.parse("p", a.p)?.unwrap_or(800));
    if let Some(t) = s.get("patterns", a.patterns) {
        cfg.patterns = parse_list(&t, "pattern")?;
    }
    if let Some(t) = s.get("noises", a.noises) {
        cfg.noises = parse_list(&t, "noise")?;
    }
    cfg.regs = match regs_flag {
        Some(t) => parse_list(&t, "penalty")?,
        None => vec![choice.reg],
    };
    cfg.algos = match algos_flag {
        Some(t) => parse_list(&t, "algorithm")?,
        None => vec![choice.algo],
    };
    cfg.seed = s.parse("seed", a.seed)?.unwrap_or(1);
    cfg.lambda_fraction = s.parse("lambda_fraction", a.lambda_fraction)?;
    cfg.ppmm = choice.ppmm;
    cfg.admm = choice.admm;
    for spec in cfg.specs() {
        spec.validate().map_err(|e| Usage(e.to_string()))?;
    }
    let rows = bench::run_bench(&cfg).map_err(|e| Usage(e.to_string()))?;
    print!("{}", bench::format_table(&rows));
    if let Some(out) = s.path("out", a.out) {
        write_json(
            &out,
            &BenchOutput {
                rows: &rows,
                config_echo: s.echo(),
            },
        )?;
    }
    if let Some(path) = s.path("csv", a.csv) {
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        bench::write_csv(&rows, BufWriter::new(f))?;
    }
    Ok(rows.iter().all(BenchRow::converged))
}
