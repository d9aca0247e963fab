//! Benchmark matrix over the synthetic patterns and noise laws.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::AdmmConfig;
use crate::data::{gen_synthetic, Noise, Pattern, SyntheticSpec};
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::ppmm::PpmmConfig;
use crate::problem::RegressionProblem;
use crate::regularizers::{PenaltyKind, RegularizerSpec};
use crate::solution::SolveStatus;
use crate::solver::{AlgoKind, SolverConfig};

/// Default `lambda / lambda_ref` per penalty: the median, rounded, of the held-out loss
/// minimizer over six 200 x 800 synthetic instances tuned with a 40-point grid.
pub fn default_lambda_fraction(kind: PenaltyKind) -> f64 {
    match kind {
        PenaltyKind::L1 => 0.3,
        PenaltyKind::Scad | PenaltyKind::Mcp => 0.4,
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n: usize,
    pub p: usize,
    pub patterns: Vec<Pattern>,
    pub noises: Vec<Noise>,
    pub regs: Vec<PenaltyKind>,
    pub algos: Vec<AlgoKind>,
    /// Instance `i` of the matrix uses data seed `seed + i`.
    pub seed: u64,
    /// Overrides the tuned default `lambda / lambda_ref` for every penalty.
    pub lambda_fraction: Option<f64>,
    pub ppmm: PpmmConfig<f64>,
    pub admm: AdmmConfig<f64>,
}

impl BenchConfig {
    pub fn new(n: usize, p: usize) -> Self {
        BenchConfig {
            n,
            p,
            patterns: Pattern::ALL.to_vec(),
            noises: Noise::ALL.to_vec(),
            regs: vec![PenaltyKind::L1],
            algos: vec![AlgoKind::Ppmm],
            seed: 1,
            lambda_fraction: None,
            ppmm: PpmmConfig::default(),
            admm: AdmmConfig::default(),
        }
    }

    /// Data specs in table order: patterns outermost, then noises.
    pub fn specs(&self) -> Vec<SyntheticSpec> {
        let mut out = Vec::new();
        for &pattern in &self.patterns {
            for &noise in &self.noises {
                let seed = self.seed + out.len() as u64;
                out.push(SyntheticSpec {
                    n: self.n,
                    p: self.p,
                    pattern,
                    noise,
                    seed,
                });
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.patterns.is_empty() || self.noises.is_empty() || self.regs.is_empty() || self.algos.is_empty() {
            return Err(Error::param("bench needs at least one pattern, noise, penalty and algorithm"));
        }
        if let Some(f) = self.lambda_fraction {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::param(format!("lambda fraction must be positive, got {f}")));
            }
        }
        self.ppmm.validate()?;
        self.admm.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub pbname: String,
    pub reg: String,
    pub algo: String,
    pub n: usize,
    pub p: usize,
    pub lambda: f64,
    /// `tuned-default` or `user`.
    pub lambda_source: String,
    pub status: Option<SolveStatus>,
    pub nnz: Option<usize>,
    pub eta: Option<f64>,
    pub pobj: Option<f64>,
    pub l1_err: Option<f64>,
    pub l2_err: Option<f64>,
    pub model_err: Option<f64>,
    pub fp: Option<usize>,
    #[serde(rename = "fn")]
    pub fn_: Option<usize>,
    pub time_secs: f64,
    pub time_hms: String,
    pub error: Option<String>,
}

impl BenchRow {
    pub fn converged(&self) -> bool {
        self.status == Some(SolveStatus::Converged)
    }

    /// The row without its timing columns, for reproducibility comparisons.
    pub fn without_timing(&self) -> BenchRow {
        BenchRow {
            time_secs: 0.0,
            time_hms: String::new(),
            ..self.clone()
        }
    }
}

/// `h:mm:ss`, rounded down to whole seconds.
pub fn format_hms(d: Duration) -> String {
    let s = d.as_secs();
    format!("{}:{:02}:{:02}", s / 3600, (s / 60) % 60, s % 60)
}

fn run_one(cfg: &BenchConfig, spec: &SyntheticSpec, reg: PenaltyKind, algo: AlgoKind) -> BenchRow {
    let (fraction, source) = match cfg.lambda_fraction {
        Some(f) => (f, "user"),
        None => (default_lambda_fraction(reg), "tuned-default"),
    };
    let mut row = BenchRow {
        pbname: spec.name(),
        reg: reg.name().to_string(),
        algo: algo.to_string(),
        n: spec.n,
        p: spec.p,
        lambda: f64::NAN,
        lambda_source: source.to_string(),
        status: None,
        nnz: None,
        eta: None,
        pobj: None,
        l1_err: None,
        l2_err: None,
        model_err: None,
        fp: None,
        fn_: None,
        time_secs: 0.0,
        time_hms: format_hms(Duration::ZERO),
        error: None,
    };
    let outcome = (|| {
        let data = gen_synthetic::<f64>(spec)?;
        let base = RegressionProblem::new(data.x, data.b, RegularizerSpec::l1(1.0)?)?;
        let lambda = fraction * base.lambda_ref();
        row.lambda = lambda;
        let problem = base.with_spec(RegularizerSpec::new(reg, lambda, None)?);
        let solver = match algo {
            AlgoKind::Ppmm => SolverConfig::Ppmm(cfg.ppmm.clone()),
            AlgoKind::Admm => SolverConfig::Admm(cfg.admm.clone()),
        };
        let sol = solver.solve(&problem, None)?;
        let report = EvalReport::new(sol.beta.view(), sol.objective, sol.eta_kkt).with_truth(
            sol.beta.view(),
            data.beta_true.view(),
            &spec.covariance(),
        );
        Ok::<_, Error>((sol.status, sol.elapsed, report))
    })();
    match outcome {
        Ok((status, elapsed, rep)) => {
            row.status = Some(status);
            row.nnz = Some(rep.nnz);
            row.eta = Some(rep.eta);
            row.pobj = Some(rep.pobj);
            row.l1_err = rep.l1_err;
            row.l2_err = rep.l2_err;
            row.model_err = rep.model_err;
            row.fp = rep.fp;
            row.fn_ = rep.fn_;
            row.time_secs = elapsed.as_secs_f64();
            row.time_hms = format_hms(elapsed);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs every (instance, penalty, algorithm) combination. Solves run on the current
/// rayon pool; rows come back in table order whatever the completion order.
/// A failed solve is recorded in its row and the run continues.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    for s in cfg.specs() {
        s.validate()?;
    }
    let jobs: Vec<(SyntheticSpec, PenaltyKind, AlgoKind)> = cfg
        .specs()
        .into_iter()
        .flat_map(|s| {
            cfg.regs
                .iter()
                .flat_map(move |&r| cfg.algos.iter().map(move |&a| (s, r, a)))
        })
        .collect();
    Ok(jobs.par_iter().map(|(s, r, a)| run_one(cfg, s, *r, *a)).collect())
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_else(|| "-".to_string())
}

fn cells(r: &BenchRow) -> Vec<String> {
    vec![
        r.pbname.clone(),
        r.reg.clone(),
        r.algo.clone(),
        r.n.to_string(),
        r.p.to_string(),
        opt(r.nnz, |v| v.to_string()),
        format!("{:.4e}", r.lambda),
        opt(r.eta, |v| format!("{v:.2e}")),
        opt(r.pobj, |v| format!("{v:.8e}")),
        format!("{:.3}", r.time_secs),
        r.time_hms.clone(),
        opt(r.l1_err, |v| format!("{v:.4}")),
        opt(r.l2_err, |v| format!("{v:.4}")),
        opt(r.model_err, |v| format!("{v:.4}")),
        opt(r.fp, |v| v.to_string()),
        opt(r.fn_, |v| v.to_string()),
        match (&r.error, r.status) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(s)) => s.to_string(),
            (None, None) => "-".to_string(),
        },
    ]
}

const HEADERS: [&str; 17] = [
    "pbname", "reg", "algo", "n", "p", "nnz", "lambda", "eta", "pobj", "time_s", "time", "L1", "L2", "ME", "FP",
    "FN", "status",
];

/// Column-aligned text table.
pub fn format_table(rows: &[BenchRow]) -> String {
    let body: Vec<Vec<String>> = rows.iter().map(cells).collect();
    let mut width: Vec<usize> = HEADERS.iter().map(|h| h.len()).collect();
    for r in &body {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cols: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cols.zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &mut HEADERS.iter().copied());
    for r in &body {
        line(&mut out, &mut r.iter().map(String::as_str));
    }
    if rows.iter().any(|r| r.lambda_source == "tuned-default") {
        out.push_str("lambda: tuned defaults (lambda_ref fraction chosen by our own validation tuning)\n");
    }
    out
}

/// CSV with a header row; missing values are empty fields.
pub fn write_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))
}
