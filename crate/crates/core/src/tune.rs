//! Selection of `lambda` on a grid by held-out Wilcoxon loss.
//!
//! Every fold walks the grid from the largest value down, warm-starting each fit from
//! the previous one. Folds advance in lockstep so the path can stop early once the
//! score has not improved for `patience` consecutive grid points, or once a fit becomes
//! dense. The default rule then takes the largest value whose score lies within one
//! standard error of the minimum.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{kfold_indices, select_rows, split, Subset};
use crate::error::{Error, Result};
use crate::metrics::nnz;
use crate::ppmm::{self, WarmStart};
use crate::problem::RegressionProblem;
use crate::regularizers::{PenaltyKind, RegularizerSpec};
use crate::scalar::Scalar;
use crate::solution::Solution;
use crate::solver::SolverConfig;
use crate::wilcoxon::eval_h;

/// `count` log-spaced values from `lambda_ref` down to `min_ratio * lambda_ref`.
pub fn default_grid(lambda_ref: f64, count: usize, min_ratio: f64) -> Result<Vec<f64>> {
    if !(lambda_ref > 0.0 && lambda_ref.is_finite()) {
        return Err(Error::param(format!("lambda_ref must be positive, got {lambda_ref}")));
    }
    if !(min_ratio > 0.0 && min_ratio <= 1.0) {
        return Err(Error::param(format!("min_ratio must lie in (0, 1], got {min_ratio}")));
    }
    match count {
        0 => Err(Error::param("grid needs at least one point")),
        1 => Ok(vec![lambda_ref]),
        _ => {
            let step = min_ratio.ln() / (count - 1) as f64;
            Ok((0..count).map(|i| lambda_ref * (step * i as f64).exp()).collect())
        }
    }
}

/// Checks positivity, removes duplicates and sorts descending.
pub fn normalize_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::param("lambda grid is empty"));
    }
    if let Some(bad) = grid.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::param(format!("lambda values must be positive and finite, got {bad}")));
    }
    let mut out = grid.to_vec();
    out.sort_by(|a, b| b.total_cmp(a));
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TuneProtocol {
    /// One shuffled split with `fraction` of the rows used for fitting.
    Validation { fraction: f64, seed: u64 },
    KFold { folds: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// The grid point with the smallest score.
    Min,
    /// The largest `lambda` whose score is at most the minimum plus its standard error.
    OneStdErr,
}

impl std::fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SelectionRule::Min => "min",
            SelectionRule::OneStdErr => "1se",
        })
    }
}

impl std::str::FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "min" => Ok(SelectionRule::Min),
            "1se" | "one_std_err" => Ok(SelectionRule::OneStdErr),
            other => Err(Error::param(format!("unknown selection rule '{other}' (expected min or 1se)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TuneConfig<F> {
    pub solver: SolverConfig<F>,
    pub kind: PenaltyKind,
    /// Shape parameter for SCAD/MCP; `None` uses the kind's default.
    pub a: Option<F>,
    pub protocol: TuneProtocol,
    /// Stop after this many consecutive grid points without a strictly better score.
    /// Zero walks the whole grid.
    pub patience: usize,
    /// Refit on all rows at the selected value.
    pub refit: bool,
    pub rule: SelectionRule,
    /// Stop after a grid point where some fit has more nonzeros than this fraction of
    /// its training rows.
    pub max_nnz_fraction: Option<f64>,
}

impl<F: Scalar> TuneConfig<F> {
    pub fn new(solver: SolverConfig<F>, kind: PenaltyKind) -> Self {
        TuneConfig {
            solver,
            kind,
            a: None,
            protocol: TuneProtocol::Validation { fraction: 0.8, seed: 0 },
            patience: 3,
            refit: true,
            rule: SelectionRule::OneStdErr,
            max_nnz_fraction: Some(0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldFit {
    /// Held-out Wilcoxon loss; `None` when the fit failed.
    pub score: Option<f64>,
    pub nnz: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRow {
    pub lambda: f64,
    /// Mean held-out loss over folds; `None` if any fold failed.
    pub score: Option<f64>,
    /// Standard error of `score`: the spread of the fold scores with several folds, the
    /// U-statistic estimate of the held-out loss with a single split.
    pub std_err: Option<f64>,
    pub folds: Vec<FoldFit>,
    pub time_secs: f64,
}

impl TuneRow {
    pub fn all_converged(&self) -> bool {
        self.folds.iter().all(|f| f.converged)
    }
}

#[derive(Debug, Clone)]
pub struct TuneResult<F> {
    pub best_lambda: f64,
    pub best_index: usize,
    /// Row with the smallest score, which the one-standard-error rule starts from.
    pub min_index: usize,
    /// Rows in grid order; shorter than the grid when the path stopped early.
    pub rows: Vec<TuneRow>,
    pub grid: Vec<f64>,
    /// Refit on all rows, or the training fit when `refit` is off and a single split was used.
    pub best_solution: Option<Solution<F>>,
    pub elapsed: Duration,
}

struct Fold<F> {
    train: RegressionProblem<F>,
    val: Subset<F>,
    warm: Option<Solution<F>>,
}

fn held_out_loss<F: Scalar>(val: &Subset<F>, beta: &Array1<F>) -> Result<(f64, f64)> {
    let r = &val.b - &val.x.dot(beta);
    Ok((eval_h(r.view())?.as_f64(), loss_std_err(&r)))
}

/// First-order U-statistic standard error of `h(r)`: with `g_i` the mean of
/// `|r_i - r_j|` over `j != i`, the variance of `h` is about `Var(g) / m`.
pub fn loss_std_err<F: Scalar>(r: &Array1<F>) -> f64 {
    let m = r.len();
    if m < 3 {
        return 0.0;
    }
    let v: Vec<f64> = r.iter().map(|x| x.as_f64()).collect();
    let g: Vec<f64> = v
        .iter()
        .map(|&a| v.iter().map(|&b| (a - b).abs()).sum::<f64>() / (m - 1) as f64)
        .collect();
    let mean = g.iter().sum::<f64>() / m as f64;
    let var = g.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    (var / m as f64).sqrt()
}

fn row_std_err(fits: &[FoldFit], single: Option<f64>) -> Option<f64> {
    let scores: Option<Vec<f64>> = fits.iter().map(|f| f.score).collect();
    let scores = scores?;
    let k = scores.len();
    if k == 1 {
        return single;
    }
    let mean = scores.iter().sum::<f64>() / k as f64;
    let var = scores.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    Some((var / k as f64).sqrt())
}

/// Fits `full` at the selected value. A single-split training fit has a dual of the wrong
/// length, so only its coefficients carry over. For SCAD/MCP under PPMM they seed Stage 2
/// directly: Stage 1 would go back to the l1 solution, which is zero at the top of the grid
/// even when the selected training fit is not.
fn refit<F: Scalar>(solver: &SolverConfig<F>, full: &RegressionProblem<F>, fit: Option<&Solution<F>>) -> Result<Solution<F>> {
    match (solver, fit) {
        (SolverConfig::Ppmm(pc), Some(fit)) if full.spec().has_smooth_part() && fit.beta.len() == full.p() => {
            let warm = WarmStart {
                beta: fit.beta.clone(),
                u: Array1::zeros(full.n()),
            };
            ppmm::stage2(full, &warm, pc)
        }
        _ => solver.solve(full, fit),
    }
}

fn make_spec<F: Scalar>(cfg: &TuneConfig<F>, lambda: f64) -> Result<RegularizerSpec<F>> {
    RegularizerSpec::new(cfg.kind, F::lit(lambda), cfg.a)
}

/// Tunes `lambda` over `grid` for the design `x` and response `b`.
pub fn tune<F: Scalar>(x: &Array2<F>, b: &Array1<F>, grid: &[f64], cfg: &TuneConfig<F>) -> Result<TuneResult<F>> {
    let start = Instant::now();
    let grid = normalize_grid(grid)?;
    if x.nrows() != b.len() {
        return Err(Error::input("design and response row counts differ"));
    }
    let spec0 = make_spec(cfg, grid[0])?;
    let subsets: Vec<(Subset<F>, Subset<F>)> = match cfg.protocol {
        TuneProtocol::Validation { fraction, seed } => vec![split(x, b, fraction, seed)?],
        TuneProtocol::KFold { folds, seed } => kfold_indices(x.nrows(), folds, seed)?
            .into_iter()
            .map(|(tr, va)| (select_rows(x, b, &tr), select_rows(x, b, &va)))
            .collect(),
    };
    let mut folds = subsets
        .into_iter()
        .map(|(tr, va)| {
            Ok(Fold {
                train: RegressionProblem::new(tr.x, tr.b, spec0.clone())?,
                val: va,
                warm: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    let mut single_fits: Vec<Option<Solution<F>>> = Vec::with_capacity(grid.len());
    let mut since_best = 0usize;
    for (k, &lambda) in grid.iter().enumerate() {
        let t = Instant::now();
        let spec = make_spec(cfg, lambda)?;
        let fits: Vec<(FoldFit, Option<(f64, Solution<F>)>)> = folds
            .par_iter_mut()
            .map(|fold| {
                let problem = fold.train.with_spec(spec.clone());
                let outcome = cfg
                    .solver
                    .solve(&problem, fold.warm.as_ref())
                    .and_then(|sol| held_out_loss(&fold.val, &sol.beta).map(|s| (s, sol)));
                match outcome {
                    Ok(((score, se), sol)) => {
                        let fit = FoldFit {
                            score: Some(score),
                            nnz: nnz(sol.beta.view()),
                            converged: sol.is_converged(),
                            error: None,
                        };
                        fold.warm = Some(sol.clone());
                        (fit, Some((se, sol)))
                    }
                    // a failed fit keeps the previous warm start
                    Err(e) => (
                        FoldFit {
                            score: None,
                            nnz: 0,
                            converged: false,
                            error: Some(e.to_string()),
                        },
                        None,
                    ),
                }
            })
            .collect();
        let score = fits
            .iter()
            .map(|(f, _)| f.score)
            .sum::<Option<f64>>()
            .map(|s| s / fits.len() as f64);
        let (fold_fits, mut sols): (Vec<FoldFit>, Vec<Option<(f64, Solution<F>)>>) = fits.into_iter().unzip();
        let single = if sols.len() == 1 { sols.pop().flatten() } else { None };
        let std_err = row_std_err(&fold_fits, single.as_ref().map(|(se, _)| *se));
        let dense = cfg.max_nnz_fraction.is_some_and(|frac| {
            fold_fits
                .iter()
                .zip(&folds)
                .any(|(f, fold)| f.nnz as f64 > frac * fold.train.n() as f64)
        });
        rows.push(TuneRow {
            lambda,
            score,
            std_err,
            folds: fold_fits,
            time_secs: t.elapsed().as_secs_f64(),
        });
        single_fits.push(single.map(|(_, sol)| sol));
        match (score, best) {
            (Some(s), None) => {
                best = Some((k, s));
                since_best = 0;
            }
            (Some(s), Some((_, bs))) if s < bs => {
                best = Some((k, s));
                since_best = 0;
            }
            _ => since_best += 1,
        }
        if cfg.patience > 0 && best.is_some() && since_best >= cfg.patience {
            break;
        }
        if dense {
            log::debug!("tune: stopping at lambda {lambda:e}, a fit exceeded the nonzero cap");
            break;
        }
    }

    let (min_index, min_score) = best.ok_or_else(|| Error::NumericalFailure("every fit on the grid failed".into()))?;
    let best_index = match cfg.rule {
        SelectionRule::Min => min_index,
        SelectionRule::OneStdErr => {
            let limit = min_score + rows[min_index].std_err.unwrap_or(0.0);
            rows.iter().position(|r| r.score.is_some_and(|s| s <= limit)).unwrap_or(min_index)
        }
    };
    let best_lambda = grid[best_index];
    let best_fit = single_fits.swap_remove(best_index);
    let best_solution = if cfg.refit {
        let full = RegressionProblem::new(x.clone(), b.clone(), make_spec(cfg, best_lambda)?)?;
        Some(refit(&cfg.solver, &full, best_fit.as_ref())?)
    } else {
        best_fit
    };
    Ok(TuneResult {
        best_lambda,
        best_index,
        min_index,
        rows,
        grid,
        best_solution,
        elapsed: start.elapsed(),
    })
}
