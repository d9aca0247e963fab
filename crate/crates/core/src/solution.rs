use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::metrics::EvalReport;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ppmm,
    AdmmConvex,
    AdmmNonconvex,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Ppmm => "ppmm",
            Algorithm::AdmmConvex => "admm",
            Algorithm::AdmmNonconvex => "admm-nc",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    TimeLimit,
    /// The inner solver could not certify the accuracy an outer step requires.
    InnerFailure,
}

impl SolveStatus {
    pub fn is_converged(self) -> bool {
        self == SolveStatus::Converged
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::InnerFailure => "inner_failure",
        })
    }
}

/// Audit of the inner-accuracy test `2 h(r) + iota ||r||^2 <= iota/2 ||X (beta+ - beta)||^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyCheck<F> {
    pub lhs: F,
    pub rhs: F,
    pub r_norm: F,
    /// True when the right side was negligible and `||r||` was tested instead.
    pub fallback: bool,
    pub satisfied: bool,
}

/// Audit of `g(beta+) <= g(beta) - tau/2 ||beta+ - beta||^2 + slack`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentCheck<F> {
    pub g_prev: F,
    pub g_next: F,
    pub bound: F,
    pub satisfied: bool,
}

/// Audit of `f_k(beta_k) <= g(beta_k) + h(r) + iota/2 ||r||^2` for the perturbed subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MajorizationCheck<F> {
    pub value: F,
    pub bound: F,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<F> {
    /// 1 or 2 for the PPMM stages, 0 for ADMM.
    pub stage: u8,
    pub iter: usize,
    pub objective: F,
    pub step_norm: F,
    pub eta: F,
    pub tau: F,
    pub iota: F,
    pub inner_iters: usize,
    pub newton_iters: usize,
    pub accuracy: Option<AccuracyCheck<F>>,
    pub descent: Option<DescentCheck<F>>,
    pub majorization: Option<MajorizationCheck<F>>,
}

#[derive(Debug, Clone)]
pub struct Solution<F> {
    pub beta: Array1<F>,
    pub u: Array1<F>,
    pub y: Array1<F>,
    /// Relative KKT residual matching the penalty kind.
    pub eta_kkt: F,
    /// `g(beta)` recomputed from the data.
    pub objective: F,
    pub status: SolveStatus,
    pub message: Option<String>,
    pub algorithm: Algorithm,
    pub stage1_iters: usize,
    pub stage2_iters: usize,
    pub total_newton_iters: usize,
    pub admm_iters: usize,
    pub elapsed: Duration,
    pub trace: Vec<TraceRecord<F>>,
}

impl<F: Scalar> Solution<F> {
    pub fn is_converged(&self) -> bool {
        self.status.is_converged()
    }

    pub fn iterations(&self) -> Iterations {
        Iterations {
            stage1: self.stage1_iters,
            stage2: self.stage2_iters,
            newton: self.total_newton_iters,
            admm: self.admm_iters,
        }
    }

    /// Serializable `f64` view of the solution.
    pub fn to_record(&self) -> SolutionRecord {
        SolutionRecord {
            algorithm: self.algorithm,
            status: self.status,
            message: self.message.clone(),
            beta: self.beta.iter().map(|v| v.as_f64()).collect(),
            u: self.u.iter().map(|v| v.as_f64()).collect(),
            y: self.y.iter().map(|v| v.as_f64()).collect(),
            objective: self.objective.as_f64(),
            eta_kkt: self.eta_kkt.as_f64(),
            iterations: self.iterations(),
            time_secs: self.elapsed.as_secs_f64(),
            report: None,
            config_echo: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Iterations {
    pub stage1: usize,
    pub stage2: usize,
    pub newton: usize,
    pub admm: usize,
}

/// JSON shape of a solve result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub algorithm: Algorithm,
    pub status: SolveStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub beta: Vec<f64>,
    pub objective: f64,
    pub eta_kkt: f64,
    pub iterations: Iterations,
    pub time_secs: f64,
    #[serde(default)]
    pub u: Vec<f64>,
    #[serde(default)]
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<EvalReport>,
    #[serde(default)]
    pub config_echo: BTreeMap<String, String>,
}
