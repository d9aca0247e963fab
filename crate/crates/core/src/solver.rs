//! Uniform entry point over the PPMM and ADMM solvers, with warm starts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::admm::{solve_admm_from, AdmmConfig, AdmmState};
use crate::error::{Error, Result};
use crate::ppmm::{solve_warm, PpmmConfig, WarmStart};
use crate::problem::RegressionProblem;
use crate::scalar::Scalar;
use crate::solution::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgoKind {
    Ppmm,
    Admm,
}

impl fmt::Display for AlgoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlgoKind::Ppmm => "ppmm",
            AlgoKind::Admm => "admm",
        })
    }
}

impl FromStr for AlgoKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ppmm" => Ok(AlgoKind::Ppmm),
            "admm" => Ok(AlgoKind::Admm),
            _ => Err(Error::input(format!("unknown algorithm '{s}' (expected ppmm or admm)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverConfig<F> {
    Ppmm(PpmmConfig<F>),
    Admm(AdmmConfig<F>),
}

impl<F: Scalar> SolverConfig<F> {
    pub fn kind(&self) -> AlgoKind {
        match self {
            SolverConfig::Ppmm(_) => AlgoKind::Ppmm,
            SolverConfig::Admm(_) => AlgoKind::Admm,
        }
    }

    /// Default configuration of `kind`.
    pub fn default_for(kind: AlgoKind) -> Self {
        match kind {
            AlgoKind::Ppmm => SolverConfig::Ppmm(PpmmConfig::default()),
            AlgoKind::Admm => SolverConfig::Admm(AdmmConfig::default()),
        }
    }

    /// Solves `problem`, optionally warm-started from a solution of a nearby problem
    /// with the same dimensions. ADMM picks its variant from the penalty kind.
    pub fn solve(&self, problem: &RegressionProblem<F>, warm: Option<&Solution<F>>) -> Result<Solution<F>> {
        let warm = warm.filter(|w| w.beta.len() == problem.p() && w.u.len() == problem.n());
        match self {
            SolverConfig::Ppmm(cfg) => {
                let start = warm.map(|w| WarmStart {
                    beta: w.beta.clone(),
                    u: w.u.clone(),
                });
                solve_warm(problem, cfg, start.as_ref())
            }
            SolverConfig::Admm(cfg) => {
                let state = match warm {
                    Some(w) => AdmmState {
                        beta: w.beta.clone(),
                        y: w.y.clone(),
                        z: w.beta.clone(),
                        // stationarity in beta gives v = -X^T u
                        v: problem.x().t().dot(&w.u).mapv(|t| -t),
                        u: w.u.clone(),
                    },
                    None => AdmmState::zeros(problem.n(), problem.p()),
                };
                solve_admm_from(problem, cfg, state)
            }
        }
    }
}
