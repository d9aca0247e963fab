//! ADMM baselines on the split `X beta - y = b`, `beta = z`.
//!
//! The convex variant steps the multipliers by `rho * sigma`; the nonconvex variant uses
//! the prox of the full penalty in the `z` update and a unit step. Both report `z` as the
//! coefficient vector, so inactive coordinates are exactly zero.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{norm2, Cholesky};
use crate::metrics::{kkt_convex_parts, kkt_nonconvex_parts, objective, KktParts};
use crate::problem::RegressionProblem;
use crate::regularizers::PenaltyKind;
use crate::scalar::Scalar;
use crate::solution::{Algorithm, Solution, SolveStatus, TraceRecord};
use crate::wilcoxon::prox_h_unchecked;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalMethod {
    /// Direct when `p <= n`, Woodbury otherwise.
    Auto,
    /// Cholesky factor of the `p x p` matrix.
    Direct,
    /// `(I + X^T X)^{-1} = I - X^T (I + X X^T)^{-1} X` with an `n x n` factor.
    Woodbury,
}

/// Cached solver for `(I_p + X^T X) r = rhs`.
#[derive(Debug, Clone)]
pub struct NormalFactor<F> {
    inner: FactorKind<F>,
}

#[derive(Debug, Clone)]
enum FactorKind<F> {
    Direct(Cholesky<F>),
    Woodbury { x: Array2<F>, chol: Cholesky<F> },
}

pub fn factorize_normal<F: Scalar>(x: ArrayView2<'_, F>) -> Result<NormalFactor<F>> {
    factorize_normal_with(x, NormalMethod::Auto)
}

pub fn factorize_normal_with<F: Scalar>(x: ArrayView2<'_, F>, method: NormalMethod) -> Result<NormalFactor<F>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("design matrix has non-finite entries"));
    }
    let (n, p) = x.dim();
    let direct = match method {
        NormalMethod::Auto => p <= n,
        NormalMethod::Direct => true,
        NormalMethod::Woodbury => false,
    };
    let inner = if direct {
        let mut m = x.t().dot(&x);
        for i in 0..p {
            m[[i, i]] += F::one();
        }
        FactorKind::Direct(Cholesky::factor(m)?)
    } else {
        let mut m = x.dot(&x.t());
        for i in 0..n {
            m[[i, i]] += F::one();
        }
        FactorKind::Woodbury {
            x: x.to_owned(),
            chol: Cholesky::factor(m)?,
        }
    };
    Ok(NormalFactor { inner })
}

impl<F: Scalar> NormalFactor<F> {
    pub fn is_woodbury(&self) -> bool {
        matches!(self.inner, FactorKind::Woodbury { .. })
    }

    pub fn solve(&self, rhs: ArrayView1<'_, F>) -> Array1<F> {
        match &self.inner {
            FactorKind::Direct(chol) => chol.solve(rhs),
            FactorKind::Woodbury { x, chol } => {
                let t = chol.solve(x.dot(&rhs).view());
                &rhs - &x.t().dot(&t)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig<F> {
    pub sigma: F,
    /// Multiplier step factor of the convex variant, in `(0, (1 + sqrt 5) / 2)`.
    /// The nonconvex variant always uses 1.
    pub rho_step: F,
    pub tol: F,
    pub max_iters: usize,
    /// Iterations between KKT evaluations.
    pub check_every: usize,
    pub time_cap: Option<Duration>,
}

impl<F: Scalar> Default for AdmmConfig<F> {
    fn default() -> Self {
        AdmmConfig {
            sigma: F::one(),
            rho_step: F::lit(1.618),
            tol: F::lit(1e-6),
            max_iters: 40_000,
            check_every: 10,
            time_cap: None,
        }
    }
}

impl<F: Scalar> AdmmConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > F::zero()) || !self.sigma.is_finite() {
            return Err(Error::param("sigma must be positive"));
        }
        let golden = F::lit(0.5 * (1.0 + 5f64.sqrt()));
        if !(self.rho_step > F::zero() && self.rho_step < golden) {
            return Err(Error::param(format!(
                "rho_step must lie in (0, (1 + sqrt 5)/2), got {}",
                self.rho_step
            )));
        }
        if !(self.tol > F::zero()) {
            return Err(Error::param("tol must be positive"));
        }
        if self.max_iters == 0 || self.check_every == 0 {
            return Err(Error::param("iteration counts must be positive"));
        }
        Ok(())
    }
}

/// Iterate of the splitting method.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState<F> {
    pub beta: Array1<F>,
    pub y: Array1<F>,
    pub z: Array1<F>,
    pub u: Array1<F>,
    pub v: Array1<F>,
}

impl<F: Scalar> AdmmState<F> {
    pub fn zeros(n: usize, p: usize) -> Self {
        AdmmState {
            beta: Array1::zeros(p),
            y: Array1::zeros(n),
            z: Array1::zeros(p),
            u: Array1::zeros(n),
            v: Array1::zeros(p),
        }
    }
}

/// One problem bound to its factorization and step parameters.
#[derive(Debug)]
pub struct Admm<'p, F> {
    problem: &'p RegressionProblem<F>,
    factor: NormalFactor<F>,
    sigma: F,
    step: F,
    nonconvex: bool,
}

impl<'p, F: Scalar> Admm<'p, F> {
    pub fn convex(problem: &'p RegressionProblem<F>, cfg: &AdmmConfig<F>) -> Result<Self> {
        cfg.validate()?;
        if problem.spec().kind() != PenaltyKind::L1 {
            return Err(Error::input("the convex ADMM needs an l1 penalty"));
        }
        Ok(Admm {
            problem,
            factor: factorize_normal(problem.x().view())?,
            sigma: cfg.sigma,
            step: cfg.rho_step,
            nonconvex: false,
        })
    }

    pub fn nonconvex(problem: &'p RegressionProblem<F>, cfg: &AdmmConfig<F>) -> Result<Self> {
        cfg.validate()?;
        Ok(Admm {
            problem,
            factor: factorize_normal(problem.x().view())?,
            sigma: cfg.sigma,
            step: F::one(),
            nonconvex: true,
        })
    }

    /// Multiplier step length (`rho * sigma` or `sigma`).
    pub fn multiplier_step(&self) -> F {
        self.step * self.sigma()
    }

    /// Current penalty parameter.
    pub fn sigma(&self) -> F {
        self.sigma
    }

    /// Right side of the `beta` normal equations at `state`.
    pub fn beta_rhs(&self, state: &AdmmState<F>) -> Array1<F> {
        let inv = F::one() / self.sigma();
        let x = self.problem.x();
        let w = &state.y + self.problem.b() - &(&state.u * inv);
        &state.z - &(&state.v * inv) + x.t().dot(&w)
    }

    /// Advances `state` by one iteration.
    pub fn step(&self, state: &mut AdmmState<F>) {
        let x = self.problem.x();
        let b = self.problem.b();
        let spec = self.problem.spec();
        let inv = F::one() / self.sigma();

        state.beta = self.factor.solve(self.beta_rhs(state).view());
        let xb = x.dot(&state.beta);
        let arg_y = &xb - b + &(&state.u * inv);
        state.y = prox_h_unchecked(arg_y.view(), self.sigma()).y;
        let arg_z = &state.beta + &(&state.v * inv);
        state.z = if self.nonconvex {
            spec.prox_nonconvex_unchecked(arg_z.view(), inv)
        } else {
            crate::regularizers::soft_threshold(arg_z.view(), spec.lambda() * inv)
        };
        let ms = self.multiplier_step();
        state.u.scaled_add(ms, &(&xb - &state.y - b));
        state.v.scaled_add(ms, &(&state.beta - &state.z));
    }

    /// KKT residual at the reported point `(z, y, u)`.
    pub fn residual(&self, state: &AdmmState<F>) -> F {
        self.residual_parts(state).max()
    }

    pub fn residual_parts(&self, state: &AdmmState<F>) -> KktParts<F> {
        if self.nonconvex {
            kkt_nonconvex_parts(state.z.view(), state.y.view(), state.u.view(), self.problem)
        } else {
            kkt_convex_parts(state.z.view(), state.y.view(), state.u.view(), self.problem)
        }
    }

    /// `||(I + X^T X) beta - rhs|| / (1 + ||rhs||)` for a given right side.
    pub fn normal_residual(&self, beta: ArrayView1<'_, F>, rhs: ArrayView1<'_, F>) -> F {
        let x = self.problem.x();
        let lhs = &beta + &x.t().dot(&x.dot(&beta));
        norm2((&lhs - &rhs).view()) / (F::one() + norm2(rhs))
    }

    fn run(&self, cfg: &AdmmConfig<F>, mut state: AdmmState<F>) -> Result<Solution<F>> {
        let start = Instant::now();
        let (n, p) = (self.problem.n(), self.problem.p());
        if state.beta.len() != p || state.z.len() != p || state.v.len() != p || state.y.len() != n || state.u.len() != n {
            return Err(Error::input("ADMM state has the wrong dimensions"));
        }
        let algorithm = if self.nonconvex {
            Algorithm::AdmmNonconvex
        } else {
            Algorithm::AdmmConvex
        };
        let mut trace = Vec::new();
        let mut eta = self.residual(&state);
        let mut status = if eta <= cfg.tol {
            SolveStatus::Converged
        } else {
            SolveStatus::MaxIterations
        };
        let mut iters = 0;
        while status != SolveStatus::Converged && iters < cfg.max_iters {
            if cfg.time_cap.is_some_and(|c| start.elapsed() >= c) {
                status = SolveStatus::TimeLimit;
                break;
            }
            let spot = (iters + 1) % 100 == 0;
            let rhs = spot.then(|| self.beta_rhs(&state));
            let z_prev = state.z.clone();
            self.step(&mut state);
            iters += 1;
            if let Some(rhs) = rhs {
                let res = self.normal_residual(state.beta.view(), rhs.view());
                if !(res <= F::lit(1e-8)) {
                    return Err(Error::NumericalFailure(format!(
                        "normal equations solved inaccurately at iteration {iters} (relative residual {res:e})"
                    )));
                }
            }
            if iters % cfg.check_every == 0 || iters == cfg.max_iters {
                let parts = self.residual_parts(&state);
                eta = parts.max();
                trace.push(TraceRecord {
                    stage: 0,
                    iter: iters,
                    objective: objective(state.z.view(), self.problem),
                    step_norm: norm2((&state.z - &z_prev).view()),
                    eta,
                    tau: self.sigma(),
                    iota: self.sigma(),
                    inner_iters: 0,
                    newton_iters: 0,
                    accuracy: None,
                    descent: None,
                    majorization: None,
                });
                if !eta.is_finite() {
                    return Err(Error::NumericalFailure(format!("ADMM diverged at iteration {iters}")));
                }
                if eta <= cfg.tol {
                    status = SolveStatus::Converged;
                }
            }
        }
        if status != SolveStatus::Converged {
            eta = self.residual(&state);
        }
        log::debug!("{algorithm}: {iters} iterations, eta {eta:e}, status {status}");
        Ok(Solution {
            objective: objective(state.z.view(), self.problem),
            beta: state.z,
            u: state.u,
            y: state.y,
            eta_kkt: eta,
            status,
            message: None,
            algorithm,
            stage1_iters: 0,
            stage2_iters: 0,
            total_newton_iters: 0,
            admm_iters: iters,
            elapsed: start.elapsed(),
            trace,
        })
    }
}

/// Convex ADMM from the zero state. Requires an l1 penalty.
pub fn solve_admm_convex<F: Scalar>(problem: &RegressionProblem<F>, cfg: &AdmmConfig<F>) -> Result<Solution<F>> {
    let admm = Admm::convex(problem, cfg)?;
    admm.run(cfg, AdmmState::zeros(problem.n(), problem.p()))
}

/// Nonconvex ADMM from the zero state. Non-convergence is reported through the status.
pub fn solve_admm_nonconvex<F: Scalar>(problem: &RegressionProblem<F>, cfg: &AdmmConfig<F>) -> Result<Solution<F>> {
    let admm = Admm::nonconvex(problem, cfg)?;
    admm.run(cfg, AdmmState::zeros(problem.n(), problem.p()))
}

/// Runs either variant from a caller-supplied state.
pub fn solve_admm_from<F: Scalar>(
    problem: &RegressionProblem<F>,
    cfg: &AdmmConfig<F>,
    state: AdmmState<F>,
) -> Result<Solution<F>> {
    let admm = match problem.spec().kind() {
        PenaltyKind::L1 => Admm::convex(problem, cfg)?,
        _ => Admm::nonconvex(problem, cfg)?,
    };
    admm.run(cfg, state)
}
