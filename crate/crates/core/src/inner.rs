//! Dual subproblem solver shared by both PPMM stages.
//!
//! Each outer step of PPMM needs the minimizer of
//!
//! ```text
//! h(y) + lambda ||beta||_1 - <w, beta> + tau/2 ||beta - beta_t||^2 + iota/2 ||y - (X beta_t - b)||^2
//!     subject to  X beta - y = b
//! ```
//!
//! which is obtained from the smooth, convex dual function `phi(u)` implemented by
//! [`DualContext`]. The dual is minimized by a proximal point loop ([`ppa_solve`]) whose
//! subproblems are handled by a semismooth Newton method ([`ssn_solve`]).

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::linalg::{norm2, pcg, Cholesky};
use crate::regularizers::soft_threshold;
use crate::scalar::Scalar;
use crate::wilcoxon::{eval_h_unchecked, prox_h_jacobian, prox_h_unchecked, ProxHJacobian, ProxHResult};

/// Data of one dual subproblem.
#[derive(Debug, Clone)]
pub struct DualContext<'a, F> {
    x: ArrayView2<'a, F>,
    b: ArrayView1<'a, F>,
    tau: F,
    iota: F,
    lambda: F,
    beta_tilde: Array1<F>,
    w_tilde: Array1<F>,
    // X beta_t - b
    shift_y: Array1<F>,
    // beta_t + w / tau
    shift_beta: Array1<F>,
}

/// Everything computed by one evaluation of `phi` at `u`.
#[derive(Debug, Clone)]
pub struct DualEval<F> {
    pub u: Array1<F>,
    pub phi: F,
    /// `grad phi(u) = y - X beta + b`, the primal infeasibility of the recovered pair.
    pub grad: Array1<F>,
    /// Recovered coefficients `soft(c, lambda / tau)`.
    pub beta: Array1<F>,
    /// Recovered residual variable `Prox_h(a)`.
    pub y: Array1<F>,
    /// Coordinates with `|c_j| > lambda / tau`.
    pub support: Vec<usize>,
    prox: ProxHResult<F>,
}

impl<F: Scalar> DualEval<F> {
    pub fn jacobian(&self) -> ProxHJacobian {
        prox_h_jacobian(&self.prox)
    }
}

impl<'a, F: Scalar> DualContext<'a, F> {
    pub fn new(
        x: ArrayView2<'a, F>,
        b: ArrayView1<'a, F>,
        tau: F,
        iota: F,
        lambda: F,
        beta_tilde: Array1<F>,
        w_tilde: Array1<F>,
    ) -> Result<Self> {
        let (n, p) = x.dim();
        if b.len() != n || beta_tilde.len() != p || w_tilde.len() != p {
            return Err(Error::input("dual subproblem dimensions do not match"));
        }
        for (name, v) in [("tau", tau), ("iota", iota)] {
            if !(v > F::zero()) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(lambda >= F::zero()) || !lambda.is_finite() {
            return Err(Error::param(format!("lambda must be nonnegative, got {lambda}")));
        }
        let shift_y = x.dot(&beta_tilde) - &b;
        let shift_beta = &beta_tilde + &(&w_tilde / tau);
        Ok(DualContext {
            x,
            b,
            tau,
            iota,
            lambda,
            beta_tilde,
            w_tilde,
            shift_y,
            shift_beta,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn tau(&self) -> F {
        self.tau
    }

    pub fn iota(&self) -> F {
        self.iota
    }

    pub fn x(&self) -> ArrayView2<'a, F> {
        self.x
    }

    pub fn b(&self) -> ArrayView1<'a, F> {
        self.b
    }

    pub fn beta_tilde(&self) -> &Array1<F> {
        &self.beta_tilde
    }

    pub fn eval(&self, u: ArrayView1<'_, F>) -> DualEval<F> {
        let (iota, tau) = (self.iota, self.tau);
        let half = F::lit(0.5);

        let a = &u / iota + &self.shift_y;
        let prox = prox_h_unchecked(a.view(), iota);
        let y = prox.y.clone();
        // iota/2 ||a||^2 - iota/2 ||a - y||^2 written without the cancellation
        let t1 = iota * (&a - &(&y * half)).dot(&y) - eval_h_unchecked(y.view());

        let c = &self.shift_beta - &(self.x.t().dot(&u) / tau);
        let kappa = self.lambda / tau;
        let beta = soft_threshold(c.view(), kappa);
        let support: Vec<usize> = (0..c.len()).filter(|&j| c[j].abs() > kappa).collect();
        let l1: F = beta.iter().map(|v| v.abs()).sum();
        let t2 = tau * (c.dot(&beta) - half * beta.dot(&beta)) - self.lambda * l1;

        let xb = self.x_times_sparse(&beta, &support);
        let grad = &y - &xb + &self.b;
        let phi = t1 + t2 + u.dot(&self.b);
        DualEval {
            u: u.to_owned(),
            phi,
            grad,
            beta,
            y,
            support,
            prox,
        }
    }

    fn x_times_sparse(&self, beta: &Array1<F>, support: &[usize]) -> Array1<F> {
        if 4 * support.len() >= beta.len() {
            return self.x.dot(beta);
        }
        let mut out = Array1::zeros(self.n());
        for &j in support {
            out.scaled_add(beta[j], &self.x.column(j));
        }
        out
    }

    pub fn phi_value(&self, u: ArrayView1<'_, F>) -> F {
        self.eval(u).phi
    }

    pub fn phi_grad(&self, u: ArrayView1<'_, F>) -> Array1<F> {
        self.eval(u).grad
    }

    /// Primal pair `(beta, y)` recovered from a dual point.
    pub fn recover_primal(&self, u: ArrayView1<'_, F>) -> (Array1<F>, Array1<F>) {
        let e = self.eval(u);
        (e.beta, e.y)
    }

    /// Objective of the primal subproblem, ignoring the linear constraint.
    pub fn primal_value(&self, beta: ArrayView1<'_, F>, y: ArrayView1<'_, F>) -> F {
        let half = F::lit(0.5);
        let db = &beta - &self.beta_tilde;
        let dy = &y - &self.shift_y;
        let l1: F = beta.iter().map(|v| v.abs()).sum();
        eval_h_unchecked(y) + self.lambda * l1 - self.w_tilde.dot(&beta)
            + half * self.tau * db.dot(&db)
            + half * self.iota * dy.dot(&dy)
    }

    /// Constant `C` with `min primal = C - min phi`.
    pub fn dual_constant(&self) -> F {
        let half = F::lit(0.5);
        half * self.iota * self.shift_y.dot(&self.shift_y)
            + half * self.tau * self.beta_tilde.dot(&self.beta_tilde)
    }

    /// `H d` with `H = U / iota + X_S X_S^T / tau + I / sigma` taken at `eval`.
    pub fn apply_h(&self, eval: &DualEval<F>, sigma: F, d: ArrayView1<'_, F>) -> Array1<F> {
        NewtonSystem::new(self, eval, sigma).apply(d)
    }

    /// Dense `H`, for small problems and tests.
    pub fn dense_h(&self, eval: &DualEval<F>, sigma: F) -> Array2<F> {
        NewtonSystem::new(self, eval, sigma).dense()
    }
}

/// How the Newton system is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolver {
    /// Low-rank update when the support is no larger than `n`, then dense Cholesky up to
    /// `dense_max_n`, then preconditioned CG.
    #[default]
    Auto,
    Dense,
    LowRank,
    Cg,
}

struct NewtonSystem<'c, 'a, F> {
    ctx: &'c DualContext<'a, F>,
    jac: ProxHJacobian,
    xs: Array2<F>,
    sigma: F,
}

impl<'c, 'a, F: Scalar> NewtonSystem<'c, 'a, F> {
    fn new(ctx: &'c DualContext<'a, F>, eval: &DualEval<F>, sigma: F) -> Self {
        NewtonSystem {
            ctx,
            jac: eval.jacobian(),
            xs: ctx.x.select(Axis(1), &eval.support),
            sigma,
        }
    }

    fn apply(&self, d: ArrayView1<'_, F>) -> Array1<F> {
        let mut out = self.jac.apply_unchecked(d) / self.ctx.iota;
        out.scaled_add(F::one() / self.sigma, &d);
        if self.xs.ncols() > 0 {
            let t = self.xs.t().dot(&d);
            out.scaled_add(F::one() / self.ctx.tau, &self.xs.dot(&t));
        }
        out
    }

    fn dense(&self) -> Array2<F> {
        let n = self.ctx.n();
        let mut h = self.xs.dot(&self.xs.t()) / self.ctx.tau;
        for group in self.jac.groups() {
            let w = F::one() / (self.ctx.iota * F::lit(group.len() as f64));
            for &i in group {
                for &j in group {
                    h[[i, j]] += w;
                }
            }
        }
        for i in 0..n {
            h[[i, i]] += F::one() / self.sigma;
        }
        h
    }

    // (U / iota + I / sigma)^{-1} v = sigma (v - theta U v), theta = sigma / (iota + sigma)
    fn apply_d_inv(&self, v: ArrayView1<'_, F>) -> Array1<F> {
        let theta = self.sigma / (self.ctx.iota + self.sigma);
        let uv = self.jac.apply_unchecked(v);
        (&v - &(&uv * theta)) * self.sigma
    }

    fn solve_low_rank(&self, rhs: ArrayView1<'_, F>) -> Result<Array1<F>> {
        let z = self.apply_d_inv(rhs);
        let k = self.xs.ncols();
        if k == 0 {
            return Ok(z);
        }
        let mut w = Array2::zeros(self.xs.raw_dim());
        for (j, col) in self.xs.columns().into_iter().enumerate() {
            w.column_mut(j).assign(&self.apply_d_inv(col));
        }
        let mut m = self.xs.t().dot(&w);
        for i in 0..k {
            m[[i, i]] += self.ctx.tau;
        }
        let chol = Cholesky::factor(m)?;
        let t = chol.solve(self.xs.t().dot(&z).view());
        Ok(z - w.dot(&t))
    }

    fn solve_dense(&self, rhs: ArrayView1<'_, F>) -> Result<Array1<F>> {
        Ok(Cholesky::factor(self.dense())?.solve(rhs))
    }

    fn solve_cg(&self, rhs: ArrayView1<'_, F>, tol: F, max_iter: usize) -> Array1<F> {
        let n = self.ctx.n();
        let mut diag = Array1::from_elem(n, F::one() / self.sigma);
        for group in self.jac.groups() {
            let w = F::one() / (self.ctx.iota * F::lit(group.len() as f64));
            for &i in group {
                diag[i] += w;
            }
        }
        for (i, row) in self.xs.rows().into_iter().enumerate() {
            diag[i] += row.dot(&row) / self.ctx.tau;
        }
        let inv = diag.mapv(|d| F::one() / d);
        pcg(|v| self.apply(v), inv.view(), rhs, tol, max_iter).x
    }

    fn solve(
        &self,
        rhs: ArrayView1<'_, F>,
        tol: F,
        cfg: &SsnConfig<F>,
    ) -> Result<(Array1<F>, LinearSolver, F)> {
        let n = self.ctx.n();
        let k = self.xs.ncols();
        let first = match cfg.linear_solver {
            LinearSolver::Auto if k <= n => LinearSolver::LowRank,
            LinearSolver::Auto if n <= cfg.dense_max_n => LinearSolver::Dense,
            LinearSolver::Auto => LinearSolver::Cg,
            other => other,
        };
        let run = |which: LinearSolver| -> Result<Array1<F>> {
            match which {
                LinearSolver::LowRank => self.solve_low_rank(rhs),
                LinearSolver::Dense => self.solve_dense(rhs),
                _ => Ok(self.solve_cg(rhs, tol, cfg.cg_max_iters)),
            }
        };
        let residual = |d: &Array1<F>| norm2((&self.apply(d.view()) - &rhs).view());

        let attempt = run(first);
        if let Ok(d) = &attempt {
            let res = residual(d);
            let loose = tol.max(F::lit(1e-8) * norm2(rhs));
            if res <= loose || first == LinearSolver::Dense || cfg.linear_solver != LinearSolver::Auto {
                return attempt.map(|d| (d, first, res));
            }
        } else if cfg.linear_solver != LinearSolver::Auto {
            return attempt.map(|d| (d, first, F::nan()));
        }
        let fallback = if n <= cfg.dense_max_n {
            LinearSolver::Dense
        } else {
            LinearSolver::Cg
        };
        log::debug!("newton system: {first:?} inaccurate, retrying with {fallback:?}");
        match run(fallback) {
            Ok(d) => {
                let res = residual(&d);
                Ok((d, fallback, res))
            }
            Err(e) if fallback == LinearSolver::Dense => {
                log::debug!("dense factorization failed ({e}), retrying with Cg");
                let d = run(LinearSolver::Cg)?;
                let res = residual(&d);
                Ok((d, LinearSolver::Cg, res))
            }
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsnConfig<F> {
    /// Armijo constant, in `(0, 1/2)`.
    pub mu: F,
    /// Backtracking factor, in `(0, 1)`.
    pub delta: F,
    /// Cap on the linear-solve tolerance, in `(0, 1)`.
    pub eta_bar: F,
    /// Forcing exponent: linear tolerance `min(eta_bar, ||g||^(1 + varsigma))`.
    pub varsigma: F,
    /// Floor for the gradient norm at which a subproblem counts as solved.
    pub grad_tol: F,
    pub max_iters: usize,
    pub max_backtracks: usize,
    pub linear_solver: LinearSolver,
    pub dense_max_n: usize,
    pub cg_max_iters: usize,
}

impl<F: Scalar> Default for SsnConfig<F> {
    fn default() -> Self {
        SsnConfig {
            mu: F::lit(0.1),
            delta: F::lit(0.5),
            eta_bar: F::lit(0.1),
            varsigma: F::lit(0.5),
            grad_tol: F::lit(1e-12),
            max_iters: 100,
            max_backtracks: 60,
            linear_solver: LinearSolver::Auto,
            dense_max_n: 2000,
            cg_max_iters: 300,
        }
    }
}

impl<F: Scalar> SsnConfig<F> {
    pub fn validate(&self) -> Result<()> {
        let half = F::lit(0.5);
        if !(self.mu > F::zero() && self.mu < half) {
            return Err(Error::param(format!("mu must lie in (0, 1/2), got {}", self.mu)));
        }
        if !(self.delta > F::zero() && self.delta < F::one()) {
            return Err(Error::param(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.eta_bar > F::zero() && self.eta_bar < F::one()) {
            return Err(Error::param(format!("eta_bar must lie in (0, 1), got {}", self.eta_bar)));
        }
        if !(self.varsigma > F::zero() && self.varsigma <= F::one()) {
            return Err(Error::param(format!("varsigma must lie in (0, 1], got {}", self.varsigma)));
        }
        if !(self.grad_tol >= F::zero()) {
            return Err(Error::param("grad_tol must be nonnegative"));
        }
        if self.max_iters == 0 || self.max_backtracks == 0 {
            return Err(Error::param("iteration limits must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsnStatus {
    Converged,
    /// No further progress is representable in floating point; the gradient is already tiny.
    Stalled,
    MaxIterations,
    /// The line search or the Newton direction broke down away from a solution.
    Failed,
}

/// One accepted Newton step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsnStep<F> {
    pub grad_norm: F,
    pub phi_before: F,
    pub phi_after: F,
    pub alpha: F,
    /// `<grad, direction>`; negative for a descent direction.
    pub slope: F,
    pub linear_residual: F,
    pub linear_tol: F,
    pub solver: LinearSolver,
    /// False when the predicted decrease was below the rounding level of `phi` and the
    /// step length was chosen by a decrease of the gradient norm instead.
    pub armijo: bool,
}

#[derive(Debug, Clone)]
pub struct SsnReport<F> {
    pub eval: DualEval<F>,
    /// Gradient norm of the regularized function at the returned point.
    pub grad_norm: F,
    pub status: SsnStatus,
    pub steps: Vec<SsnStep<F>>,
    /// Diagnostic for [`SsnStatus::Failed`].
    pub failure: Option<String>,
}

impl<F> SsnReport<F> {
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }
}

/// Minimizes `phi(u) + ||u - center||^2 / (2 sigma)` from `u0` until the gradient norm
/// drops below `cfg.grad_tol`.
pub fn ssn_solve<F: Scalar>(
    ctx: &DualContext<'_, F>,
    center: ArrayView1<'_, F>,
    sigma: F,
    u0: ArrayView1<'_, F>,
    cfg: &SsnConfig<F>,
) -> Result<SsnReport<F>> {
    let tol = cfg.grad_tol;
    ssn_solve_until(ctx, center, sigma, ctx.eval(u0), cfg, |_, g| g <= tol)
}

/// Same as [`ssn_solve`] but with a caller-supplied stopping rule on the current
/// evaluation and the regularized gradient norm.
pub fn ssn_solve_until<F, S>(
    ctx: &DualContext<'_, F>,
    center: ArrayView1<'_, F>,
    sigma: F,
    start: DualEval<F>,
    cfg: &SsnConfig<F>,
    stop: S,
) -> Result<SsnReport<F>>
where
    F: Scalar,
    S: FnMut(&DualEval<F>, F) -> bool,
{
    let report = ssn_run(ctx, center, sigma, start, cfg, stop)?;
    match report.status {
        SsnStatus::Failed => Err(Error::NumericalFailure(
            report.failure.unwrap_or_else(|| "newton solve failed".into()),
        )),
        _ => Ok(report),
    }
}

// Like `ssn_solve_until`, but a breakdown is reported through the status together with
// the last iterate instead of an error.
fn ssn_run<F, S>(
    ctx: &DualContext<'_, F>,
    center: ArrayView1<'_, F>,
    sigma: F,
    start: DualEval<F>,
    cfg: &SsnConfig<F>,
    mut stop: S,
) -> Result<SsnReport<F>>
where
    F: Scalar,
    S: FnMut(&DualEval<F>, F) -> bool,
{
    cfg.validate()?;
    if !(sigma > F::zero()) {
        return Err(Error::param("sigma must be positive"));
    }
    if center.len() != ctx.n() || start.u.len() != ctx.n() {
        return Err(Error::input("dual vectors must have length n"));
    }
    let inv_sigma = F::one() / sigma;
    let half = F::lit(0.5);
    let reg_value = |e: &DualEval<F>| {
        let d = &e.u - &center;
        e.phi + half * inv_sigma * d.dot(&d)
    };
    let reg_grad = |e: &DualEval<F>| {
        let mut g = e.grad.clone();
        g.scaled_add(inv_sigma, &(&e.u - &center));
        g
    };
    let stall_tol = F::epsilon().sqrt() * (F::one() + norm2(ctx.b));

    let mut eval = start;
    let mut steps = Vec::new();
    for _ in 0..cfg.max_iters {
        let g = reg_grad(&eval);
        let gn = norm2(g.view());
        if stop(&eval, gn) {
            return Ok(SsnReport {
                eval,
                grad_norm: gn,
                status: SsnStatus::Converged,
                steps,
                failure: None,
            });
        }
        let lin_tol = cfg.eta_bar.min(gn.powf(F::one() + cfg.varsigma));
        let system = NewtonSystem::new(ctx, &eval, sigma);
        let neg_g = g.mapv(|v| -v);
        let (dir, solver, lin_res) = match system.solve(neg_g.view(), lin_tol, cfg) {
            Ok(v) => v,
            Err(e) => return Ok(failed(eval, gn, steps, e.to_string())),
        };
        let slope = g.dot(&dir);
        if !(slope < F::zero()) {
            let msg = format!("newton direction is not a descent direction (slope {slope}, |g| {gn})");
            return Ok(failed(eval, gn, steps, msg));
        }

        let phi0 = reg_value(&eval);
        let rounding = F::lit(1e3) * F::epsilon() * (F::one() + phi0.abs());
        let mut alpha = F::one();
        let mut accepted = None;
        if -slope > rounding {
            for _ in 0..cfg.max_backtracks {
                let cand = &eval.u + &(&dir * alpha);
                let e = ctx.eval(cand.view());
                let val = reg_value(&e);
                if val <= phi0 + cfg.mu * alpha * slope {
                    accepted = Some((e, val, true));
                    break;
                }
                alpha *= cfg.delta;
            }
        } else {
            // The predicted decrease is lost in the rounding of phi, so the value cannot
            // rank candidates. Require a decrease of the gradient norm instead.
            for _ in 0..cfg.max_backtracks {
                let cand = &eval.u + &(&dir * alpha);
                let e = ctx.eval(cand.view());
                let gn_new = norm2(reg_grad(&e).view());
                if gn_new <= (F::one() - cfg.mu * alpha) * gn {
                    let val = reg_value(&e);
                    accepted = Some((e, val, false));
                    break;
                }
                alpha *= cfg.delta;
            }
        }
        let Some((next, val, armijo)) = accepted else {
            if gn <= stall_tol {
                return Ok(SsnReport {
                    eval,
                    grad_norm: gn,
                    status: SsnStatus::Stalled,
                    steps,
                    failure: None,
                });
            }
            let msg = format!(
                "line search failed after {} backtracks (|g| {gn})",
                cfg.max_backtracks
            );
            return Ok(failed(eval, gn, steps, msg));
        };
        steps.push(SsnStep {
            grad_norm: gn,
            phi_before: phi0,
            phi_after: val,
            alpha,
            slope,
            linear_residual: lin_res,
            linear_tol: lin_tol,
            solver,
            armijo,
        });
        eval = next;
    }
    let gn = norm2(reg_grad(&eval).view());
    let status = if stop(&eval, gn) {
        SsnStatus::Converged
    } else {
        SsnStatus::MaxIterations
    };
    Ok(SsnReport {
        eval,
        grad_norm: gn,
        status,
        steps,
        failure: None,
    })
}

fn failed<F>(eval: DualEval<F>, grad_norm: F, steps: Vec<SsnStep<F>>, msg: String) -> SsnReport<F> {
    log::debug!("ssn: {msg}");
    SsnReport {
        eval,
        grad_norm,
        status: SsnStatus::Failed,
        steps,
        failure: Some(msg),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpaConfig<F> {
    pub sigma0: F,
    /// When set, the first proximal parameter is `min(sigma0, ratio * iota)`. Newton steps
    /// overshoot by roughly `sigma / iota` while the pooling pattern is still changing, so
    /// tying the start to `iota` keeps early line searches short.
    pub sigma0_iota_ratio: Option<F>,
    /// Growth factor of the proximal parameter, at least 1.
    pub sigma_growth: F,
    pub sigma_max: F,
    /// The proximal parameter grows only after a Newton solve of at most this many steps.
    /// A slower solve keeps it, and a failed one divides it by `sigma_growth`.
    pub fast_newton: usize,
    pub max_iters: usize,
    pub ssn: SsnConfig<F>,
}

impl<F: Scalar> Default for PpaConfig<F> {
    fn default() -> Self {
        PpaConfig {
            sigma0: F::one(),
            sigma0_iota_ratio: Some(F::lit(10.0)),
            sigma_growth: F::lit(5.0),
            sigma_max: F::lit(1e12),
            fast_newton: 15,
            max_iters: 60,
            ssn: SsnConfig::default(),
        }
    }
}

impl<F: Scalar> PpaConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 > F::zero()) || !(self.sigma_max >= self.sigma0) {
            return Err(Error::param("need 0 < sigma0 <= sigma_max"));
        }
        if self.sigma0_iota_ratio.is_some_and(|r| !(r > F::zero())) {
            return Err(Error::param("sigma0_iota_ratio must be positive"));
        }
        if !(self.sigma_growth >= F::one()) {
            return Err(Error::param("sigma_growth must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters must be positive"));
        }
        self.ssn.validate()
    }
}

/// Record of one proximal point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpaIter<F> {
    pub sigma: F,
    pub delta: F,
    /// Regularized gradient norm when the Newton solve stopped.
    pub subproblem_grad: F,
    /// `||u_{i+1} - u_i||`.
    pub step_norm: F,
    pub newton_iters: usize,
    pub status: SsnStatus,
}

impl<F: Scalar> PpaIter<F> {
    /// Whether the relative stopping rule `grad <= delta / sigma * step` held
    /// (or the absolute floor did).
    pub fn relative_rule_holds(&self, floor: F) -> bool {
        self.subproblem_grad <= floor.max(self.delta / self.sigma * self.step_norm)
    }
}

#[derive(Debug, Clone)]
pub struct PpaReport<F> {
    pub eval: DualEval<F>,
    /// Whether the adequacy test accepted the returned point.
    pub satisfied: bool,
    pub newton_iters: usize,
    pub history: Vec<PpaIter<F>>,
}

impl<F> PpaReport<F> {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }
}

/// Proximal point method on `phi`, warm-started at `u_init`, stopping as soon as
/// `adequate` accepts the current evaluation (checked first at `u_init`).
pub fn ppa_solve<F, A>(
    ctx: &DualContext<'_, F>,
    u_init: ArrayView1<'_, F>,
    cfg: &PpaConfig<F>,
    mut adequate: A,
) -> Result<PpaReport<F>>
where
    F: Scalar,
    A: FnMut(&DualEval<F>) -> bool,
{
    cfg.validate()?;
    if u_init.len() != ctx.n() {
        return Err(Error::input("dual start must have length n"));
    }
    let mut eval = ctx.eval(u_init);
    let mut history = Vec::new();
    let mut newton_iters = 0;
    if adequate(&eval) {
        return Ok(PpaReport {
            eval,
            satisfied: true,
            newton_iters,
            history,
        });
    }
    let mut sigma = match cfg.sigma0_iota_ratio {
        Some(ratio) => cfg.sigma0.min(ratio * ctx.iota()),
        None => cfg.sigma0,
    };
    let sigma_min = sigma * F::lit(1e-6);
    let floor = cfg.ssn.grad_tol;
    for i in 0..cfg.max_iters {
        let delta = F::lit(0.5).min(F::one() / F::lit(((i + 1) * (i + 1)) as f64));
        let center = eval.u.clone();
        let report = ssn_run(ctx, center.view(), sigma, eval, &cfg.ssn, |e, g| {
            let step = norm2((&e.u - &center).view());
            g <= floor.max(delta / sigma * step)
        })?;
        let steps = report.iterations();
        newton_iters += steps;
        history.push(PpaIter {
            sigma,
            delta,
            subproblem_grad: report.grad_norm,
            step_norm: norm2((&report.eval.u - &center).view()),
            newton_iters: report.iterations(),
            status: report.status,
        });
        eval = report.eval;
        if adequate(&eval) {
            return Ok(PpaReport {
                eval,
                satisfied: true,
                newton_iters,
                history,
            });
        }
        sigma = match report.status {
            SsnStatus::Converged | SsnStatus::Stalled if steps <= cfg.fast_newton => {
                (sigma * cfg.sigma_growth).min(cfg.sigma_max)
            }
            SsnStatus::Converged | SsnStatus::Stalled => sigma,
            SsnStatus::MaxIterations | SsnStatus::Failed => {
                (sigma / cfg.sigma_growth).max(sigma_min)
            }
        };
    }
    Ok(PpaReport {
        eval,
        satisfied: false,
        newton_iters,
        history,
    })
}
