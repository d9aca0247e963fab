//! Relative KKT residuals, objective, sparsity count and estimation errors.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::linalg::norm2;
use crate::problem::RegressionProblem;
use crate::regularizers::{soft_threshold, RegularizerSpec};
use crate::scalar::Scalar;
use crate::wilcoxon::{eval_h_unchecked, prox_h_unchecked};

/// The three relative residuals whose maximum is the KKT residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktParts<F> {
    /// `||y - Prox_h(u + y)|| / (1 + ||y||)`
    pub loss: F,
    /// `||beta - Prox_pen(beta - X^T u)|| / (1 + ||beta||)`
    pub penalty: F,
    /// `||X beta - y - b|| / (1 + ||y||)`
    pub feasibility: F,
}

impl<F: Scalar> KktParts<F> {
    pub fn max(&self) -> F {
        self.loss.max(self.penalty).max(self.feasibility)
    }
}

fn kkt_parts<F: Scalar>(
    beta: ArrayView1<'_, F>,
    y: ArrayView1<'_, F>,
    u: ArrayView1<'_, F>,
    problem: &RegressionProblem<F>,
    convex: bool,
) -> KktParts<F> {
    kkt_parts_with(problem.x().view(), problem.b().view(), problem.spec(), beta, y, u, convex)
}

pub(crate) fn kkt_parts_with<F: Scalar>(
    x: ArrayView2<'_, F>,
    b: ArrayView1<'_, F>,
    spec: &RegularizerSpec<F>,
    beta: ArrayView1<'_, F>,
    y: ArrayView1<'_, F>,
    u: ArrayView1<'_, F>,
    convex: bool,
) -> KktParts<F> {
    let ny = F::one() + norm2(y);
    let nb = F::one() + norm2(beta);

    let uy = &u + &y;
    let py = prox_h_unchecked(uy.view(), F::one()).y;
    let loss = norm2((&y - &py).view()) / ny;

    let arg = &beta - &x.t().dot(&u);
    let pb = if convex {
        soft_threshold(arg.view(), spec.lambda())
    } else {
        spec.prox_nonconvex_unchecked(arg.view(), F::one())
    };
    let penalty = norm2((&beta - &pb).view()) / nb;

    let feas = x.dot(&beta) - &y - &b;
    let feasibility = norm2(feas.view()) / ny;
    KktParts {
        loss,
        penalty,
        feasibility,
    }
}

/// Relative KKT residual of the l1 problem at `(beta, y, u)`.
pub fn kkt_convex<F: Scalar>(
    beta: ArrayView1<'_, F>,
    y: ArrayView1<'_, F>,
    u: ArrayView1<'_, F>,
    problem: &RegressionProblem<F>,
) -> F {
    kkt_parts(beta, y, u, problem, true).max()
}

/// Relative KKT residual of the nonconvex problem: the penalty term uses the unit-step
/// prox of `lambda ||.||_1 - q2`.
pub fn kkt_nonconvex<F: Scalar>(
    beta: ArrayView1<'_, F>,
    y: ArrayView1<'_, F>,
    u: ArrayView1<'_, F>,
    problem: &RegressionProblem<F>,
) -> F {
    kkt_parts(beta, y, u, problem, false).max()
}

pub fn kkt_convex_parts<F: Scalar>(
    beta: ArrayView1<'_, F>,
    y: ArrayView1<'_, F>,
    u: ArrayView1<'_, F>,
    problem: &RegressionProblem<F>,
) -> KktParts<F> {
    kkt_parts(beta, y, u, problem, true)
}

pub fn kkt_nonconvex_parts<F: Scalar>(
    beta: ArrayView1<'_, F>,
    y: ArrayView1<'_, F>,
    u: ArrayView1<'_, F>,
    problem: &RegressionProblem<F>,
) -> KktParts<F> {
    kkt_parts(beta, y, u, problem, false)
}

/// Residual matching the problem's penalty kind.
pub fn kkt_residual<F: Scalar>(
    beta: ArrayView1<'_, F>,
    y: ArrayView1<'_, F>,
    u: ArrayView1<'_, F>,
    problem: &RegressionProblem<F>,
) -> F {
    kkt_parts(beta, y, u, problem, !problem.spec().has_smooth_part()).max()
}

/// `g(beta) = h(X beta - b) + lambda ||beta||_1 - q2(beta)`.
pub fn objective<F: Scalar>(beta: ArrayView1<'_, F>, problem: &RegressionProblem<F>) -> F {
    objective_with(problem.x().view(), problem.b().view(), problem.spec(), beta)
}

pub(crate) fn objective_with<F: Scalar>(
    x: ArrayView2<'_, F>,
    b: ArrayView1<'_, F>,
    spec: &RegularizerSpec<F>,
    beta: ArrayView1<'_, F>,
) -> F {
    let r = x.dot(&beta) - &b;
    eval_h_unchecked(r.view()) + spec.penalty_value(beta)
}

/// Fixed-point residual `||beta - soft(beta - (X^T u - grad q2(beta)), lambda)|| / (1 + ||beta||)`.
pub fn fixed_point_residual<F: Scalar>(
    beta: ArrayView1<'_, F>,
    u: ArrayView1<'_, F>,
    problem: &RegressionProblem<F>,
) -> F {
    let spec = problem.spec();
    let g = problem.x().t().dot(&u) - spec.q2_grad(beta);
    let z = &beta - &g;
    let pb = soft_threshold(z.view(), spec.lambda());
    norm2((&beta - &pb).view()) / (F::one() + norm2(beta))
}

/// Smallest `k` whose `k` largest magnitudes carry 99.99% of `||beta||_1`; 0 for `beta = 0`.
pub fn nnz<F: Scalar>(beta: ArrayView1<'_, F>) -> usize {
    let mut mags: Vec<F> = beta.iter().map(|v| v.abs()).collect();
    let total: F = mags.iter().copied().sum();
    if total == F::zero() {
        return 0;
    }
    mags.sort_by(|a, b| b.partial_cmp(a).expect("finite coefficients"));
    let target = F::lit(0.9999) * total;
    let mut acc = F::zero();
    for (k, m) in mags.iter().enumerate() {
        acc += *m;
        if acc >= target {
            return k + 1;
        }
    }
    mags.len()
}

/// Coordinates counted as selected: `|beta_i| > 1e-6 * max(1, ||beta||_inf)`.
pub fn selected<F: Scalar>(beta: ArrayView1<'_, F>) -> Vec<bool> {
    let inf = beta.iter().fold(F::zero(), |m, v| m.max(v.abs()));
    let thr = F::lit(1e-6) * F::one().max(inf);
    beta.iter().map(|v| v.abs() > thr).collect()
}

/// Covariance of the design rows, used for the model error.
#[derive(Debug, Clone)]
pub enum Covariance {
    Identity,
    /// Unit diagonal, constant off-diagonal `rho`.
    CompoundSymmetry(f64),
    Dense(Array2<f64>),
}

impl Covariance {
    pub fn quad_form(&self, d: &[f64]) -> f64 {
        match self {
            Covariance::Identity => d.iter().map(|v| v * v).sum(),
            Covariance::CompoundSymmetry(rho) => {
                let sq: f64 = d.iter().map(|v| v * v).sum();
                let s: f64 = d.iter().sum();
                (1.0 - rho) * sq + rho * s * s
            }
            Covariance::Dense(m) => {
                let v = ndarray::ArrayView1::from(d);
                v.dot(&m.dot(&v))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub nnz: usize,
    pub pobj: f64,
    pub eta: f64,
    pub l1_err: Option<f64>,
    pub l2_err: Option<f64>,
    pub model_err: Option<f64>,
    pub fp: Option<usize>,
    #[serde(rename = "fn")]
    pub fn_: Option<usize>,
}

impl EvalReport {
    pub fn new<F: Scalar>(beta: ArrayView1<'_, F>, pobj: F, eta: F) -> Self {
        EvalReport {
            nnz: nnz(beta),
            pobj: pobj.as_f64(),
            eta: eta.as_f64(),
            l1_err: None,
            l2_err: None,
            model_err: None,
            fp: None,
            fn_: None,
        }
    }

    /// Fills the estimation-error columns against the true coefficients.
    pub fn with_truth<F: Scalar>(
        mut self,
        beta_hat: ArrayView1<'_, F>,
        beta_true: ArrayView1<'_, F>,
        cov: &Covariance,
    ) -> Self {
        let est = estimation_report(beta_hat, beta_true, cov);
        self.l1_err = Some(est.l1_err);
        self.l2_err = Some(est.l2_err);
        self.model_err = Some(est.model_err);
        self.fp = Some(est.fp);
        self.fn_ = Some(est.fn_);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationErrors {
    pub l1_err: f64,
    pub l2_err: f64,
    pub model_err: f64,
    pub fp: usize,
    pub fn_: usize,
    pub nnz: usize,
}

/// L1/L2 estimation errors, model error `d^T Sigma d`, false positives and negatives.
pub fn estimation_report<F: Scalar>(
    beta_hat: ArrayView1<'_, F>,
    beta_true: ArrayView1<'_, F>,
    cov: &Covariance,
) -> EstimationErrors {
    assert_eq!(beta_hat.len(), beta_true.len(), "coefficient length mismatch");
    let d: Vec<f64> = beta_hat
        .iter()
        .zip(beta_true.iter())
        .map(|(a, b)| (*a - *b).as_f64())
        .collect();
    let l1_err = d.iter().map(|v| v.abs()).sum();
    let l2_err = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    let model_err = cov.quad_form(&d).max(0.0);
    let sel = selected(beta_hat);
    let mut fp = 0;
    let mut fn_ = 0;
    for (s, t) in sel.iter().zip(beta_true.iter()) {
        let truly = *t != F::zero();
        if *s && !truly {
            fp += 1;
        }
        if !*s && truly {
            fn_ += 1;
        }
    }
    EstimationErrors {
        l1_err,
        l2_err,
        model_err,
        fp,
        fn_,
        nnz: nnz(beta_hat),
    }
}
