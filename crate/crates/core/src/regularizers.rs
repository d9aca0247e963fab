//! Penalties written as `lambda * ||.||_1 - q2` with a smooth convex `q2`.
//!
//! For `L1` the smooth part vanishes. SCAD and MCP use the usual difference-of-convex
//! splits, so every kind shares the same soft-thresholding prox for its convex part.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_MCP_A: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    L1,
    Scad,
    Mcp,
}

impl PenaltyKind {
    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::L1 => "l1",
            PenaltyKind::Scad => "scad",
            PenaltyKind::Mcp => "mcp",
        }
    }
}

impl std::str::FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "lasso" => Ok(PenaltyKind::L1),
            "scad" => Ok(PenaltyKind::Scad),
            "mcp" => Ok(PenaltyKind::Mcp),
            other => Err(Error::param(format!("unknown penalty `{other}`"))),
        }
    }
}

/// Penalty kind, level `lambda` and shape parameter `a` (unused for `L1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizerSpec<F> {
    kind: PenaltyKind,
    lambda: F,
    a: F,
}

impl<F: Scalar> RegularizerSpec<F> {
    /// Validates `lambda > 0`, `a > 2` for SCAD and `a > 1` for MCP. A missing `a`
    /// takes the default for the kind.
    pub fn new(kind: PenaltyKind, lambda: F, a: Option<F>) -> Result<Self> {
        if !(lambda > F::zero()) || !lambda.is_finite() {
            return Err(Error::param(format!("lambda must be positive, got {lambda}")));
        }
        let a = match kind {
            PenaltyKind::L1 => a.unwrap_or(F::zero()),
            PenaltyKind::Scad => {
                let a = a.unwrap_or(F::lit(DEFAULT_SCAD_A));
                if !(a > F::lit(2.0)) || !a.is_finite() {
                    return Err(Error::param(format!("SCAD needs a > 2, got {a}")));
                }
                a
            }
            PenaltyKind::Mcp => {
                let a = a.unwrap_or(F::lit(DEFAULT_MCP_A));
                if !(a > F::one()) || !a.is_finite() {
                    return Err(Error::param(format!("MCP needs a > 1, got {a}")));
                }
                a
            }
        };
        Ok(RegularizerSpec { kind, lambda, a })
    }

    pub fn l1(lambda: F) -> Result<Self> {
        Self::new(PenaltyKind::L1, lambda, None)
    }

    pub fn scad(lambda: F, a: F) -> Result<Self> {
        Self::new(PenaltyKind::Scad, lambda, Some(a))
    }

    pub fn mcp(lambda: F, a: F) -> Result<Self> {
        Self::new(PenaltyKind::Mcp, lambda, Some(a))
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn lambda(&self) -> F {
        self.lambda
    }

    pub fn a(&self) -> F {
        self.a
    }

    /// Same kind and shape with a different level.
    pub fn with_lambda(&self, lambda: F) -> Result<Self> {
        Self::new(self.kind, lambda, Some(self.a))
    }

    /// The convex relaxation used to warm start: plain `lambda * ||.||_1`.
    pub fn as_l1(&self) -> Self {
        RegularizerSpec {
            kind: PenaltyKind::L1,
            lambda: self.lambda,
            a: F::zero(),
        }
    }

    pub fn has_smooth_part(&self) -> bool {
        self.kind != PenaltyKind::L1
    }

    /// Lipschitz constant of `grad q2`.
    pub fn q2_grad_lipschitz(&self) -> F {
        match self.kind {
            PenaltyKind::L1 => F::zero(),
            PenaltyKind::Scad => F::one() / (self.a - F::one()),
            PenaltyKind::Mcp => F::one() / self.a,
        }
    }

    /// Soft-thresholding at level `lambda * t`.
    pub fn prox_q1(&self, z: ArrayView1<'_, F>, t: F) -> Result<Array1<F>> {
        check_step(t)?;
        Ok(soft_threshold(z, self.lambda * t))
    }

    /// Diagonal 0/1 element of the Clarke Jacobian of [`Self::prox_q1`]: 1 where
    /// `|z_i| > lambda * t`.
    pub fn prox_q1_jacobian(&self, z: ArrayView1<'_, F>, t: F) -> Result<Array1<F>> {
        check_step(t)?;
        let kappa = self.lambda * t;
        Ok(z.mapv(|v| if v.abs() > kappa { F::one() } else { F::zero() }))
    }

    pub fn q2_value(&self, beta: ArrayView1<'_, F>) -> F {
        beta.iter().map(|&t| self.q2_scalar(t)).sum()
    }

    pub fn q2_grad(&self, beta: ArrayView1<'_, F>) -> Array1<F> {
        beta.mapv(|t| self.q2_grad_scalar(t))
    }

    /// `lambda * ||beta||_1 - q2(beta)`.
    pub fn penalty_value(&self, beta: ArrayView1<'_, F>) -> F {
        beta.iter()
            .map(|&t| self.lambda * t.abs() - self.q2_scalar(t))
            .sum()
    }

    pub fn q2_scalar(&self, t: F) -> F {
        let (lam, a) = (self.lambda, self.a);
        let at = t.abs();
        let half = F::lit(0.5);
        match self.kind {
            PenaltyKind::L1 => F::zero(),
            PenaltyKind::Scad => {
                if at <= lam {
                    F::zero()
                } else if at <= a * lam {
                    (at - lam) * (at - lam) / (F::lit(2.0) * (a - F::one()))
                } else {
                    lam * at - (a + F::one()) * lam * lam * half
                }
            }
            PenaltyKind::Mcp => {
                if at <= a * lam {
                    t * t / (F::lit(2.0) * a)
                } else {
                    lam * at - a * lam * lam * half
                }
            }
        }
    }

    pub fn q2_grad_scalar(&self, t: F) -> F {
        let (lam, a) = (self.lambda, self.a);
        let at = t.abs();
        let sign = sign(t);
        match self.kind {
            PenaltyKind::L1 => F::zero(),
            PenaltyKind::Scad => {
                if at <= lam {
                    F::zero()
                } else if at <= a * lam {
                    sign * (at - lam) / (a - F::one())
                } else {
                    sign * lam
                }
            }
            PenaltyKind::Mcp => {
                if at <= a * lam {
                    t / a
                } else {
                    sign * lam
                }
            }
        }
    }

    pub fn penalty_scalar(&self, t: F) -> F {
        self.lambda * t.abs() - self.q2_scalar(t)
    }

    /// Componentwise global minimizer of `0.5 (w - z_i)^2 + t * penalty(w)`.
    pub fn prox_nonconvex(&self, z: ArrayView1<'_, F>, t: F) -> Result<Array1<F>> {
        check_step(t)?;
        Ok(self.prox_nonconvex_unchecked(z, t))
    }

    pub(crate) fn prox_nonconvex_unchecked(&self, z: ArrayView1<'_, F>, t: F) -> Array1<F> {
        match self.kind {
            PenaltyKind::L1 => soft_threshold(z, self.lambda * t),
            _ => z.mapv(|v| self.prox_nonconvex_scalar(v, t)),
        }
    }

    /// Exact scalar minimization over the quadratic pieces of the penalty. When two
    /// candidates tie, the larger magnitude wins.
    pub fn prox_nonconvex_scalar(&self, z: F, t: F) -> F {
        let s = z.abs();
        if s == F::zero() {
            return F::zero();
        }
        let (lam, a) = (self.lambda, self.a);
        let mut cands: [F; 6] = [F::zero(); 6];
        let mut m = 0;
        let mut push = |w: F| {
            cands[m] = w;
            m += 1;
        };
        match self.kind {
            PenaltyKind::L1 => return sign(z) * (s - lam * t).max(F::zero()),
            PenaltyKind::Scad => {
                push((s - lam * t).max(F::zero()).min(lam));
                let am1 = a - F::one();
                if t < am1 {
                    let w = (am1 * s - t * a * lam) / (am1 - t);
                    push(w.max(lam).min(a * lam));
                } else {
                    push(lam);
                    push(a * lam);
                }
                push(s.max(a * lam));
            }
            PenaltyKind::Mcp => {
                if t < a {
                    let w = (s - t * lam) / (F::one() - t / a);
                    push(w.max(F::zero()).min(a * lam));
                } else {
                    push(F::zero());
                    push(a * lam);
                }
                push(s.max(a * lam));
            }
        }
        let obj = |w: F| F::lit(0.5) * (w - s) * (w - s) + t * self.penalty_scalar(w);
        let mut best_w = cands[0];
        let mut best = obj(best_w);
        for &w in &cands[1..m] {
            let v = obj(w);
            let tie = F::lit(8.0) * F::epsilon() * F::one().max(best.abs());
            if v < best - tie || ((v - best).abs() <= tie && w > best_w) {
                best = v;
                best_w = w;
            }
        }
        sign(z) * best_w
    }
}

#[inline]
fn sign<F: Scalar>(t: F) -> F {
    if t > F::zero() {
        F::one()
    } else if t < F::zero() {
        -F::one()
    } else {
        F::zero()
    }
}

fn check_step<F: Scalar>(t: F) -> Result<()> {
    if !(t > F::zero()) || !t.is_finite() {
        return Err(Error::param(format!("prox step must be positive, got {t}")));
    }
    Ok(())
}

/// `sign(z_i) * max(|z_i| - kappa, 0)`.
pub fn soft_threshold<F: Scalar>(z: ArrayView1<'_, F>, kappa: F) -> Array1<F> {
    z.mapv(|v| {
        let m = v.abs() - kappa;
        if m > F::zero() {
            sign(v) * m
        } else {
            F::zero()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn textbook(spec: &RegularizerSpec<f64>, t: f64) -> f64 {
        let (lam, a, at) = (spec.lambda(), spec.a(), t.abs());
        match spec.kind() {
            PenaltyKind::L1 => lam * at,
            PenaltyKind::Scad => {
                if at <= lam {
                    lam * at
                } else if at <= a * lam {
                    (2.0 * a * lam * at - at * at - lam * lam) / (2.0 * (a - 1.0))
                } else {
                    (a + 1.0) * lam * lam / 2.0
                }
            }
            PenaltyKind::Mcp => {
                if at <= a * lam {
                    lam * at - at * at / (2.0 * a)
                } else {
                    a * lam * lam / 2.0
                }
            }
        }
    }

    fn random_specs(rng: &mut ChaCha8Rng) -> Vec<RegularizerSpec<f64>> {
        let lam = rng.random_range(0.05..3.0);
        vec![
            RegularizerSpec::l1(lam).unwrap(),
            RegularizerSpec::scad(lam, rng.random_range(2.1..6.0)).unwrap(),
            RegularizerSpec::mcp(lam, rng.random_range(1.1..6.0)).unwrap(),
        ]
    }

    #[test]
    fn validation() {
        assert!(RegularizerSpec::<f64>::l1(0.0).is_err());
        assert!(RegularizerSpec::<f64>::scad(1.0, 2.0).is_err());
        assert!(RegularizerSpec::<f64>::mcp(1.0, 1.0).is_err());
        let d = RegularizerSpec::<f64>::new(PenaltyKind::Scad, 1.0, None).unwrap();
        assert_eq!(d.a(), 3.7);
        let d = RegularizerSpec::<f64>::new(PenaltyKind::Mcp, 1.0, None).unwrap();
        assert_eq!(d.a(), 2.0);
        let s = RegularizerSpec::<f64>::l1(1.0).unwrap();
        assert!(s.prox_q1(array![1.0].view(), 0.0).is_err());
        assert!(s.prox_nonconvex(array![1.0].view(), -1.0).is_err());
    }

    #[test]
    fn soft_threshold_examples() {
        let s = RegularizerSpec::l1(1.0).unwrap();
        assert_eq!(s.prox_q1(array![0.0, 0.0].view(), 1.0).unwrap(), array![0.0, 0.0]);
        assert_eq!(
            s.prox_q1(array![2.0, -0.5, -3.0].view(), 1.0).unwrap(),
            array![1.0, 0.0, -2.0]
        );
    }

    // Prox_{tf}(z) + t Prox_{f*/t}(z/t) = z, f = lambda ||.||_1, f* = indicator of the
    // lambda l_inf ball, whose prox is the projection onto that ball
    #[test]
    fn moreau_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let lam = rng.random_range(0.1..2.0);
            let t = rng.random_range(0.1..3.0);
            let s = RegularizerSpec::l1(lam).unwrap();
            let z: Array1<f64> = (0..10).map(|_| rng.random_range(-5.0..5.0)).collect();
            let lhs = s.prox_q1(z.view(), t).unwrap();
            let proj = z.mapv(|v| (v / t).clamp(-lam, lam));
            for i in 0..10 {
                assert!((lhs[i] + t * proj[i] - z[i]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn prox_q1_jacobian_cases() {
        let s = RegularizerSpec::l1(1.0).unwrap();
        assert_eq!(s.prox_q1_jacobian(array![0.5, -0.9].view(), 1.0).unwrap(), array![0.0, 0.0]);
        assert_eq!(s.prox_q1_jacobian(array![1.5, -2.0].view(), 1.0).unwrap(), array![1.0, 1.0]);
        assert_eq!(s.prox_q1_jacobian(array![1.0, -1.0].view(), 1.0).unwrap(), array![0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let eps = 1e-7;
        let mut checked = 0;
        while checked < 100 {
            let z: Array1<f64> = (0..8).map(|_| rng.random_range(-3.0..3.0)).collect();
            let d: Array1<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            if z.iter().any(|v| (v.abs() - 1.0).abs() < 1e-5) {
                continue;
            }
            let fd = (s.prox_q1((&z + &(&d * eps)).view(), 1.0).unwrap()
                - s.prox_q1(z.view(), 1.0).unwrap())
                / eps;
            let v = s.prox_q1_jacobian(z.view(), 1.0).unwrap();
            for i in 0..8 {
                assert!((fd[i] - v[i] * d[i]).abs() <= 1e-5);
            }
            checked += 1;
        }
    }

    #[test]
    fn q2_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in random_specs(&mut rng) {
            assert_eq!(s.q2_value(array![0.0, 0.0].view()), 0.0);
            assert_eq!(s.q2_grad(array![0.0, 0.0].view()), array![0.0, 0.0]);
        }
        let scad = RegularizerSpec::scad(1.0, 3.7).unwrap();
        assert_abs_diff_eq!(scad.q2_scalar(5.0), 2.65, epsilon = 1e-12);
        assert_abs_diff_eq!(scad.q2_grad_scalar(5.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(5.0 - scad.q2_scalar(5.0), 2.35, epsilon = 1e-12);
        let mcp = RegularizerSpec::mcp(1.0, 2.0).unwrap();
        assert_abs_diff_eq!(mcp.penalty_scalar(5.0), 1.0, epsilon = 1e-12);
        let l1 = RegularizerSpec::l1(2.0).unwrap();
        assert_abs_diff_eq!(l1.penalty_value(array![1.0, -3.0].view()), 8.0);
        assert_eq!(l1.penalty_value(array![0.0].view()), 0.0);
    }

    #[test]
    fn dc_split_matches_textbook_penalty() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10_000 {
            for s in random_specs(&mut rng) {
                let t = rng.random_range(-10.0..10.0);
                assert!((s.penalty_scalar(t) - textbook(&s, t)).abs() <= 1e-10);
            }
        }
        let s = RegularizerSpec::scad(0.7, 3.7).unwrap();
        let beta = array![0.1, -2.0, 5.0, 0.0];
        let direct: f64 = beta.iter().map(|&t| textbook(&s, t)).sum();
        assert!((s.penalty_value(beta.view()) - direct).abs() <= 1e-10);
        assert!(s.penalty_value(beta.view()) <= 4.0 * 4.7 * 0.49 / 2.0 + 1e-12);
    }

    #[test]
    fn q2_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-6;
        let mut checked = 0;
        while checked < 100 {
            for s in random_specs(&mut rng) {
                let t: f64 = rng.random_range(-8.0..8.0);
                let kinks = [s.lambda(), s.a() * s.lambda()];
                if kinks.iter().any(|k| (t.abs() - k).abs() < 1e-4) {
                    continue;
                }
                let fd = (s.q2_scalar(t + h) - s.q2_scalar(t - h)) / (2.0 * h);
                let g = s.q2_grad_scalar(t);
                assert!((fd - g).abs() <= 1e-6 * g.abs().max(1.0), "{fd} vs {g}");
            }
            checked += 1;
        }
    }

    #[test]
    fn q2_convex_and_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..2000 {
            for s in random_specs(&mut rng) {
                let x: Array1<f64> = (0..4).map(|_| rng.random_range(-6.0..6.0)).collect();
                let y: Array1<f64> = (0..4).map(|_| rng.random_range(-6.0..6.0)).collect();
                let th = rng.random_range(0.0..1.0);
                let mid = &x * th + &y * (1.0 - th);
                let lhs = s.q2_value(mid.view());
                let rhs = th * s.q2_value(x.view()) + (1.0 - th) * s.q2_value(y.view());
                assert!(lhs <= rhs + 1e-12);
                let dg = s.q2_grad(x.view()) - s.q2_grad(y.view());
                let dx = &x - &y;
                assert!(dg.dot(&dg).sqrt() <= s.q2_grad_lipschitz() * dx.dot(&dx).sqrt() + 1e-12);
            }
        }
    }

    #[test]
    fn prox_nonconvex_examples() {
        let scad = RegularizerSpec::scad(1.0, 3.7).unwrap();
        let mcp = RegularizerSpec::mcp(1.0, 2.0).unwrap();
        for s in [&scad, &mcp] {
            assert_eq!(s.prox_nonconvex(array![0.0].view(), 0.7).unwrap()[0], 0.0);
        }
        assert_eq!(scad.prox_nonconvex_scalar(4.0, 1.0), 4.0);
        assert_eq!(scad.prox_nonconvex_scalar(-6.5, 1.0), -6.5);
        let l1 = RegularizerSpec::l1(1.0).unwrap();
        let z = array![2.0, -0.3, 1.0];
        assert_eq!(
            l1.prox_nonconvex(z.view(), 0.5).unwrap(),
            l1.prox_q1(z.view(), 0.5).unwrap()
        );
    }

    fn brute_min(s: &RegularizerSpec<f64>, z: f64, t: f64) -> (f64, f64) {
        let obj = |w: f64| 0.5 * (w - z).powi(2) + t * textbook(s, w);
        let r = z.abs() + 1.0;
        let m = 100_000;
        let mut best = (obj(-r), -r);
        for k in 0..=m {
            let w = -r + 2.0 * r * k as f64 / m as f64;
            let v = obj(w);
            if v < best.0 {
                best = (v, w);
            }
        }
        // polish with golden section around the best grid point
        let (mut lo, mut hi) = (best.1 - 2.0 * r / m as f64, best.1 + 2.0 * r / m as f64);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) * 0.381966;
            let m2 = lo + (hi - lo) * 0.618034;
            if obj(m1) <= obj(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let w = 0.5 * (lo + hi);
        if obj(w) < best.0 {
            (obj(w), w)
        } else {
            best
        }
    }

    #[test]
    fn prox_nonconvex_beats_grid_and_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            for s in random_specs(&mut rng) {
                let z = rng.random_range(-8.0..8.0);
                let t = rng.random_range(0.1..3.0);
                let w = s.prox_nonconvex_scalar(z, t);
                let obj = |w: f64| 0.5 * (w - z).powi(2) + t * textbook(&s, w);
                let (grid_val, grid_w) = brute_min(&s, z, t);
                assert!(obj(w) <= grid_val + 1e-12, "{:?} z={z} t={t}", s.kind());
                // unique minimizer when the scaled problem stays strongly convex
                let curv = 1.0 - t * s.q2_grad_lipschitz();
                if curv > 0.05 {
                    assert!((w - grid_w).abs() <= 1e-8 / curv.min(1.0) * 10.0);
                }
                let soft = (z.abs() - s.lambda() * t).max(0.0) * z.signum();
                assert!(obj(w) <= obj(soft) + 1e-12);
                assert!(obj(w) <= obj(z) + 1e-12);
            }
        }
    }
}
