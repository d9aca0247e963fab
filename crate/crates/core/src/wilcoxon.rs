//! Wilcoxon-score rank loss
//!
//! `h(y) = 1/(n(n-1)) * sum_{i<j} |y_i - y_j|`
//!
//! together with its proximal mapping and a generalized Jacobian of that mapping.
//! The prox sorts its argument, shifts by the Wilcoxon score vector and projects the
//! result onto the cone of non-increasing vectors with pool-adjacent-violators. The
//! pooled blocks of that projection are everything the semismooth Newton method needs:
//! the Jacobian element is the block-averaging projector in sorted coordinates.

use std::ops::Range;

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_finite<F: Scalar>(v: ArrayView1<'_, F>, what: &str) -> Result<()> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::input(format!("{what}: entry {i} is not finite")));
    }
    Ok(())
}

/// Permutation sorting `x` in non-increasing order. Ties keep their original order.
pub(crate) fn descending_perm<F: Scalar>(x: ArrayView1<'_, F>) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..x.len()).collect();
    perm.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).expect("finite entries"));
    perm
}

/// Evaluates `h(y)` in `O(n log n)` through the sorted form
/// `1/(n(n-1)) * sum_i (n + 1 - 2i) y_(i)` with `y_(1) >= ... >= y_(n)`.
pub fn eval_h<F: Scalar>(y: ArrayView1<'_, F>) -> Result<F> {
    if y.len() < 2 {
        return Err(Error::input(format!(
            "rank loss needs at least 2 entries, got {}",
            y.len()
        )));
    }
    check_finite(y, "rank loss argument")?;
    Ok(eval_h_unchecked(y))
}

pub(crate) fn eval_h_unchecked<F: Scalar>(y: ArrayView1<'_, F>) -> F {
    let n = y.len();
    let mut sorted: Vec<F> = y.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let nf = F::lit(n as f64);
    let mut acc = F::zero();
    for (i, &v) in sorted.iter().enumerate() {
        // 0-based i: coefficient n - 1 - 2i
        acc += (nf - F::one() - F::lit(2.0 * i as f64)) * v;
    }
    (acc / (nf * (nf - F::one()))).max(F::zero())
}

/// Pool-adjacent-violators projection onto `{x : x_1 >= x_2 >= ... >= x_n}`.
///
/// Returns the projected values and the blocks PAVA pooled (ranges over positions).
pub(crate) fn pava_nonincreasing<F: Scalar>(z: &[F]) -> (Vec<F>, Vec<Range<usize>>) {
    // (sum, count, start)
    let mut stack: Vec<(F, usize, usize)> = Vec::with_capacity(z.len());
    for (i, &v) in z.iter().enumerate() {
        stack.push((v, 1, i));
        while stack.len() >= 2 {
            let (s2, c2, _) = stack[stack.len() - 1];
            let (s1, c1, st1) = stack[stack.len() - 2];
            let m1 = s1 / F::lit(c1 as f64);
            let m2 = s2 / F::lit(c2 as f64);
            if m1 < m2 {
                stack.pop();
                let last = stack.last_mut().expect("two blocks on stack");
                *last = (s1 + s2, c1 + c2, st1);
            } else {
                break;
            }
        }
    }
    let mut values = Vec::with_capacity(z.len());
    let mut blocks = Vec::with_capacity(stack.len());
    for (s, c, start) in stack {
        let mean = s / F::lit(c as f64);
        values.extend(std::iter::repeat_n(mean, c));
        blocks.push(start..start + c);
    }
    (values, blocks)
}

/// Euclidean projection onto the non-increasing cone.
pub fn project_monotone<F: Scalar>(z: ArrayView1<'_, F>) -> Result<Array1<F>> {
    check_finite(z, "projection argument")?;
    let (values, _) = pava_nonincreasing(&z.to_vec());
    Ok(Array1::from(values))
}

/// Output of [`prox_h`]: the prox value plus the sorting permutation and the pooled
/// groups (in sorted coordinates) defining its generalized Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxHResult<F> {
    pub y: Array1<F>,
    /// `perm[k]` is the original index of the k-th largest input entry.
    pub perm: Vec<usize>,
    /// Maximal runs of sorted positions joined by active monotonicity constraints.
    pub blocks: Vec<Range<usize>>,
    /// `1 / (iota * n * (n - 1))`
    pub rho: F,
}

/// `argmin_w { h(w)/iota + 0.5 * ||w - x||^2 }`.
pub fn prox_h<F: Scalar>(x: ArrayView1<'_, F>, iota: F) -> Result<ProxHResult<F>> {
    if !(iota > F::zero()) || !iota.is_finite() {
        return Err(Error::param(format!("prox parameter must be positive, got {iota}")));
    }
    if x.len() < 2 {
        return Err(Error::input(format!(
            "rank loss prox needs at least 2 entries, got {}",
            x.len()
        )));
    }
    check_finite(x, "prox argument")?;
    Ok(prox_h_unchecked(x, iota))
}

pub(crate) fn prox_h_unchecked<F: Scalar>(x: ArrayView1<'_, F>, iota: F) -> ProxHResult<F> {
    let n = x.len();
    let nf = F::lit(n as f64);
    let rho = F::one() / (iota * nf * (nf - F::one()));
    let perm = descending_perm(x);
    let shifted: Vec<F> = perm
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            // Wilcoxon scores n - 2i + 1 with 1-based i
            let w = nf - F::lit(2.0 * (k + 1) as f64) + F::one();
            x[i] - rho * w
        })
        .collect();
    let (sorted_y, _) = pava_nonincreasing(&shifted);
    let blocks = active_blocks(&sorted_y);
    let mut y = Array1::zeros(n);
    for (k, &i) in perm.iter().enumerate() {
        y[i] = sorted_y[k];
    }
    ProxHResult { y, perm, blocks, rho }
}

/// Groups sorted positions whose consecutive gap is within the pooling tolerance.
fn active_blocks<F: Scalar>(sorted: &[F]) -> Vec<Range<usize>> {
    let n = sorted.len();
    let scale = sorted.iter().fold(F::zero(), |m, v| m.max(v.abs()));
    let tol = F::pooling_tol() * (F::one() + scale);
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 1..n {
        if (sorted[i - 1] - sorted[i]).abs() > tol {
            blocks.push(start..i);
            start = i;
        }
    }
    if n > 0 {
        blocks.push(start..n);
    }
    blocks
}

/// Matrix-free element `U = P^T (block averaging) P` of the generalized Jacobian of the
/// rank-loss prox. Symmetric, idempotent, eigenvalues in {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxHJacobian {
    perm: Vec<usize>,
    blocks: Vec<Range<usize>>,
}

pub fn prox_h_jacobian<F: Scalar>(result: &ProxHResult<F>) -> ProxHJacobian {
    ProxHJacobian {
        perm: result.perm.clone(),
        blocks: result.blocks.clone(),
    }
}

impl ProxHJacobian {
    /// Builds a Jacobian from an explicit permutation and partition of sorted positions.
    pub fn from_parts(perm: Vec<usize>, blocks: Vec<Range<usize>>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &i in &perm {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::input("perm is not a permutation"));
            }
        }
        let mut next = 0;
        for b in &blocks {
            if b.start != next || b.end <= b.start {
                return Err(Error::input("blocks must partition 0..n in order"));
            }
            next = b.end;
        }
        if next != n {
            return Err(Error::input("blocks must cover 0..n"));
        }
        Ok(ProxHJacobian { perm, blocks })
    }

    pub fn identity(n: usize) -> Self {
        ProxHJacobian {
            perm: (0..n).collect(),
            blocks: (0..n).map(|i| i..i + 1).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    /// Original indices belonging to each pooled group.
    pub fn groups(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.blocks.iter().map(move |b| &self.perm[b.clone()])
    }

    /// `U v`: replaces each pooled group's entries by their mean.
    pub fn apply<F: Scalar>(&self, v: ArrayView1<'_, F>) -> Result<Array1<F>> {
        if v.len() != self.dim() {
            return Err(Error::input(format!(
                "jacobian of size {} applied to vector of length {}",
                self.dim(),
                v.len()
            )));
        }
        Ok(self.apply_unchecked(v))
    }

    pub(crate) fn apply_unchecked<F: Scalar>(&self, v: ArrayView1<'_, F>) -> Array1<F> {
        let mut out = Array1::zeros(v.len());
        for group in self.groups() {
            if let [i] = group {
                out[*i] = v[*i];
                continue;
            }
            let mean = group.iter().map(|&i| v[i]).sum::<F>() / F::lit(group.len() as f64);
            for &i in group {
                out[i] = mean;
            }
        }
        out
    }

    /// Dense `n x n` form. Meant for small problems and tests.
    pub fn to_dense<F: Scalar>(&self) -> ndarray::Array2<F> {
        let n = self.dim();
        let mut u = ndarray::Array2::zeros((n, n));
        for group in self.groups() {
            let w = F::one() / F::lit(group.len() as f64);
            for &i in group {
                for &j in group {
                    u[[i, j]] = w;
                }
            }
        }
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pairwise_h(y: &[f64]) -> f64 {
        let n = y.len();
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += (y[i] - y[j]).abs();
            }
        }
        s / (n * (n - 1)) as f64
    }

    // every partition of 0..n into consecutive blocks; keep the feasible block-mean
    // vector closest to z
    fn brute_force_projection(z: &[f64]) -> Vec<f64> {
        let n = z.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0u32..(1 << (n - 1)) {
            let mut cand = vec![0.0; n];
            let mut start = 0;
            for i in 0..n {
                let cut = i == n - 1 || mask & (1 << i) != 0;
                if cut {
                    let m = z[start..=i].iter().sum::<f64>() / (i + 1 - start) as f64;
                    cand[start..=i].iter_mut().for_each(|c| *c = m);
                    start = i + 1;
                }
            }
            if cand.windows(2).any(|w| w[0] < w[1] - 1e-15) {
                continue;
            }
            let d: f64 = cand.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, cand));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn eval_h_small_cases() {
        assert_eq!(eval_h(array![2.5, 2.5, 2.5, 2.5].view()).unwrap(), 0.0);
        assert_abs_diff_eq!(eval_h(array![3.0, 1.0].view()).unwrap(), 1.0, epsilon = 1e-15);
        let y = [3.0, 1.0, 2.0];
        let oracle = pairwise_h(&y);
        assert_abs_diff_eq!(oracle, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_h(array![3.0, 1.0, 2.0].view()).unwrap(), oracle, epsilon = 1e-15);
    }

    #[test]
    fn eval_h_rejects_bad_input() {
        assert!(matches!(eval_h(array![1.0].view()), Err(Error::InvalidInput(_))));
        assert!(matches!(
            eval_h(array![1.0, f64::NAN].view()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn eval_h_matches_pairwise_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.random_range(2..=50);
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let fast = eval_h(ArrayView1::from(&y)).unwrap();
            let slow = pairwise_h(&y);
            assert!((fast - slow).abs() <= 1e-12 * slow.abs().max(1e-300));
        }
    }

    #[test]
    fn projection_examples() {
        let z = array![3.0, 2.0, 2.0, -1.0];
        assert_eq!(project_monotone(z.view()).unwrap(), z);
        assert_eq!(project_monotone(array![1.0, 2.0].view()).unwrap(), array![1.5, 1.5]);
        let out = project_monotone(array![1.0, 3.0, 2.0].view()).unwrap();
        let oracle = brute_force_projection(&[1.0, 3.0, 2.0]);
        for (a, b) in out.iter().zip(&oracle) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(out[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn projection_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let n = rng.random_range(1..=8);
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let out = project_monotone(ArrayView1::from(&z)).unwrap();
            let oracle = brute_force_projection(&z);
            for (a, b) in out.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn prox_examples() {
        let c = array![0.7, 0.7, 0.7];
        for v in prox_h(c.view(), 3.0).unwrap().y.iter() {
            assert_abs_diff_eq!(*v, 0.7, epsilon = 1e-15);
        }
        let r = prox_h(array![1.0, -1.0].view(), 1.0).unwrap();
        assert_abs_diff_eq!(r.rho, 0.5);
        assert_abs_diff_eq!(r.y[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.y[1], -0.5, epsilon = 1e-15);
        assert!(matches!(
            prox_h(array![1.0, 2.0].view(), 0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            prox_h(array![1.0, 2.0].view(), -1.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn prox_sort_and_pool_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.random_range(2..20);
            let x: Array1<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let r = prox_h(x.view(), rng.random_range(0.01..5.0)).unwrap();
            for w in r.perm.windows(2) {
                assert!(x[w[0]] >= x[w[1]]);
            }
            let sorted: Vec<f64> = r.perm.iter().map(|&i| r.y[i]).collect();
            for w in sorted.windows(2) {
                assert!(w[0] >= w[1]);
            }
            for b in &r.blocks {
                for k in b.clone() {
                    assert!((sorted[k] - sorted[b.start]).abs() < 1e-9);
                }
            }
        }
    }

    // Moreau optimality: directional derivatives of the prox objective at the prox point
    #[test]
    fn prox_directional_derivatives_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = rng.random_range(2..10);
            let iota = rng.random_range(0.05..2.0);
            let x: Array1<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = prox_h(x.view(), iota).unwrap().y;
            let scale = 1.0 / (iota * (n * (n - 1)) as f64);
            for _ in 0..100 {
                let mut d: Array1<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                d /= norm(&d);
                let mut hd = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        let diff = y[i] - y[j];
                        let dd = d[i] - d[j];
                        hd += if diff.abs() <= 1e-12 { dd.abs() } else { diff.signum() * dd };
                    }
                }
                let deriv = scale * hd + (&y - &x).dot(&d);
                assert!(deriv >= -1e-8, "negative directional derivative {deriv}");
            }
        }
    }

    fn norm(v: &Array1<f64>) -> f64 {
        v.dot(v).sqrt()
    }

    #[test]
    fn jacobian_extremes() {
        let x = array![3.0, 2.0, 1.0, 0.0];
        // tiny rho: nothing pools
        let r = prox_h(x.view(), 1e6).unwrap();
        let j = prox_h_jacobian(&r);
        let v = array![1.0, -2.0, 0.5, 4.0];
        assert_eq!(j.apply(v.view()).unwrap(), v);
        // huge rho: everything pools to the mean
        let r = prox_h(x.view(), 1e-6).unwrap();
        let j = prox_h_jacobian(&r);
        assert_eq!(j.blocks().len(), 1);
        let out = j.apply(v.view()).unwrap();
        for &o in out.iter() {
            assert_abs_diff_eq!(o, 0.875, epsilon = 1e-15);
        }
        let dense: ndarray::Array2<f64> = j.to_dense();
        assert!(dense.iter().all(|&e| (e - 0.25).abs() < 1e-15));
        assert!(j.apply(array![1.0, 2.0].view()).is_err());
    }

    // U from its defining formula I - B^T (S B B^T S)^+ B for an active set S
    fn pinv_projector(n: usize, active: &[bool]) -> ndarray::Array2<f64> {
        // B_A has rows e_i - e_{i+1} for active i; (S B B^T S)^+ restricted to the
        // active rows equals (B_A B_A^T)^{-1}
        let rows: Vec<usize> = (0..n - 1).filter(|&i| active[i]).collect();
        let mut u = ndarray::Array2::<f64>::eye(n);
        if rows.is_empty() {
            return u;
        }
        let m = rows.len();
        let mut ba = ndarray::Array2::<f64>::zeros((m, n));
        for (r, &i) in rows.iter().enumerate() {
            ba[[r, i]] = 1.0;
            ba[[r, i + 1]] = -1.0;
        }
        let gram = ba.dot(&ba.t());
        let chol = crate::linalg::Cholesky::factor(gram).unwrap();
        let mut inv = ndarray::Array2::<f64>::zeros((m, m));
        for c in 0..m {
            let mut e = Array1::zeros(m);
            e[c] = 1.0;
            inv.column_mut(c).assign(&chol.solve(e.view()));
        }
        u -= &ba.t().dot(&inv).dot(&ba);
        u
    }

    #[test]
    fn jacobian_matches_pseudoinverse_formula_single_pair() {
        // sorted positions 2,3 (1-based) pooled, others free
        let j = ProxHJacobian::from_parts(vec![0, 1, 2, 3], vec![0..1, 1..3, 3..4]).unwrap();
        let dense = pinv_projector(4, &[false, true, false]);
        let ours: ndarray::Array2<f64> = j.to_dense();
        for (a, b) in ours.iter().zip(dense.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        // realised by an actual prox: x sorted, middle pair violates after the shift
        let x = array![10.0, 0.0, -0.1, -10.0];
        let r = prox_h(x.view(), 1.0).unwrap();
        assert_eq!(r.blocks, vec![0..1, 1..3, 3..4]);
        let v = array![1.0, 2.0, 4.0, 8.0];
        assert_eq!(prox_h_jacobian(&r).apply(v.view()).unwrap(), array![1.0, 3.0, 3.0, 8.0]);
    }

    #[test]
    fn jacobian_matches_pseudoinverse_formula_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let n = rng.random_range(2..12);
            let x: Array1<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = prox_h(x.view(), rng.random_range(0.02..1.0)).unwrap();
            let sorted: Vec<f64> = r.perm.iter().map(|&i| r.y[i]).collect();
            let active: Vec<bool> =
                (0..n - 1).map(|i| (sorted[i] - sorted[i + 1]).abs() <= 1e-10).collect();
            let core = pinv_projector(n, &active);
            let mut p = ndarray::Array2::<f64>::zeros((n, n));
            for (k, &i) in r.perm.iter().enumerate() {
                p[[k, i]] = 1.0;
            }
            let dense = p.t().dot(&core).dot(&p);
            let ours: ndarray::Array2<f64> = prox_h_jacobian(&r).to_dense();
            for (a, b) in ours.iter().zip(dense.iter()) {
                assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let eps = 1e-7;
        let mut checked = 0;
        while checked < 100 {
            let n = rng.random_range(2..15);
            let iota = rng.random_range(0.05..2.0);
            let x: Array1<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Array1<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let base = prox_h(x.view(), iota).unwrap();
            let xp = &x + &(&v * eps);
            let pert = prox_h(xp.view(), iota).unwrap();
            // generic point: same ordering and pooling after the perturbation
            if base.perm != pert.perm || base.blocks != pert.blocks {
                continue;
            }
            let fd = (&pert.y - &base.y) / eps;
            let jv = prox_h_jacobian(&base).apply(v.view()).unwrap();
            for (a, b) in fd.iter().zip(jv.iter()) {
                assert!((a - b).abs() <= 1e-5);
            }
            checked += 1;
        }
    }

    proptest! {
        #[test]
        fn translation_and_homogeneity(
            y in proptest::collection::vec(-50.0f64..50.0, 2..40),
            c in -10.0f64..10.0,
            alpha in 0.0f64..5.0,
        ) {
            let y = Array1::from(y);
            let h = eval_h(y.view()).unwrap();
            let shifted = eval_h((&y + c).view()).unwrap();
            prop_assert!((h - shifted).abs() <= 1e-12 * (1.0 + h.abs()) * 100.0);
            let scaled = eval_h((&y * alpha).view()).unwrap();
            prop_assert!((scaled - alpha * h).abs() <= 1e-12 * (1.0 + alpha * h) * 100.0);
        }

        #[test]
        fn prox_translation_equivariant_and_nonexpansive(
            pair in (2usize..15).prop_flat_map(|n| (
                proptest::collection::vec(-5.0f64..5.0, n),
                proptest::collection::vec(-5.0f64..5.0, n),
            )),
            c in -3.0f64..3.0,
            iota in 0.01f64..10.0,
        ) {
            let x1 = Array1::from(pair.0);
            let x2 = Array1::from(pair.1);
            let p1 = prox_h(x1.view(), iota).unwrap().y;
            let p2 = prox_h(x2.view(), iota).unwrap().y;
            prop_assert!(norm(&(&p1 - &p2)) <= norm(&(&x1 - &x2)) + 1e-12);
            let shifted = prox_h((&x1 + c).view(), iota).unwrap().y;
            for (a, b) in shifted.iter().zip(p1.iter()) {
                prop_assert!((a - (b + c)).abs() <= 1e-10);
            }
        }

        #[test]
        fn projector_laws(
            pair in (2usize..20).prop_flat_map(|n| (
                proptest::collection::vec(-1.0f64..1.0, n),
                proptest::collection::vec(-1.0f64..1.0, n),
            )),
            iota in 0.01f64..2.0,
        ) {
            let x = Array1::from(pair.0);
            let v = Array1::from(pair.1);
            let j = prox_h_jacobian(&prox_h(x.view(), iota).unwrap());
            let uv = j.apply(v.view()).unwrap();
            let uuv = j.apply(uv.view()).unwrap();
            for (a, b) in uv.iter().zip(uuv.iter()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            let quad = v.dot(&uv);
            prop_assert!(quad >= -1e-12 && quad <= v.dot(&v) + 1e-12);
            let dense: ndarray::Array2<f64> = j.to_dense();
            prop_assert!(dense.iter().zip(dense.t().iter()).all(|(a, b)| a == b));
        }
    }
}
