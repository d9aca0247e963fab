use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::regularizers::RegularizerSpec;
use crate::scalar::Scalar;

/// Design matrix, response and penalty: `min_beta h(b - X beta) + penalty(beta)`.
#[derive(Debug, Clone)]
pub struct RegressionProblem<F> {
    x: Array2<F>,
    b: Array1<F>,
    spec: RegularizerSpec<F>,
}

impl<F: Scalar> RegressionProblem<F> {
    pub fn new(x: Array2<F>, b: Array1<F>, spec: RegularizerSpec<F>) -> Result<Self> {
        let (n, p) = x.dim();
        if n < 2 {
            return Err(Error::input(format!("need at least 2 samples, got {n}")));
        }
        if p == 0 {
            return Err(Error::input("design matrix has no columns"));
        }
        if b.len() != n {
            return Err(Error::input(format!(
                "response has length {} but design has {n} rows",
                b.len()
            )));
        }
        if x.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite entry in design or response"));
        }
        let x = x.as_standard_layout().into_owned();
        Ok(RegressionProblem { x, b, spec })
    }

    pub fn x(&self) -> &Array2<F> {
        &self.x
    }

    pub fn b(&self) -> &Array1<F> {
        &self.b
    }

    pub fn spec(&self) -> &RegularizerSpec<F> {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn with_spec(&self, spec: RegularizerSpec<F>) -> Self {
        RegressionProblem {
            x: self.x.clone(),
            b: self.b.clone(),
            spec,
        }
    }

    /// Smallest `lambda` for which `beta = 0` is optimal for the l1 problem:
    /// `||X^T s||_inf` with `s` the (mid-rank) subgradient of the loss at `-b`.
    pub fn lambda_ref(&self) -> F {
        let s = rank_subgradient(self.b.mapv(|v| -v).view());
        let g = self.x.t().dot(&s);
        g.iter().fold(F::zero(), |m, v| m.max(v.abs()))
    }
}

/// Element of the subdifferential of the rank loss at `y`:
/// `(2 * rank_i - n - 1) / (n (n - 1))` with ascending mid-ranks.
pub fn rank_subgradient<F: Scalar>(y: ArrayView1<'_, F>) -> Array1<F> {
    let n = y.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| y[a].partial_cmp(&y[b]).expect("finite entries"));
    let mut ranks = vec![F::zero(); n];
    let mut k = 0;
    while k < n {
        let mut e = k + 1;
        while e < n && y[idx[e]] == y[idx[k]] {
            e += 1;
        }
        // 1-based ranks k+1..=e share their average
        let mid = F::lit((k + 1 + e) as f64 / 2.0);
        for &i in &idx[k..e] {
            ranks[i] = mid;
        }
        k = e;
    }
    let nf = F::lit(n as f64);
    let denom = nf * (nf - F::one());
    Array1::from_iter(ranks.into_iter().map(|r| (F::lit(2.0) * r - nf - F::one()) / denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_bad_shapes() {
        let spec = RegularizerSpec::l1(0.1).unwrap();
        assert!(RegressionProblem::new(Array2::<f64>::zeros((1, 2)), array![1.0], spec).is_err());
        assert!(RegressionProblem::new(Array2::<f64>::zeros((3, 2)), array![1.0, 2.0], spec).is_err());
        let mut x = Array2::<f64>::zeros((2, 2));
        x[[0, 0]] = f64::INFINITY;
        assert!(RegressionProblem::new(x, array![1.0, 2.0], spec).is_err());
    }

    #[test]
    fn rank_subgradient_sums_to_zero() {
        let s = rank_subgradient(array![3.0f64, -1.0, 2.0, 2.0].view());
        assert!(s.sum().abs() < 1e-15);
        // ranks: -1 ->1, 2,2 -> 2.5, 3 -> 4 ; n(n-1) = 12
        assert!((s[0] - 3.0 / 12.0).abs() < 1e-15);
        assert!((s[1] + 3.0 / 12.0).abs() < 1e-15);
        assert!(s[2].abs() < 1e-15);
    }
}
