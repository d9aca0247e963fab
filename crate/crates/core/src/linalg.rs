//! Small dense kernels: Cholesky factorization and preconditioned conjugate gradients.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[inline]
pub fn norm2<F: Scalar>(v: ArrayView1<'_, F>) -> F {
    v.dot(&v).sqrt()
}

#[inline]
pub fn norm1<F: Scalar>(v: ArrayView1<'_, F>) -> F {
    v.iter().fold(F::zero(), |acc, &x| acc + x.abs())
}

#[inline]
pub fn norm_inf<F: Scalar>(v: ArrayView1<'_, F>) -> F {
    v.iter().fold(F::zero(), |acc, &x| acc.max(x.abs()))
}

/// Lower-triangular Cholesky factor `A = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<F> {
    n: usize,
    // row-major, lower triangle meaningful
    l: Vec<F>,
}

impl<F: Scalar> Cholesky<F> {
    /// Factorizes `a`. Only the lower triangle is read.
    pub fn factor(a: Array2<F>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::input(format!(
                "cholesky needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let mut l = a.as_standard_layout().into_owned().into_raw_vec_and_offset().0;
        for j in 0..n {
            let mut d = l[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > F::zero()) || !d.is_finite() {
                return Err(Error::NumericalFailure(format!(
                    "matrix not positive definite at pivot {j} (value {d})"
                )));
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            let (upper, lower) = l.split_at_mut((j + 1) * n);
            let row_j = &upper[j * n..j * n + j];
            for row_i in lower.chunks_mut(n) {
                let mut s = row_i[j];
                for (a, b) in row_i[..j].iter().zip(row_j) {
                    s -= *a * *b;
                }
                row_i[j] = s / d;
            }
        }
        Ok(Cholesky { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = rhs`.
    pub fn solve(&self, rhs: ArrayView1<'_, F>) -> Array1<F> {
        let n = self.n;
        assert_eq!(rhs.len(), n, "rhs length mismatch");
        let l = &self.l;
        let mut x: Vec<F> = rhs.to_vec();
        for i in 0..n {
            let row = &l[i * n..i * n + i];
            let mut s = x[i];
            for (k, &lik) in row.iter().enumerate() {
                s -= lik * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        Array1::from(x)
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome<F> {
    pub x: Array1<F>,
    pub residual: F,
    pub iterations: usize,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for an SPD operator, starting from zero.
/// Stops once `‖A x − rhs‖ ≤ tol`.
pub fn pcg<F, A>(
    apply: A,
    inv_diag: ArrayView1<'_, F>,
    rhs: ArrayView1<'_, F>,
    tol: F,
    max_iter: usize,
) -> CgOutcome<F>
where
    F: Scalar,
    A: Fn(ArrayView1<'_, F>) -> Array1<F>,
{
    let n = rhs.len();
    let mut x = Array1::<F>::zeros(n);
    let mut r = rhs.to_owned();
    let mut res = norm2(r.view());
    if res <= tol {
        return CgOutcome {
            x,
            residual: res,
            iterations: 0,
            converged: true,
        };
    }
    let mut z = &r * &inv_diag;
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for it in 1..=max_iter {
        let ap = apply(p.view());
        let pap = p.dot(&ap);
        if !(pap > F::zero()) {
            return CgOutcome {
                x,
                residual: res,
                iterations: it,
                converged: false,
            };
        }
        let alpha = rz / pap;
        x.scaled_add(alpha, &p);
        r.scaled_add(-alpha, &ap);
        res = norm2(r.view());
        if res <= tol {
            return CgOutcome {
                x,
                residual: res,
                iterations: it,
                converged: true,
            };
        }
        z = &r * &inv_diag;
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = &z + &(&p * beta);
    }
    CgOutcome {
        x,
        residual: res,
        iterations: max_iter,
        converged: false,
    }
}
