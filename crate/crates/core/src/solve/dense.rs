use crate::sparse::SparseMatrix;
use crate::{Error, Real, Result};

/// Largest free block factored densely when it is not symmetric.
pub(crate) const DENSE_LIMIT: usize = 2000;

/// LU with partial pivoting, row-major.
#[derive(Debug, Clone)]
pub(crate) struct DenseLu<T> {
    n: usize,
    lu: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Real> DenseLu<T> {
    pub(crate) fn factor(a: &SparseMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        let mut lu = vec![T::zero(); n * n];
        for (i, j, v) in a.triplets() {
            lu[i * n + j] = v;
        }
        let scale = a.max_abs();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&r, &s| lu[r * n + k].abs().partial_cmp(&lu[s * n + k].abs()).unwrap())
                .unwrap();
            if !(lu[p * n + k].abs() > T::lit(1e-14) * scale) {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let d = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let u = lu[k * n + j];
                        lu[i * n + j] -= f * u;
                    }
                }
            }
        }
        Ok(Self { n, lu, piv })
    }

    pub(crate) fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}
