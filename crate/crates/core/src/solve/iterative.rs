use crate::solve::{dot, norm};
use crate::sparse::SparseMatrix;
use crate::{Error, Real, Result};

/// Jacobi-preconditioned conjugate gradients.
pub(crate) fn pcg<T: Real>(
    a: &SparseMatrix<T>,
    b: &[T],
    inv_diag: &[T],
    x0: Option<Vec<T>>,
    tol: T,
    max_iter: usize,
) -> Result<(Vec<T>, usize)> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = x0.unwrap_or_else(|| vec![T::zero(); n]);
    let mut r: Vec<T> = {
        let ax = a.mul_vec(&x);
        b.iter().zip(&ax).map(|(b, a)| *b - *a).collect()
    };
    let target = tol * bnorm;
    if norm(&r) <= target {
        return Ok((x, 0));
    }
    let mut z: Vec<T> = r.iter().zip(inv_diag).map(|(r, d)| *r * *d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); n];
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(Error::Singular(format!(
                "conjugate gradients met non-positive curvature {pap:e} at iteration {it}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rn = norm(&r);
        if rn <= target {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = (norm(&r) / bnorm).as_f64();
    Err(Error::NotConverged { iterations: max_iter, residual })
}

/// Jacobi-preconditioned BiCGSTAB for non-symmetric free blocks.
pub(crate) fn bicgstab<T: Real>(
    a: &SparseMatrix<T>,
    b: &[T],
    inv_diag: &[T],
    x0: Option<Vec<T>>,
    tol: T,
    max_iter: usize,
) -> Result<(Vec<T>, usize)> {
    let n = b.len();
    let bnorm = norm(b);
    let target = tol * bnorm;
    let mut x = x0.unwrap_or_else(|| vec![T::zero(); n]);
    let mut r: Vec<T> = {
        let ax = a.mul_vec(&x);
        b.iter().zip(&ax).map(|(b, a)| *b - *a).collect()
    };
    if norm(&r) <= target {
        return Ok((x, 0));
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut y = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == T::zero() || omega == T::zero() {
            return Err(Error::Singular(format!("BiCGSTAB breakdown at iteration {it}")));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = p[i] * inv_diag[i];
        }
        a.mul_vec_into(&y, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == T::zero() {
            return Err(Error::Singular(format!("BiCGSTAB breakdown at iteration {it}")));
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= target {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = s[i] * inv_diag[i];
        }
        a.mul_vec_into(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > T::zero() { dot(&t, &s) / tt } else { T::zero() };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) <= target {
            return Ok((x, it));
        }
    }
    let residual = (norm(&r) / bnorm).as_f64();
    Err(Error::NotConverged { iterations: max_iter, residual })
}
