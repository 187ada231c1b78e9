use alloc::vec::Vec;

use super::{max_abs, CsrMatrix};
use crate::error::{Error, Result};

/// Incomplete LU with the sparsity pattern of the matrix.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    n: usize,
    diag: Vec<usize>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.n_rows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(a.nnz());
        let mut values = Vec::with_capacity(a.nnz());
        row_ptr.push(0);
        for i in 0..n {
            for (c, v) in a.row(i) {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        let mut diag = alloc::vec![usize::MAX; n];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                if col_idx[p] == i {
                    diag[i] = p;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::SingularSystem(i));
            }
        }
        let mut pos = alloc::vec![usize::MAX; n];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[p]] = p;
            }
            for p in row_ptr[i]..diag[i] {
                let k = col_idx[p];
                let pivot = values[diag[k]];
                if pivot == 0.0 {
                    return Err(Error::SingularSystem(k));
                }
                let l = values[p] / pivot;
                values[p] = l;
                for q in diag[k] + 1..row_ptr[k + 1] {
                    let j = col_idx[q];
                    if pos[j] != usize::MAX {
                        values[pos[j]] -= l * values[q];
                    }
                }
            }
            for p in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[p]] = usize::MAX;
            }
        }
        Ok(Ilu0 { n, diag, row_ptr, col_idx, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn apply(&self, x: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let mut s = x[i];
            for p in self.row_ptr[i]..self.diag[i] {
                s -= self.values[p] * x[self.col_idx[p]];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for p in self.diag[i] + 1..self.row_ptr[i + 1] {
                s -= self.values[p] * x[self.col_idx[p]];
            }
            x[i] = s / self.values[self.diag[i]];
        }
    }
}

#[derive(Clone, Debug)]
pub struct IterativeOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final true residual `max |b - A x|`.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Right-preconditioned BiCGSTAB. Stops once `max |b - A x| <= abs_tol`.
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: Option<&Ilu0>,
    abs_tol: f64,
    max_iter: usize,
) -> Result<IterativeOutcome> {
    let n = a.n_rows();
    let mut x = x0.map_or_else(|| alloc::vec![0.0; n], |v| v.to_vec());
    let residual_of = |x: &[f64]| -> Vec<f64> {
        let ax = a.mul_vec(x);
        b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
    };
    let precondition = |v: &[f64]| -> Vec<f64> {
        let mut out = v.to_vec();
        if let Some(m) = precond {
            m.apply(&mut out);
        }
        out
    };
    let mut r = residual_of(&x);
    let mut iterations = 0;
    if max_abs(&r) <= abs_tol {
        let residual = max_abs(&r);
        return Ok(IterativeOutcome { x, iterations, residual });
    }
    'restart: while iterations < max_iter {
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let mut v = alloc::vec![0.0; n];
        let mut p = alloc::vec![0.0; n];
        while iterations < max_iter {
            iterations += 1;
            let rho_new = dot(&r_hat, &r);
            if rho_new == 0.0 || omega == 0.0 {
                r = residual_of(&x);
                continue 'restart;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            let p_hat = precondition(&p);
            a.mul_vec_into(&p_hat, &mut v);
            let denom = dot(&r_hat, &v);
            if denom == 0.0 {
                r = residual_of(&x);
                continue 'restart;
            }
            alpha = rho / denom;
            let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
            if max_abs(&s) <= abs_tol {
                for i in 0..n {
                    x[i] += alpha * p_hat[i];
                }
                r = residual_of(&x);
                if max_abs(&r) <= abs_tol {
                    break 'restart;
                }
                continue 'restart;
            }
            let s_hat = precondition(&s);
            let t = a.mul_vec(&s_hat);
            let tt = dot(&t, &t);
            omega = if tt == 0.0 { 0.0 } else { dot(&t, &s) / tt };
            for i in 0..n {
                x[i] += alpha * p_hat[i] + omega * s_hat[i];
                r[i] = s[i] - omega * t[i];
            }
            if max_abs(&r) <= abs_tol {
                // Recurrence residuals drift; confirm against the true one.
                r = residual_of(&x);
                if max_abs(&r) <= abs_tol {
                    break 'restart;
                }
                continue 'restart;
            }
        }
    }
    let residual = max_abs(&residual_of(&x));
    if residual <= abs_tol {
        Ok(IterativeOutcome { x, iterations, residual })
    } else {
        Err(Error::ConvergenceFailure { residual, iterations })
    }
}
