use alloc::vec::Vec;

use super::CsrMatrix;
use crate::error::{Error, Result};

/// Banded LU factorization without pivoting.
///
/// On M-matrices every multiplier is nonpositive and every entry of `U`
/// off the diagonal stays nonpositive, so forward and back substitution with
/// a nonnegative right-hand side only ever add nonnegative terms. Solutions
/// therefore carry small componentwise relative error, even where they are
/// many orders of magnitude below their maximum.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    lower: usize,
    upper: usize,
    width: usize,
    band: Vec<f64>,
}

impl BandLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n_rows();
        let (lower, upper) = a.bandwidths();
        let width = lower + upper + 1;
        let mut band = alloc::vec![0.0; n * width];
        for i in 0..n {
            for (c, v) in a.row(i) {
                band[i * width + (c + lower - i)] = v;
            }
        }
        let idx = |i: usize, j: usize| i * width + (j + lower - i);
        for k in 0..n {
            let pivot = band[idx(k, k)];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularSystem(k));
            }
            let last_row = (k + lower).min(n - 1);
            let last_col = (k + upper).min(n - 1);
            for i in k + 1..=last_row {
                let ik = idx(i, k);
                if band[ik] == 0.0 {
                    continue;
                }
                let l = band[ik] / pivot;
                band[ik] = l;
                let (row_k, row_i) = (idx(k, k + 1), idx(i, k + 1));
                let len = last_col - k;
                for t in 0..len {
                    band[row_i + t] -= l * band[row_k + t];
                }
            }
        }
        Ok(BandLu { n, lower, upper, width, band })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.lower, self.upper)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        let w = self.width;
        for i in 0..n {
            let first = i.saturating_sub(self.lower);
            let base = i * w + self.lower - i;
            let mut s = x[i];
            for j in first..i {
                s -= self.band[base + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let last = (i + self.upper).min(n - 1);
            let base = i * w + self.lower - i;
            let mut s = x[i];
            for j in i + 1..=last {
                s -= self.band[base + j] * x[j];
            }
            x[i] = s / self.band[base + i];
        }
    }
}
