//! Banded LU factorization without pivoting, for the 1D stage systems.

use crate::error::{Error, Result};
use crate::linsolve::sparse::CsrMatrix;

#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    bw: usize,
    /// Row `i`, column `j` lives at `i * width + (j + bw - i)`.
    data: Vec<f64>,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let bw = a.bandwidth();
        let width = 2 * bw + 1;
        let mut data = vec![0.0; n * width];
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                data[r * width + c + bw - r] = v;
            }
        }
        let at = |i: usize, j: usize| i * width + j + bw - i;
        for k in 0..n {
            let pivot = data[at(k, k)];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::ZeroDiagonal(k));
            }
            for i in k + 1..n.min(k + bw + 1) {
                let l = data[at(i, k)] / pivot;
                if l == 0.0 {
                    continue;
                }
                data[at(i, k)] = l;
                for j in k + 1..n.min(k + bw + 1) {
                    data[at(i, j)] -= l * data[at(k, j)];
                }
            }
        }
        Ok(Self { n, bw, data })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let width = 2 * bw + 1;
        let at = |i: usize, j: usize| i * width + j + bw - i;
        let mut x = b.to_vec();
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                x[i] -= self.data[at(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n.min(i + bw + 1) {
                x[i] -= self.data[at(i, j)] * x[j];
            }
            x[i] /= self.data[at(i, i)];
        }
        x
    }
}
