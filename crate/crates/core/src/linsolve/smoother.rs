//! Lexicographic (block) Gauss-Seidel sweeps on CSR matrices.

use crate::error::{Error, Result};
use crate::linsolve::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepOrder {
    Forward,
    Backward,
}

/// One Gauss-Seidel sweep over unknowns grouped in blocks of `block`
/// consecutive rows (1 or 2), solving each block collectively.
pub fn gauss_seidel_sweep(a: &CsrMatrix, x: &mut [f64], b: &[f64], order: SweepOrder, block: usize) -> Result<()> {
    let nodes = a.n() / block;
    let mut visit = |node: usize| -> Result<()> {
        let r0 = node * block;
        match block {
            1 => {
                let (cols, vals) = a.row(r0);
                let mut diag = 0.0;
                let mut s = b[r0];
                for (&c, &v) in cols.iter().zip(vals) {
                    if c == r0 {
                        diag = v;
                    } else {
                        s -= v * x[c];
                    }
                }
                if diag == 0.0 {
                    return Err(Error::ZeroDiagonal(r0));
                }
                x[r0] = s / diag;
            }
            2 => {
                let mut m = [[0.0; 2]; 2];
                let mut s = [b[r0], b[r0 + 1]];
                for (p, sp) in s.iter_mut().enumerate() {
                    let (cols, vals) = a.row(r0 + p);
                    for (&c, &v) in cols.iter().zip(vals) {
                        if c == r0 || c == r0 + 1 {
                            m[p][c - r0] = v;
                        } else {
                            *sp -= v * x[c];
                        }
                    }
                }
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                if det == 0.0 {
                    return Err(Error::ZeroDiagonal(r0));
                }
                x[r0] = (m[1][1] * s[0] - m[0][1] * s[1]) / det;
                x[r0 + 1] = (m[0][0] * s[1] - m[1][0] * s[0]) / det;
            }
            _ => unreachable!("block size {block} is not supported"),
        }
        Ok(())
    };
    match order {
        SweepOrder::Forward => (0..nodes).try_for_each(&mut visit),
        SweepOrder::Backward => (0..nodes).rev().try_for_each(&mut visit),
    }
}
