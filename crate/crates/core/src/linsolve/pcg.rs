//! Preconditioned conjugate gradients.

use crate::error::{Error, Result};
use crate::linsolve::dct::DctPreconditioner;
use crate::linsolve::sparse::{dot, norm2, LinearOperator};
use crate::linsolve::SolveStats;

pub trait Preconditioner {
    /// `z = P⁻¹ r`.
    fn precondition(&self, r: &[f64], z: &mut [f64]);
}

impl Preconditioner for DctPreconditioner {
    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        self.apply_inverse(r, z);
    }
}

/// Identity preconditioner.
pub struct Unpreconditioned;

impl Preconditioner for Unpreconditioned {
    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Solves the SPD system `A x = b` from the initial guess in `x`, stopping
/// at `‖b − Ax‖ ≤ rel_tol · ‖b − Ax₀‖`.
pub fn pcg_solve(
    a: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    precond: &dyn Preconditioner,
    rel_tol: f64,
    max_iters: usize,
) -> Result<SolveStats> {
    let n = b.len();
    let mut r = vec![0.0; n];
    a.residual(x, b, &mut r);
    let r0 = norm2(&r);
    let floor = 8.0 * f64::EPSILON * norm2(b);
    let mut res = r0;
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut rz = 0.0;
    let mut iters = 0;
    while res > rel_tol * r0 && res > floor {
        if iters == max_iters || !res.is_finite() {
            return Err(Error::SolverDivergence {
                system: "concentration",
                iterations: iters,
                residual: res / r0,
            });
        }
        precond.precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        if iters == 0 {
            p.copy_from_slice(&z);
        } else {
            let beta = rz_new / rz;
            for (pi, &zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
        rz = rz_new;
        a.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iters += 1;
        res = norm2(&r);
    }
    // report the true residual rather than the recursively updated one
    a.residual(x, b, &mut r);
    Ok(SolveStats {
        iterations: iters,
        initial_residual: r0,
        final_residual: norm2(&r),
    })
}
