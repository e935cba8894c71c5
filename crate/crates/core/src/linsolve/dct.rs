//! Constant-coefficient preconditioner for the concentration system,
//! diagonalized by discrete cosine transforms.

use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};

use crate::error::{Error, Result};
use crate::fields::{check_positive, Grid, GridField};
use crate::linsolve::system::StageSystem;

/// Eigenvalue of the 1D Neumann second difference for cosine mode `k`.
pub fn laplacian_eigenvalue(k: usize, m: usize, h: f64) -> f64 {
    let s = (std::f64::consts::PI * k as f64 / (2.0 * m as f64)).sin();
    -4.0 / (h * h) * s * s
}

/// `B = μ₁ I − 2τ Δ_h + τ ε μ₃ Δ_h²` with `μ₁ = mean ϱ`, `μ₃ = mean 1/ϱ`.
pub struct DctPreconditioner {
    grid: Grid,
    pub mu1: f64,
    pub mu3: f64,
    /// Eigenvalues of `B` in the order of the transformed coefficients.
    eig: Vec<f64>,
    plan: Arc<dyn TransformType2And3<f64>>,
}

impl std::fmt::Debug for DctPreconditioner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DctPreconditioner")
            .field("grid", &self.grid)
            .field("mu1", &self.mu1)
            .field("mu3", &self.mu3)
            .finish()
    }
}

impl DctPreconditioner {
    pub fn new(rho: &GridField, tau: f64, eps: f64) -> Result<Self> {
        check_positive(rho)?;
        let grid = rho.grid();
        let n = grid.len() as f64;
        let mu1 = rho.iter().sum::<f64>() / n;
        let mu3 = rho.iter().map(|r| 1.0 / r).sum::<f64>() / n;
        let (m, h) = (grid.m(), grid.h());
        let lam: Vec<f64> = (0..m).map(|k| laplacian_eigenvalue(k, m, h)).collect();
        let eig = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.coords(k);
                let l = if grid.dim() == 1 { lam[i] } else { lam[i] + lam[j] };
                mu1 - 2.0 * tau * l + tau * eps * mu3 * l * l
            })
            .collect();
        let plan = DctPlanner::new().plan_dct2(m);
        Ok(Self { grid, mu1, mu3, eig, plan })
    }

    pub fn for_system(system: &StageSystem) -> Result<Self> {
        match system {
            StageSystem::Concentration { rho, tau, eps } => Self::new(rho, *tau, *eps),
            StageSystem::Velocity { .. } => Err(Error::NotApplicable(
                "the cosine-transform preconditioner only applies to the concentration system".into(),
            )),
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig
    }

    fn transform(&self, buf: &mut [f64], inverse: bool) {
        let m = self.grid.m();
        let mut line = vec![0.0; m];
        for &axis in self.grid.axes() {
            for (start, stride) in self.grid.lines(axis) {
                for i in 0..m {
                    line[i] = buf[start + i * stride];
                }
                if inverse {
                    self.plan.process_dct3(&mut line);
                } else {
                    self.plan.process_dct2(&mut line);
                }
                for i in 0..m {
                    buf[start + i * stride] = line[i];
                }
            }
        }
    }

    fn spectral(&self, x: &[f64], y: &mut [f64], f: impl Fn(f64, f64) -> f64) {
        y.copy_from_slice(x);
        self.transform(y, false);
        for (v, &e) in y.iter_mut().zip(&self.eig) {
            *v = f(*v, e);
        }
        self.transform(y, true);
        let scale = (2.0 / self.grid.m() as f64).powi(self.grid.dim() as i32);
        y.iter_mut().for_each(|v| *v *= scale);
    }

    /// `z = B⁻¹ r`.
    pub fn apply_inverse(&self, r: &[f64], z: &mut [f64]) {
        self.spectral(r, z, |v, e| v / e);
    }

    /// `y = B x`, through the same transforms.
    pub fn apply_forward(&self, x: &[f64], y: &mut [f64]) {
        self.spectral(x, y, |v, e| v * e);
    }
}

/// Amplitudes `a` of `f = Σ a_{k,l} cos(kπx) cos(lπy)` at the grid nodes,
/// indexed like the field (`k` along x).
pub fn cosine_coefficients(f: &GridField) -> GridField {
    let grid = f.grid();
    let m = grid.m();
    let plan = DctPlanner::new().plan_dct2(m);
    let mut buf = f.values().to_vec();
    let mut line = vec![0.0; m];
    for &axis in grid.axes() {
        for (start, stride) in grid.lines(axis) {
            for i in 0..m {
                line[i] = buf[start + i * stride];
            }
            plan.process_dct2(&mut line);
            for i in 0..m {
                let w = if i == 0 { 1.0 } else { 2.0 };
                buf[start + i * stride] = w * line[i] / m as f64;
            }
        }
    }
    GridField::new(grid, buf)
}

/// Bound on the condition number of `B⁻¹A`.
pub fn condition_bound(rho: &GridField) -> Result<f64> {
    check_positive(rho)?;
    let n = rho.len() as f64;
    let mu1 = rho.iter().sum::<f64>() / n;
    let mu3 = rho.iter().map(|r| 1.0 / r).sum::<f64>() / n;
    let (lo, hi) = (rho.min(), rho.max());
    let upper = (hi / mu1).max(1.0 / lo / mu3);
    let lower = (lo / mu1).min(1.0 / hi / mu3);
    Ok(upper / lower)
}
