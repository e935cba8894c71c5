//! The two linear systems solved in every implicit stage, and the grid
//! transfers used to build coarse versions of them.

use crate::error::Result;
use crate::fields::{check_positive, Grid, GridField};
use crate::linsolve::sparse::CsrMatrix;
use crate::ops::{neumann_laplacian_csr, viscous_block_csr};

/// Stage system for the concentration or for the velocity.
#[derive(Clone, Debug, PartialEq)]
pub enum StageSystem {
    /// `D(ϱ) − τ M₊ + τ ε Δ_h D(ϱ)⁻¹ Δ_h`, with `M₊ = 2Δ_h`.
    Concentration { rho: GridField, tau: f64, eps: f64 },
    /// `D(ϱ, ϱ) − τ ℒ₄`, velocity components interleaved per node.
    Velocity { rho: GridField, tau: f64, nu: f64, lambda: f64 },
}

/// How a correction extends past the wall when interpolated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// Homogeneous Neumann data.
    Even,
    /// Homogeneous Dirichlet data.
    Odd,
}

impl StageSystem {
    pub fn rho(&self) -> &GridField {
        match self {
            StageSystem::Concentration { rho, .. } | StageSystem::Velocity { rho, .. } => rho,
        }
    }

    pub fn grid(&self) -> Grid {
        self.rho().grid()
    }

    pub fn tau(&self) -> f64 {
        match self {
            StageSystem::Concentration { tau, .. } | StageSystem::Velocity { tau, .. } => *tau,
        }
    }

    /// Unknowns per node.
    pub fn block(&self) -> usize {
        match self {
            StageSystem::Concentration { .. } => 1,
            StageSystem::Velocity { .. } => self.grid().dim(),
        }
    }

    pub fn size(&self) -> usize {
        self.block() * self.grid().len()
    }

    pub fn name(&self) -> &'static str {
        match self {
            StageSystem::Concentration { .. } => "concentration",
            StageSystem::Velocity { .. } => "velocity",
        }
    }

    pub fn parity(&self) -> Parity {
        match self {
            StageSystem::Concentration { .. } => Parity::Even,
            StageSystem::Velocity { .. } => Parity::Odd,
        }
    }

    pub fn assemble(&self) -> Result<CsrMatrix> {
        let rho = self.rho();
        check_positive(rho)?;
        let grid = self.grid();
        match self {
            StageSystem::Concentration { tau, eps, .. } => {
                let lap = neumann_laplacian_csr(grid);
                let inv_rho: Vec<f64> = rho.iter().map(|r| 1.0 / r).collect();
                let bi = lap.mul(&lap.scale_rows(&inv_rho));
                let a = CsrMatrix::from_diagonal(rho).add(1.0, &lap, -2.0 * tau);
                Ok(a.add(1.0, &bi, tau * eps))
            }
            StageSystem::Velocity { tau, nu, lambda, .. } => {
                let dim = grid.dim();
                let diag: Vec<f64> = rho.iter().flat_map(|&r| std::iter::repeat(r).take(dim)).collect();
                let visc = viscous_block_csr(grid, *nu, *lambda);
                Ok(CsrMatrix::from_diagonal(&diag).add(1.0, &visc, -tau))
            }
        }
    }

    /// The same system re-discretized on the next coarser grid, with `ϱ`
    /// restricted by cell averaging.
    pub fn coarsen(&self) -> Option<StageSystem> {
        let coarse = self.grid().coarsen()?;
        let rho = GridField::new(coarse, restrict(self.rho(), self.grid(), 1));
        Some(match self {
            StageSystem::Concentration { tau, eps, .. } => StageSystem::Concentration { rho, tau: *tau, eps: *eps },
            StageSystem::Velocity { tau, nu, lambda, .. } => StageSystem::Velocity {
                rho,
                tau: *tau,
                nu: *nu,
                lambda: *lambda,
            },
        })
    }
}

/// Average over the `2^dim` fine cells of each coarse cell, per component.
pub fn restrict(fine: &[f64], fine_grid: Grid, block: usize) -> Vec<f64> {
    let coarse = fine_grid.coarsen().expect("grid cannot be coarsened");
    let mut out = vec![0.0; block * coarse.len()];
    let m = coarse.m();
    if fine_grid.dim() == 1 {
        for i in 0..m {
            for b in 0..block {
                out[block * i + b] = 0.5 * (fine[block * 2 * i + b] + fine[block * (2 * i + 1) + b]);
            }
        }
        return out;
    }
    for i in 0..m {
        for j in 0..m {
            let kc = coarse.index(i, j);
            for b in 0..block {
                let mut s = 0.0;
                for (di, dj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    s += fine[block * fine_grid.index(2 * i + di, 2 * j + dj) + b];
                }
                out[block * kc + b] = 0.25 * s;
            }
        }
    }
    out
}

/// Adds the (bi)linear interpolation of a coarse correction to `fine`.
pub fn prolong_add(coarse: &[f64], coarse_grid: Grid, block: usize, parity: Parity, fine: &mut [f64]) {
    let m = coarse_grid.m() as isize;
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    // value at a possibly out-of-range coarse index, by reflection
    let at = |i: isize, j: isize, b: usize| -> f64 {
        let (mut s, mut ii, mut jj) = (1.0, i, j);
        if ii < 0 || ii >= m {
            s *= sign;
            ii = ii.clamp(0, m - 1);
        }
        if jj < 0 || jj >= m {
            s *= sign;
            jj = jj.clamp(0, m - 1);
        }
        let k = if coarse_grid.dim() == 1 {
            ii as usize
        } else {
            coarse_grid.index(ii as usize, jj as usize)
        };
        s * coarse[block * k + b]
    };
    if coarse_grid.dim() == 1 {
        for i in 0..m {
            for (a, di) in [(0, -1), (1, 1)] {
                let f = (2 * i + a) as usize;
                for b in 0..block {
                    fine[block * f + b] += 0.75 * at(i, 0, b) + 0.25 * at(i + di, 0, b);
                }
            }
        }
        return;
    }
    let fine_grid = Grid::new(2, 2 * coarse_grid.m()).expect("valid fine grid");
    for i in 0..m {
        for j in 0..m {
            for (a, di) in [(0, -1), (1, 1)] {
                for (c, dj) in [(0, -1), (1, 1)] {
                    let f = fine_grid.index((2 * i + a) as usize, (2 * j + c) as usize);
                    for b in 0..block {
                        fine[block * f + b] += 0.5625 * at(i, j, b)
                            + 0.1875 * (at(i + di, j, b) + at(i, j + dj, b))
                            + 0.0625 * at(i + di, j + dj, b);
                    }
                }
            }
        }
    }
}
