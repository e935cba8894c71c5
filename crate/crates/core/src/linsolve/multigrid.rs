//! Geometric multigrid V-cycles on cell-centered grids.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::linsolve::smoother::{gauss_seidel_sweep, SweepOrder};
use crate::linsolve::sparse::{norm2, CsrMatrix, LinearOperator};
use crate::linsolve::system::{prolong_add, restrict, Parity, StageSystem};
use crate::linsolve::SolveStats;

/// Grids with at most this many nodes per axis are solved directly.
pub const COARSEST: usize = 4;
/// Largest number of unknowns the direct coarse solver accepts.
const MAX_DIRECT: usize = 4096;

struct Level {
    grid: Grid,
    matrix: CsrMatrix,
}

pub struct MultigridHierarchy {
    levels: Vec<Level>,
    block: usize,
    parity: Parity,
    coarse_lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    pub pre: usize,
    pub post: usize,
}

impl MultigridHierarchy {
    /// Builds the hierarchy by re-discretizing `system` on successively
    /// coarser grids.
    pub fn new(system: &StageSystem) -> Result<Self> {
        let mut levels = vec![Level {
            grid: system.grid(),
            matrix: system.assemble()?,
        }];
        let mut current = system.clone();
        while current.grid().m() > COARSEST {
            let Some(next) = current.coarsen() else { break };
            levels.push(Level {
                grid: next.grid(),
                matrix: next.assemble()?,
            });
            current = next;
        }
        let coarsest = &levels.last().unwrap().matrix;
        if coarsest.n() > MAX_DIRECT {
            return Err(Error::NotApplicable(format!(
                "multigrid cannot coarsen a grid of {} nodes per axis far enough",
                system.grid().m()
            )));
        }
        let coarse_lu = coarsest.to_dense().lu();
        Ok(Self {
            levels,
            block: system.block(),
            parity: system.parity(),
            coarse_lu,
            pre: 4,
            post: 4,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.levels[0].matrix
    }

    /// One V-cycle on the finest level.
    pub fn vcycle(&self, x: &mut [f64], b: &[f64]) -> Result<()> {
        self.cycle(0, x, b)
    }

    fn cycle(&self, level: usize, x: &mut [f64], b: &[f64]) -> Result<()> {
        let lv = &self.levels[level];
        if level + 1 == self.levels.len() {
            let sol = self
                .coarse_lu
                .solve(&DVector::from_column_slice(b))
                .ok_or(Error::ZeroDiagonal(0))?;
            x.copy_from_slice(sol.as_slice());
            return Ok(());
        }
        for _ in 0..self.pre {
            gauss_seidel_sweep(&lv.matrix, x, b, SweepOrder::Forward, self.block)?;
        }
        let mut r = vec![0.0; x.len()];
        lv.matrix.residual(x, b, &mut r);
        let rc = restrict(&r, lv.grid, self.block);
        let mut ec = vec![0.0; rc.len()];
        self.cycle(level + 1, &mut ec, &rc)?;
        prolong_add(&ec, self.levels[level + 1].grid, self.block, self.parity, x);
        for _ in 0..self.post {
            gauss_seidel_sweep(&lv.matrix, x, b, SweepOrder::Backward, self.block)?;
        }
        Ok(())
    }

    /// V-cycles until `‖b − Ax‖ ≤ rel_tol · ‖b − Ax₀‖`.
    pub fn solve(&self, b: &[f64], x: &mut [f64], rel_tol: f64, max_cycles: usize, system: &'static str) -> Result<SolveStats> {
        let a = self.matrix();
        let mut r = vec![0.0; b.len()];
        a.residual(x, b, &mut r);
        let r0 = norm2(&r);
        let floor = residual_floor(a, x, b);
        let mut res = r0;
        let mut cycles = 0;
        while res > rel_tol * r0 && res > floor {
            if cycles == max_cycles || !res.is_finite() {
                return Err(Error::SolverDivergence {
                    system,
                    iterations: cycles,
                    residual: res / r0,
                });
            }
            self.vcycle(x, b)?;
            cycles += 1;
            a.residual(x, b, &mut r);
            res = norm2(&r);
        }
        Ok(SolveStats {
            iterations: cycles,
            initial_residual: r0,
            final_residual: res,
        })
    }
}

/// Residual norm below which rounding dominates, so that tight relative
/// tolerances on warm-started solves still terminate.
pub(crate) fn residual_floor(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut scale = 0.0f64;
    for r in 0..a.n() {
        let (cols, vals) = a.row(r);
        let s: f64 = cols.iter().zip(vals).map(|(&c, &v)| (v * x[c]).abs()).sum();
        scale += (s + b[r].abs()).powi(2);
    }
    8.0 * f64::EPSILON * scale.sqrt()
}

/// Solves `system` with V-cycles starting from `x`.
pub fn mg_solve(system: &StageSystem, b: &[f64], x: &mut [f64], rel_tol: f64, max_cycles: usize) -> Result<SolveStats> {
    MultigridHierarchy::new(system)?.solve(b, x, rel_tol, max_cycles, system.name())
}

/// Dense direct solve, used as a reference by tests and benchmarks.
pub fn dense_solve(a: &CsrMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let d: DMatrix<f64> = a.to_dense();
    d.lu().solve(&DVector::from_column_slice(b)).map(|v| v.as_slice().to_vec())
}
