//! Linear solvers for the implicit stage systems.

pub mod banded;
pub mod dct;
pub mod multigrid;
pub mod pcg;
pub mod smoother;
pub mod sparse;
pub mod system;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use banded::BandedLu;
pub use dct::{condition_bound, cosine_coefficients, DctPreconditioner};
pub use multigrid::{mg_solve, MultigridHierarchy};
pub use pcg::{pcg_solve, Preconditioner};
pub use sparse::{CsrMatrix, LinearOperator};
pub use system::StageSystem;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub initial_residual: f64,
    pub final_residual: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Multigrid,
    /// Conjugate gradients for the concentration system; the velocity
    /// system still uses multigrid.
    Pcg,
    /// Banded LU.
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub kind: SolverKind,
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            kind: SolverKind::Multigrid,
            rel_tol: 1e-10,
            max_iters: 100,
        }
    }
}

/// Solves `system · x = b`, using the incoming `x` as the initial guess.
pub fn solve_stage(system: &StageSystem, b: &[f64], x: &mut [f64], settings: &SolverSettings) -> Result<SolveStats> {
    let pcg = settings.kind == SolverKind::Pcg && matches!(system, StageSystem::Concentration { .. });
    match settings.kind {
        SolverKind::Direct => {
            let a = system.assemble()?;
            let mut r = vec![0.0; b.len()];
            a.residual(x, b, &mut r);
            let r0 = sparse::norm2(&r);
            x.copy_from_slice(&BandedLu::factor(&a)?.solve(b));
            a.residual(x, b, &mut r);
            Ok(SolveStats {
                iterations: 1,
                initial_residual: r0,
                final_residual: sparse::norm2(&r),
            })
        }
        _ if pcg => {
            let a = system.assemble()?;
            let p = DctPreconditioner::for_system(system)?;
            pcg_solve(&a, b, x, &p, settings.rel_tol, settings.max_iters)
        }
        _ => mg_solve(system, b, x, settings.rel_tol, settings.max_iters),
    }
}
