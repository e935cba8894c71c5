//! Reference experiments: convergence order, the 1D stability sweep, solver
//! iteration statistics and the early spinodal spectrum.

use serde::Serialize;

use crate::driver::config::{Case, Method, RunConfig};
use crate::driver::diagnostics::global_error;
use crate::driver::run::run;
use crate::driver::spinodal::{mode_spectrum, predict_spinodal_mode, ModeSpectrum, SpinodalPrediction};
use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::linsolve::SolverKind;
use crate::manufactured::exact_state;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderRow {
    pub m: usize,
    pub error: f64,
    /// `e_{M/2} / e_M`, absent on the coarsest grid.
    pub ratio: Option<f64>,
}

/// Global errors of the manufactured problem on each grid in `ms`.
pub fn order_test(method: Method, ms: &[usize], cfl: f64, t_final: f64) -> Result<Vec<OrderRow>> {
    let mut rows: Vec<OrderRow> = Vec::with_capacity(ms.len());
    for &m in ms {
        let mut cfg = RunConfig::for_case(Case::Manufactured, m);
        cfg.scheme = method;
        cfg.cfl = cfl;
        cfg.cfl_max = None;
        cfg.t_final = t_final;
        cfg.rel_tol = 1e-12;
        cfg.max_iters = 200;
        let out = run(&cfg)?;
        let error = global_error(&out.state, &exact_state(Grid::new(2, m)?, t_final));
        let ratio = rows.last().map(|r| r.error / error);
        rows.push(OrderRow { m, error, ratio });
    }
    Ok(rows)
}

/// Least-squares slope of `log e_M` against `log M`.
pub fn fitted_slope(rows: &[OrderRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.m as f64).ln(), r.error.ln())).collect();
    let n = pts.len() as f64;
    let (xm, ym) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum StabilityStatus {
    Completed,
    /// Non-finite values or `|U|` above the blow-up bound.
    BlewUp { t: f64 },
    /// Loss of positive density or a solver failure stopped the run.
    Rejected { t: f64, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityOutcome {
    pub method: Method,
    pub m: usize,
    pub cfl: Option<f64>,
    pub dt: Option<f64>,
    pub t_final: f64,
    #[serde(flatten)]
    pub status: StabilityStatus,
}

impl StabilityOutcome {
    pub fn completed(&self) -> bool {
        self.status == StabilityStatus::Completed
    }

    pub fn blew_up(&self) -> bool {
        matches!(self.status, StabilityStatus::BlewUp { .. })
    }

    /// Time at which the run stopped early.
    pub fn stopped_at(&self) -> Option<f64> {
        match self.status {
            StabilityStatus::Completed => None,
            StabilityStatus::BlewUp { t } | StabilityStatus::Rejected { t, .. } => Some(t),
        }
    }
}

/// The 1D stability case without step adaptation. Only blow-up, loss of
/// positive density or a solver failure ends the run; the concentration
/// bound is off. A fixed `dt` overrides `cfl`.
pub fn stability_run(method: Method, m: usize, cfl: f64, dt: Option<f64>, t_final: f64) -> Result<StabilityOutcome> {
    let mut cfg = RunConfig::for_case(Case::Stability, m);
    cfg.scheme = method;
    cfg.cfl = cfl;
    cfg.dt = dt;
    cfg.adaptive = false;
    cfg.c_threshold = f64::INFINITY;
    cfg.t_final = t_final;
    cfg.reference_snapshots = false;
    // banded elimination is exact and handles any M
    cfg.solver = SolverKind::Direct;
    let status = match run(&cfg) {
        Ok(_) => StabilityStatus::Completed,
        Err(Error::RunFailed { t, source }) => match source.root() {
            Error::NonFinite { .. } | Error::BlowUp { .. } => StabilityStatus::BlewUp { t },
            e @ (Error::NonPositiveDensity { .. }
            | Error::SolverDivergence { .. }
            | Error::StepRejectedTooManyTimes { .. }) => StabilityStatus::Rejected { t, reason: e.to_string() },
            _ => return Err(Error::RunFailed { t, source }),
        },
        Err(e) => return Err(e),
    };
    Ok(StabilityOutcome { method, m, cfl: dt.is_none().then_some(cfl), dt, t_final, status })
}

/// The three parts of the stability experiment:
/// explicit Euler with `Δt = Δx³` at M = 400 up to t = 1e-6, both implicit
/// schemes at CFL 1 and M = 2000 up to t = 0.1, and both at CFL 1.1 and
/// M = 100 up to t = 0.3.
pub fn stability_sweep() -> Result<Vec<StabilityOutcome>> {
    let h = 1.0 / 400.0;
    let mut out = vec![stability_run(Method::ExplicitEuler, 400, 1.0, Some(h * h * h), 1e-6)?];
    for method in [Method::EeIe, Method::Dirksa] {
        out.push(stability_run(method, 2000, 1.0, None, 0.1)?);
    }
    for method in [Method::EeIe, Method::Dirksa] {
        out.push(stability_run(method, 100, 1.1, None, 0.3)?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub m: usize,
    pub nu: f64,
    pub eps: f64,
    pub solver: SolverKind,
    pub steps: usize,
    /// Mean iterations per concentration solve.
    pub mean_c: f64,
    /// Mean iterations per velocity solve.
    pub mean_v: f64,
}

/// Test 1 with `λ = ν/10` at solver tolerance 1e-6.
pub fn solver_bench(m: usize, nu: f64, eps: f64, solver: SolverKind, t_final: f64) -> Result<BenchRow> {
    let mut cfg = RunConfig::for_case(Case::Test1, m);
    cfg.nu = nu;
    cfg.lambda = nu / 10.0;
    cfg.eps = eps;
    cfg.solver = solver;
    cfg.rel_tol = 1e-6;
    cfg.t_final = t_final;
    cfg.reference_snapshots = false;
    let out = run(&cfg)?;
    Ok(BenchRow {
        m,
        nu,
        eps,
        solver,
        steps: out.history.len(),
        mean_c: out.solver.mean_concentration_iters(),
        mean_v: out.solver.mean_velocity_iters(),
    })
}

/// Test 3 with the given `ε`, stopped at `t_final` while still in the linear
/// phase.
pub fn spinodal_spectrum(
    m: usize,
    eps: f64,
    cfl: f64,
    t_final: f64,
    seed: u64,
) -> Result<(ModeSpectrum, SpinodalPrediction)> {
    let mut cfg = RunConfig::for_case(Case::Test3, m);
    cfg.eps = eps;
    cfg.cfl = cfl;
    cfg.t_final = t_final;
    cfg.seed = seed;
    cfg.reference_snapshots = false;
    let out = run(&cfg)?;
    let c = out.state.concentration()?;
    Ok((mode_spectrum(&c), predict_spinodal_mode(cfg.c0, eps, 2)?))
}
