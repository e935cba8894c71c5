use std::path::PathBuf;

use crate::convection::char_speed;
use crate::driver::cases::{forcing, initial_state};
use crate::driver::config::RunConfig;
use crate::driver::diagnostics::{energy, CsvSink, DiagnosticsRow, Totals};
use crate::driver::snapshot::write_snapshot;
use crate::driver::timestep::{select_dt, CflDecision, CflPolicy};
use crate::error::{Error, Result};
use crate::fields::State;
use crate::imex::{explicit_euler_step, tableau, Chns, StepStats};

/// Times at which snapshots are always written when they fall inside the run.
pub const REFERENCE_TIMES: [f64; 16] = [
    0.0, 0.01, 0.02, 0.03, 0.04, 0.1, 0.14, 0.23, 0.24, 0.28, 0.29, 0.3, 0.5, 0.6, 0.7, 1.0,
];

/// Solver work summed over a run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolverTotals {
    pub concentration_solves: usize,
    pub concentration_iters: usize,
    pub velocity_solves: usize,
    pub velocity_iters: usize,
}

impl SolverTotals {
    fn add(&mut self, s: &StepStats) {
        self.concentration_solves += s.concentration_iters.len();
        self.concentration_iters += s.total_concentration();
        self.velocity_solves += s.velocity_iters.len();
        self.velocity_iters += s.total_velocity();
    }

    pub fn mean_concentration_iters(&self) -> f64 {
        self.concentration_iters as f64 / self.concentration_solves.max(1) as f64
    }

    pub fn mean_velocity_iters(&self) -> f64 {
        self.velocity_iters as f64 / self.velocity_solves.max(1) as f64
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub t: f64,
    pub state: State,
    pub initial: State,
    /// One row per accepted step.
    pub history: Vec<DiagnosticsRow>,
    pub rejections: usize,
    pub solver: SolverTotals,
    pub snapshots: Vec<PathBuf>,
}

/// Runs the configured case from its initial condition.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    run_from(cfg, initial_state(cfg)?, &mut |_, _| {})
}

fn mean(v: &[usize]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<usize>() as f64 / v.len() as f64
    }
}

/// Runs from `initial`, calling `observe(t, state)` at t = 0 and after every
/// accepted step.
pub fn run_from(cfg: &RunConfig, initial: State, observe: &mut dyn FnMut(f64, &State)) -> Result<RunOutcome> {
    cfg.validate()?;
    let params = cfg.params();
    let forcing = forcing(cfg);
    let mut chns = Chns::new(params, cfg.solver_settings());
    if let Some(f) = forcing.as_deref() {
        chns = chns.with_forcing(f);
    }
    let pair = cfg.scheme.scheme().map(tableau);
    let policy = CflPolicy {
        c_threshold: cfg.c_threshold,
        cfl_max: cfg.cfl_max(),
        backoff: cfg.dt_backoff,
        recovery: cfg.dt_recovery,
    };
    let adaptive = cfg.adaptive && cfg.dt.is_none();

    let totals0 = Totals::of(&initial);
    let mut state = initial.clone();
    let mut t = 0.0;
    let mut cfl = cfg.cfl;
    let mut history = Vec::new();
    let mut rejections = 0;
    let mut solver = SolverTotals::default();
    let mut snapshots = Vec::new();

    let echo = cfg.to_toml_string();
    let mut schedule: Vec<f64> = Vec::new();
    if cfg.reference_snapshots {
        schedule.extend(REFERENCE_TIMES.iter().copied().filter(|&s| s <= cfg.t_final));
    }
    if let Some(every) = cfg.output_every {
        let n = (cfg.t_final / every).floor() as usize;
        schedule.extend((0..=n).map(|k| k as f64 * every));
    }
    schedule.push(cfg.t_final);
    schedule.sort_by(f64::total_cmp);
    schedule.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * cfg.t_final.max(1.0));
    let mut next_snapshot = 0;
    let mut sink = None;
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
        sink = Some(CsvSink::create(&dir.join("diagnostics.csv"))?);
    }
    let save = |t: f64, state: &State, next: &mut usize, snapshots: &mut Vec<PathBuf>| -> Result<()> {
        let Some(dir) = &cfg.output_dir else { return Ok(()) };
        let mut due = false;
        while *next < schedule.len() && schedule[*next] <= t * (1.0 + 1e-12) + 1e-15 {
            *next += 1;
            due = true;
        }
        if due {
            let stem = format!("snap_{:04}", snapshots.len());
            snapshots.push(write_snapshot(dir, &stem, t, state, &echo, cfg.seed)?);
        }
        Ok(())
    };
    save(t, &state, &mut next_snapshot, &mut snapshots)?;
    observe(t, &state);

    while t < cfg.t_final {
        let mut retries = 0;
        let (next, dt, step_cfl, stats, clamped) = loop {
            let mut dt = match cfg.dt {
                Some(dt) => dt,
                None => select_dt(&state, cfl, params.gamma).map_err(|e| failed(t, e))?,
            };
            let clamped = t + dt >= cfg.t_final;
            if clamped {
                dt = cfg.t_final - t;
            }
            let attempt = match &pair {
                Some(pair) => chns.step(&state, t, dt, pair).map(|o| (o.state, o.stats)),
                None => explicit_euler_step(&state, t, dt, &params, chns.forcing).map(|s| (s, StepStats::default())),
            };
            let checked = attempt.and_then(|(next, stats)| {
                next.check_finite()?;
                let max_abs = next.max_abs();
                if max_abs > cfg.blowup {
                    return Err(Error::BlowUp { max_abs });
                }
                next.check_density()?;
                Ok((next, stats))
            });
            let violation = match checked {
                Ok((next, stats)) => {
                    let max_c = next.concentration()?.max_abs();
                    match policy.adapt(max_c, cfl) {
                        CflDecision::Accept { next_cfl } => {
                            let used = match cfg.dt {
                                Some(_) => dt * char_speed(&state, params.gamma)? / state.grid().h(),
                                None => cfl,
                            };
                            if adaptive {
                                cfl = next_cfl;
                            }
                            break (next, dt, used, stats, clamped);
                        }
                        CflDecision::Reject { .. } => Error::BoundViolation { max_abs_c: max_c, threshold: cfg.c_threshold },
                    }
                }
                Err(e) if e.is_recoverable() => e,
                Err(e) => return Err(failed(t, e)),
            };
            if !adaptive {
                return Err(failed(t, violation));
            }
            retries += 1;
            rejections += 1;
            if retries > cfg.max_retries {
                return Err(failed(t, Error::StepRejectedTooManyTimes { t, retries: retries - 1 }));
            }
            cfl *= cfg.dt_backoff;
        };
        t = if clamped { cfg.t_final } else { t + dt };
        state = next;
        solver.add(&stats);
        let c = state.concentration()?;
        let totals = Totals::of(&state);
        let row = DiagnosticsRow {
            t,
            dt,
            cfl: step_cfl,
            err_rho: totals.rho - totals0.rho,
            err_q: totals.q - totals0.q,
            cmin: c.min(),
            cmax: c.max(),
            cs: char_speed(&state, params.gamma)?,
            mg_iters_c: mean(&stats.concentration_iters),
            mg_iters_v: mean(&stats.velocity_iters),
            energy: energy(&state, &params)?,
        };
        if let Some(sink) = sink.as_mut() {
            sink.write(&row)?;
        }
        history.push(row);
        save(t, &state, &mut next_snapshot, &mut snapshots)?;
        observe(t, &state);
    }
    Ok(RunOutcome { t, state, initial, history, rejections, solver, snapshots })
}

fn failed(t: f64, e: Error) -> Error {
    match e {
        e @ Error::RunFailed { .. } => e,
        e => Error::RunFailed { t, source: Box::new(e) },
    }
}
