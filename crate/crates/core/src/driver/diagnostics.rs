use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{integral, PhysParams, State};

/// One line of the diagnostics file, written after every accepted step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub dt: f64,
    pub cfl: f64,
    pub err_rho: f64,
    pub err_q: f64,
    pub cmin: f64,
    pub cmax: f64,
    pub cs: f64,
    /// Mean solver iterations per concentration solve in the step.
    pub mg_iters_c: f64,
    /// Mean solver iterations per velocity solve in the step.
    pub mg_iters_v: f64,
    pub energy: f64,
}

pub const CSV_COLUMNS: [&str; 11] = [
    "t", "dt", "cfl", "err_rho", "err_q", "cmin", "cmax", "cs", "mg_iters_c", "mg_iters_v", "energy",
];

/// Append-only CSV sink that flushes every row.
pub struct CsvSink {
    writer: csv::Writer<File>,
}

impl CsvSink {
    pub fn create(path: &Path) -> Result<Self> {
        let writer = csv::Writer::from_path(path).map_err(csv_error)?;
        Ok(Self { writer })
    }

    pub fn write(&mut self, row: &DiagnosticsRow) -> Result<()> {
        self.writer.serialize(row).map_err(csv_error)?;
        self.writer.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn read_csv(path: &Path) -> Result<Vec<DiagnosticsRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    reader.deserialize().map(|r| r.map_err(csv_error)).collect()
}

/// Plain sums of `ϱ` and `Q`, the reference for the conservation errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Totals {
    pub rho: f64,
    pub q: f64,
}

impl Totals {
    pub fn of(state: &State) -> Self {
        Self { rho: integral(&state.rho), q: integral(&state.q) }
    }
}

/// Discrete total energy: kinetic, internal, mixing, interfacial and
/// gravitational potential, integrated with cell volumes.
pub fn energy(state: &State, params: &PhysParams) -> Result<f64> {
    let (v, c) = state.primitives()?;
    let grid = state.grid();
    let vol = grid.h().powi(grid.dim() as i32);
    let gamma = params.gamma;
    let mut bulk = 0.0;
    for k in 0..grid.len() {
        let rho = state.rho[k];
        let speed2: f64 = v.iter().map(|va| va[k] * va[k]).sum();
        let psi = 0.25 * (c[k] * c[k] - 1.0).powi(2);
        let (x, y) = grid.position(k);
        let height = if grid.dim() == 1 { x } else { y };
        bulk += 0.5 * rho * speed2 + rho.powf(gamma) / (gamma - 1.0) + rho * psi - rho * params.g * height;
    }
    let mut gradient = 0.0;
    for &axis in grid.axes() {
        for (start, stride) in grid.lines(axis) {
            for i in 0..grid.m() - 1 {
                let d = (c[start + (i + 1) * stride] - c[start + i * stride]) / grid.h();
                gradient += d * d;
            }
        }
    }
    Ok(vol * (bulk + 0.5 * params.eps * gradient))
}

/// `(1/N) Σ_k Σ_nodes |u_k − u_k^exact|` over all conserved components.
pub fn global_error(numerical: &State, exact: &State) -> f64 {
    let n = numerical.grid().len() as f64;
    numerical
        .components()
        .zip(exact.components())
        .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .sum::<f64>()
        / n
}
