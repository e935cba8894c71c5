use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::driver::config::{Case, RunConfig};
use crate::error::Result;
use crate::fields::{Grid, GridField, State};
use crate::manufactured::{exact_state, ManufacturedForcing};
use crate::semidisc::Forcing;

/// Initial state of the configured case.
pub fn initial_state(cfg: &RunConfig) -> Result<State> {
    let grid = Grid::new(cfg.dim, cfg.m)?;
    let rho = |x: f64, y: f64| 0.1 * (2.0 * PI * x).cos() * (PI * y).cos() + 1.25;
    Ok(match cfg.case {
        Case::Test1 | Case::Test2 => {
            let shift = if cfg.case == Case::Test2 { 0.75 } else { 0.0 };
            let v = [
                grid.sample(|x, y| (PI * x).sin() * (PI * y).sin()),
                grid.sample(|x, y| (PI * x).sin() * (2.0 * PI * y).sin()),
            ];
            let c = grid.sample(|x, y| shift + 0.1 * (PI * x).cos() * (PI * y).cos());
            State::from_primitives(grid.sample(rho), &v, &c)
        }
        Case::Test3 => {
            let v = [grid.zeros(), grid.zeros()];
            State::from_primitives(GridField::constant(grid, 1.0), &v, &noise(grid, cfg.c0, cfg.noise, cfg.seed))
        }
        Case::Stability => State::from_primitives(
            grid.sample(|x, _| rho(x, 0.0)),
            &[grid.sample(|x, _| (PI * x).sin())],
            &grid.sample(|x, _| 0.1 * (PI * x).cos()),
        ),
        Case::Manufactured => exact_state(grid, 0.0),
    })
}

/// `c₀` plus uniform noise of standard deviation `sd`, with the sample mean
/// removed.
pub fn noise(grid: Grid, c0: f64, sd: f64, seed: u64) -> GridField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half_width = sd * 3f64.sqrt();
    let raw = grid.sample(|_, _| rng.gen_range(-half_width..=half_width));
    let mean = raw.mean();
    raw.map(|v| c0 + (v - mean))
}

pub fn forcing(cfg: &RunConfig) -> Option<Box<dyn Forcing>> {
    match cfg.case {
        Case::Manufactured => Some(Box::new(ManufacturedForcing)),
        _ => None,
    }
}
