//! Run configuration, initial conditions, the time loop and its outputs.

pub mod cases;
pub mod config;
pub mod diagnostics;
pub mod experiments;
#[cfg(test)]
mod invariants;
pub mod run;
pub mod snapshot;
pub mod spinodal;
pub mod timestep;

pub use config::{Case, Method, RunConfig};
pub use run::{run, run_from, RunOutcome, SolverTotals};
