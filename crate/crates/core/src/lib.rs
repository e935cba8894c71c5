//! Finite-difference solver for the compressible, isentropic
//! Cahn-Hilliard-Navier-Stokes equations on the unit interval and the unit
//! square, with linearly implicit-explicit Runge-Kutta time stepping.

pub mod convection;
pub mod driver;
pub mod error;
pub mod fields;
pub mod imex;
pub mod linsolve;
pub mod manufactured;
pub mod ops;
pub mod semidisc;

pub use error::{Error, Result};
pub use fields::{Axis, Grid, GridField, PhysParams, State};
