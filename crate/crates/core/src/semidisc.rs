//! Method-of-lines right-hand side `ℒ(U)` and its linearly split variant
//! `ℒ̃(Ũ, U)`, for 1D and 2D grids.

use crate::convection::{char_speed, convective_rhs_with, Boundary};
use crate::error::Result;
use crate::fields::{Grid, GridField, PhysParams, State};
use crate::ops::{capillary_terms, chemical_potential_laplacian, viscous_block_apply};

/// Time-dependent source added to the right-hand side.
pub trait Forcing: Send + Sync {
    fn eval(&self, grid: Grid, t: f64, params: &PhysParams) -> State;
}

/// Additive parts of the right-hand side. Terms not present in an equation
/// are absent rather than stored as zeros.
#[derive(Clone, Debug)]
pub struct RhsParts {
    /// All four (three in 1D) components.
    pub convective: State,
    /// `ρG`, acting on the last momentum component.
    pub gravity: GridField,
    /// One field per momentum component.
    pub capillary: Vec<GridField>,
    pub cahn_hilliard: GridField,
    /// One field per momentum component.
    pub viscous: Vec<GridField>,
}

impl RhsParts {
    pub fn total(&self) -> State {
        let mut out = self.convective.clone();
        let dim = out.m.len();
        out.m[dim - 1].axpy(1.0, &self.gravity);
        for (a, m) in out.m.iter_mut().enumerate() {
            m.axpy(1.0, &self.capillary[a]);
            m.axpy(1.0, &self.viscous[a]);
        }
        out.q.axpy(1.0, &self.cahn_hilliard);
        out
    }
}

/// Evaluates every part of `ℒ̃(Ũ, U)`: convection at `Ũ`, the splitting of
/// the Cahn-Hilliard term with reference concentration `C̃`, everything else
/// at `U`.
pub fn rhs_parts(tilde: &State, state: &State, params: &PhysParams) -> Result<RhsParts> {
    let alpha = char_speed(tilde, params.gamma)?;
    let convective = convective_rhs_with(tilde, params.gamma, alpha, Boundary::Wall)?;
    let c = state.concentration()?;
    let c_ref = if std::ptr::eq(tilde, state) { c.clone() } else { tilde.concentration()? };
    let (v, _) = state.primitives()?;
    Ok(RhsParts {
        convective,
        gravity: state.rho.map(|r| r * params.g),
        capillary: capillary_terms(&c, params.eps),
        cahn_hilliard: chemical_potential_laplacian(&c, &state.rho, &c_ref, params.eps)?,
        viscous: viscous_block_apply(&v, params.nu, params.lambda),
    })
}

fn with_forcing(mut out: State, forcing: Option<&dyn Forcing>, t: f64, params: &PhysParams) -> State {
    if let Some(f) = forcing {
        out.axpy(1.0, &f.eval(out.grid(), t, params));
    }
    out
}

/// `ℒ(U) + F(t)`.
pub fn rhs_full(state: &State, params: &PhysParams, t: f64, forcing: Option<&dyn Forcing>) -> Result<State> {
    let out = rhs_parts(state, state, params)?.total();
    Ok(with_forcing(out, forcing, t, params))
}

/// `ℒ̃(Ũ, U) + F(t)`.
pub fn rhs_split(
    tilde: &State,
    state: &State,
    params: &PhysParams,
    t: f64,
    forcing: Option<&dyn Forcing>,
) -> Result<State> {
    let out = rhs_parts(tilde, state, params)?.total();
    Ok(with_forcing(out, forcing, t, params))
}

/// [`rhs_full`] restricted to one-dimensional grids.
pub fn rhs_1d(state: &State, params: &PhysParams, t: f64, forcing: Option<&dyn Forcing>) -> Result<State> {
    assert_eq!(state.grid().dim(), 1, "rhs_1d needs a one-dimensional state");
    rhs_full(state, params, t, forcing)
}
