use crate::convection::char_speed;
use crate::error::Result;
use crate::fields::State;

/// `Δt = cfl · h / cs`, with `cs` the largest characteristic speed.
pub fn select_dt(state: &State, cfl: f64, gamma: f64) -> Result<f64> {
    let cs = char_speed(state, gamma)?;
    Ok(cfl * state.grid().h() / cs)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CflDecision {
    /// Keep the step; use `next_cfl` for the following one.
    Accept { next_cfl: f64 },
    /// Discard the step and retry it with `retry_cfl`.
    Reject { retry_cfl: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CflPolicy {
    pub c_threshold: f64,
    pub cfl_max: f64,
    pub backoff: f64,
    pub recovery: f64,
}

impl CflPolicy {
    pub fn adapt(&self, max_abs_c: f64, cfl: f64) -> CflDecision {
        if max_abs_c >= self.c_threshold || !max_abs_c.is_finite() {
            CflDecision::Reject { retry_cfl: cfl * self.backoff }
        } else {
            CflDecision::Accept { next_cfl: self.cfl_max.min(cfl * self.recovery) }
        }
    }
}
