use std::io;

use thiserror::Error;

/// Errors produced by the discretization, the stage solvers and the driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive density {value} at node {index}")]
    NonPositiveDensity { index: usize, value: f64 },

    #[error("{system} solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDivergence {
        system: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("max |c| = {max_abs_c} reached the threshold {threshold}")]
    BoundViolation { max_abs_c: f64, threshold: f64 },

    #[error("non-finite value in component {component} at node {index}")]
    NonFinite { component: usize, index: usize },

    #[error("solution blew up (max |U| = {max_abs:e})")]
    BlowUp { max_abs: f64 },

    #[error("unknown time-stepping scheme `{0}`")]
    UnknownScheme(String),

    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),

    #[error("solver not applicable: {0}")]
    NotApplicable(String),

    #[error("c0 = {c0} lies outside the spinodal region (psi''(c0) = {psi2})")]
    OutsideSpinodal { c0: f64, psi2: f64 },

    #[error("perturbation amplitude {0:e} is outside the linear regime")]
    AmplitudeTooLarge(f64),

    #[error("time step at t = {t} rejected {retries} times")]
    StepRejectedTooManyTimes { t: f64, retries: usize },

    #[error("stage {stage} of the step at t = {t} failed: {source}")]
    Step {
        t: f64,
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("run stopped at t = {t}: {source}")]
    RunFailed {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid snapshot: {0}")]
    InvalidSnapshot(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Unwraps `Step` wrappers down to the originating error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } | Error::RunFailed { source, .. } => source.root(),
            other => other,
        }
    }

    /// Errors after which the driver may retry the step with a smaller time step.
    pub fn is_recoverable(&self) -> bool {
        matches!(
            self.root(),
            Error::NonPositiveDensity { .. }
                | Error::SolverDivergence { .. }
                | Error::BoundViolation { .. }
                | Error::NonFinite { .. }
                | Error::BlowUp { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
