use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::PhysParams;
use crate::imex::Scheme;
use crate::linsolve::{SolverKind, SolverSettings};

/// Initial condition and forcing of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    /// Concentration inside the spinodal region.
    Test1,
    /// Concentration above the spinodal region.
    Test2,
    /// Fluid at rest with a tiny random concentration perturbation.
    Test3,
    /// The 1D analogue of Test 1.
    Stability,
    /// Forced problem with a known smooth solution.
    Manufactured,
}

/// Time integrator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ee-ie")]
    EeIe,
    #[serde(rename = "dirksa")]
    Dirksa,
    #[serde(rename = "explicit-euler")]
    ExplicitEuler,
}

impl Method {
    pub fn scheme(self) -> Option<Scheme> {
        match self {
            Method::EeIe => Some(Scheme::EeIe),
            Method::Dirksa => Some(Scheme::Dirksa),
            Method::ExplicitEuler => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.scheme() {
            Some(s) => s.fmt(f),
            None => f.write_str("explicit-euler"),
        }
    }
}

impl From<Scheme> for Method {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::EeIe => Method::EeIe,
            Scheme::Dirksa => Method::Dirksa,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "explicit-euler" | "ee" => Ok(Method::ExplicitEuler),
            other => other.parse::<Scheme>().map(Method::from),
        }
    }
}

fn default_dim() -> usize {
    2
}
fn default_cfl() -> f64 {
    0.4
}
fn default_c_threshold() -> f64 {
    1.5
}
fn default_backoff() -> f64 {
    0.5
}
fn default_recovery() -> f64 {
    1.1
}
fn default_retries() -> usize {
    20
}
fn default_true() -> bool {
    true
}
fn default_rel_tol() -> f64 {
    1e-6
}
fn default_max_iters() -> usize {
    100
}
fn default_noise() -> f64 {
    1e-10
}
fn default_blowup() -> f64 {
    1e6
}

/// Everything needed to reproduce a run. Read from flat TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: Case,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Cells per axis.
    pub m: usize,
    pub gamma: f64,
    pub nu: f64,
    pub lambda: f64,
    pub eps: f64,
    pub g: f64,
    pub scheme: Method,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Largest CFL number the controller grows back to; defaults to `cfl`.
    #[serde(default)]
    pub cfl_max: Option<f64>,
    /// Fixed time step; disables CFL-based selection.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Reject and retry steps (true) or stop at the first failure (false).
    #[serde(default = "default_true")]
    pub adaptive: bool,
    #[serde(default = "default_c_threshold")]
    pub c_threshold: f64,
    #[serde(default = "default_backoff")]
    pub dt_backoff: f64,
    #[serde(default = "default_recovery")]
    pub dt_recovery: f64,
    #[serde(default = "default_retries")]
    pub max_retries: usize,
    /// Any conserved variable above this magnitude counts as a blow-up.
    #[serde(default = "default_blowup")]
    pub blowup: f64,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    pub t_final: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Snapshot interval in simulated time.
    #[serde(default)]
    pub output_every: Option<f64>,
    /// Also snapshot at the fixed list of reference times.
    #[serde(default = "default_true")]
    pub reference_snapshots: bool,
    #[serde(default)]
    pub seed: u64,
    /// Standard deviation of the Test 3 perturbation.
    #[serde(default = "default_noise")]
    pub noise: f64,
    /// Mean concentration of Test 3.
    #[serde(default)]
    pub c0: f64,
}

impl RunConfig {
    /// The parameters used for the case in the reference experiments.
    pub fn for_case(case: Case, m: usize) -> Self {
        let base = RunConfig {
            case,
            dim: 2,
            m,
            gamma: 5.0 / 3.0,
            nu: 1e-3,
            lambda: 1e-4,
            eps: 1e-4,
            g: -10.0,
            scheme: Method::Dirksa,
            cfl: default_cfl(),
            cfl_max: None,
            dt: None,
            adaptive: true,
            c_threshold: default_c_threshold(),
            dt_backoff: default_backoff(),
            dt_recovery: default_recovery(),
            max_retries: default_retries(),
            blowup: default_blowup(),
            solver: SolverKind::Multigrid,
            rel_tol: default_rel_tol(),
            max_iters: default_max_iters(),
            t_final: 0.1,
            output_dir: None,
            output_every: None,
            reference_snapshots: true,
            seed: 0,
            noise: default_noise(),
            c0: 0.0,
        };
        match case {
            Case::Manufactured => RunConfig { nu: 1.0, lambda: 0.1, t_final: 0.01, ..base },
            Case::Stability => RunConfig { dim: 1, nu: 1.0, lambda: 0.0, cfl: 1.0, ..base },
            _ => base,
        }
    }

    /// Parses a flat TOML file. `case` and `m` are required; every other key
    /// defaults to the value [`RunConfig::for_case`] gives.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let invalid = |e: toml::de::Error| Error::InvalidConfig(e.message().to_string());
        let user: toml::Table = toml::from_str(text).map_err(invalid)?;
        #[derive(Deserialize)]
        struct Key {
            case: Case,
            m: usize,
        }
        let key: Key = toml::Value::Table(user.clone()).try_into().map_err(invalid)?;
        let mut merged = toml::Table::try_from(RunConfig::for_case(key.case, key.m))
            .expect("run configurations always serialize");
        merged.extend(user);
        let cfg: RunConfig = toml::Value::Table(merged).try_into().map_err(invalid)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configurations always serialize")
    }

    pub fn params(&self) -> PhysParams {
        PhysParams {
            gamma: self.gamma,
            nu: self.nu,
            lambda: self.lambda,
            eps: self.eps,
            g: self.g,
        }
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            kind: self.solver,
            rel_tol: self.rel_tol,
            max_iters: self.max_iters,
        }
    }

    pub fn cfl_max(&self) -> f64 {
        self.cfl_max.unwrap_or(self.cfl)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        self.params().validate()?;
        if !matches!(self.dim, 1 | 2) {
            return bad(format!("dim must be 1 or 2, got {}", self.dim));
        }
        let needs_dim = match self.case {
            Case::Stability => Some(1),
            Case::Test1 | Case::Test2 | Case::Test3 | Case::Manufactured => Some(2),
        };
        if needs_dim.is_some_and(|d| d != self.dim) {
            return bad(format!("case {:?} is defined in {}D only", self.case, needs_dim.unwrap()));
        }
        if self.m < 2 {
            return bad(format!("m must be at least 2, got {}", self.m));
        }
        let iterative = matches!(self.solver, SolverKind::Multigrid | SolverKind::Pcg);
        if iterative && self.scheme != Method::ExplicitEuler && !self.m.is_power_of_two() {
            return bad(format!("m = {} must be a power of 2 for the {:?} solver", self.m, self.solver));
        }
        if !(self.cfl > 0.0) || !(self.cfl_max() >= self.cfl) {
            return bad(format!("need 0 < cfl <= cfl_max, got {} and {}", self.cfl, self.cfl_max()));
        }
        if self.dt.is_some_and(|dt| !(dt > 0.0)) {
            return bad("dt must be positive".into());
        }
        if !(self.c_threshold > 1.0) {
            return bad(format!("c_threshold must exceed 1, got {}", self.c_threshold));
        }
        if !(self.dt_backoff > 0.0 && self.dt_backoff < 1.0) || !(self.dt_recovery >= 1.0) {
            return bad("need 0 < dt_backoff < 1 <= dt_recovery".into());
        }
        if !(self.t_final >= 0.0) {
            return bad(format!("t_final must be non-negative, got {}", self.t_final));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return bad(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol));
        }
        if self.output_every.is_some_and(|dt| !(dt > 0.0)) {
            return bad("output_every must be positive".into());
        }
        Ok(())
    }
}
