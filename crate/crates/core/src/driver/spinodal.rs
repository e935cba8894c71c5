//! Linear stability of a homogeneous mixture: predicted growth exponents of
//! cosine modes and their measurement from simulations.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::{Grid, GridField, PhysParams, State};
use crate::imex::{tableau, Chns, Scheme};
use crate::linsolve::{cosine_coefficients, SolverSettings};

/// Amplitude above which the linearization is no longer trusted.
pub const LINEAR_AMPLITUDE: f64 = 1e-4;

/// `ψ''(c) = 3c² − 1` for the double-well `ψ(c) = (1 − c²)²/4`.
pub fn psi2(c: f64) -> f64 {
    3.0 * c * c - 1.0
}

/// Growth exponent `σ = −(ψ''(c₀)K + εK²)` with `K = π² k̂`.
pub fn growth_exponent(c0: f64, eps: f64, khat: f64) -> f64 {
    let k = PI * PI * khat;
    -(psi2(c0) * k + eps * k * k)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    pub k1: usize,
    pub k2: usize,
    pub sigma: f64,
}

impl Mode {
    /// `k̂ = k₁² + k₂²`.
    pub fn khat(&self) -> usize {
        self.k1 * self.k1 + self.k2 * self.k2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinodalPrediction {
    pub c0: f64,
    pub eps: f64,
    pub dim: usize,
    /// Every unstable mode other than the constant one, by increasing `k̂`.
    pub modes: Vec<Mode>,
    /// Fastest growing mode; `None` when no mode is unstable.
    pub dominant: Option<Mode>,
}

impl SpinodalPrediction {
    /// Minimizer of `ψ''(c₀)k̂ + επ²k̂²` over the reals.
    pub fn continuous_khat(&self) -> f64 {
        -psi2(self.c0) / (2.0 * self.eps * PI * PI)
    }
}

/// Enumerates the unstable cosine modes of the linearized equation around
/// `c₀`. Modes with `π²k̂ > −ψ''(c₀)/ε` are all stable.
pub fn predict_spinodal_mode(c0: f64, eps: f64, dim: usize) -> Result<SpinodalPrediction> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!("eps must be positive, got {eps}")));
    }
    if !(1..=2).contains(&dim) {
        return Err(Error::InvalidConfig(format!("dimension must be 1 or 2, got {dim}")));
    }
    let p = psi2(c0);
    if !(p < 0.0) {
        return Err(Error::OutsideSpinodal { c0, psi2: p });
    }
    let cutoff = -p / (eps * PI * PI);
    let kmax = cutoff.sqrt().floor() as usize;
    let mut modes = Vec::new();
    for k1 in 0..=kmax {
        let k2max = if dim == 1 { 0 } else { kmax };
        for k2 in 0..=k2max {
            let khat = (k1 * k1 + k2 * k2) as f64;
            let sigma = growth_exponent(c0, eps, khat);
            if khat > 0.0 && sigma > 0.0 {
                modes.push(Mode { k1, k2, sigma });
            }
        }
    }
    modes.sort_by_key(|m| (m.khat(), m.k1));
    let dominant = modes.iter().copied().reduce(|a, b| if b.sigma > a.sigma { b } else { a });
    Ok(SpinodalPrediction { c0, eps, dim, modes, dominant })
}

/// `c₀ + a Σ cos(k₁πx) cos(k₂πy)` at rest with unit density.
pub fn seeded_state(grid: Grid, c0: f64, amplitude: f64, modes: &[(usize, usize)]) -> State {
    let c = grid.sample(|x, y| {
        c0 + amplitude * modes.iter().map(|&(k1, k2)| (k1 as f64 * PI * x).cos() * (k2 as f64 * PI * y).cos()).sum::<f64>()
    });
    let zeros: Vec<GridField> = (0..grid.dim()).map(|_| grid.zeros()).collect();
    State::from_primitives(GridField::constant(grid, 1.0), &zeros, &c)
}

fn check_linear(c: &GridField, c0: f64) -> Result<()> {
    let dev = c.iter().fold(0.0f64, |m, v| m.max((v - c0).abs()));
    if dev >= LINEAR_AMPLITUDE {
        return Err(Error::AmplitudeTooLarge(dev));
    }
    Ok(())
}

/// Least-squares slope of `ln|a_k(t)|` for each mode over the samples
/// `(t, c)`. A mode whose coefficient vanishes at some sample gets `NaN`.
pub fn measure_growth_rates(samples: &[(f64, GridField)], c0: f64, modes: &[(usize, usize)]) -> Result<Vec<f64>> {
    if samples.len() < 2 {
        return Err(Error::InvalidConfig("at least two samples are needed".into()));
    }
    let grid = samples[0].1.grid();
    let mut logs = vec![Vec::with_capacity(samples.len()); modes.len()];
    for (_, c) in samples {
        check_linear(c, c0)?;
        let a = cosine_coefficients(c);
        for (log, &(k1, k2)) in logs.iter_mut().zip(modes) {
            log.push(a[grid.index(k1, k2)].abs().ln());
        }
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let stt: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
    Ok(logs
        .iter()
        .map(|y| {
            if y.iter().any(|v| !v.is_finite()) {
                return f64::NAN;
            }
            let ym = y.iter().sum::<f64>() / n;
            ts.iter().zip(y).map(|(t, v)| (t - tm) * (v - ym)).sum::<f64>() / stt
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthSetup {
    pub dim: usize,
    pub m: usize,
    pub c0: f64,
    pub eps: f64,
    /// Seeded modes `(k₁, k₂)`; `k₂` is ignored in 1D.
    pub modes: Vec<(usize, usize)>,
    pub amplitude: f64,
    pub t_final: f64,
    pub steps: usize,
    pub scheme: Scheme,
}

impl GrowthSetup {
    pub fn new(dim: usize, m: usize, eps: f64, modes: Vec<(usize, usize)>) -> Self {
        Self { dim, m, c0: 0.0, eps, modes, amplitude: 1e-6, t_final: 0.01, steps: 200, scheme: Scheme::Dirksa }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthCheck {
    pub k1: usize,
    pub k2: usize,
    pub predicted: f64,
    pub measured: f64,
}

impl GrowthCheck {
    pub fn relative_error(&self) -> f64 {
        ((self.measured - self.predicted) / self.predicted).abs()
    }
}

/// Runs the full model at rest from a seeded state with a fixed step and
/// compares the fitted growth rate of each seeded mode with `σ`.
pub fn linearized_growth_check(setup: &GrowthSetup) -> Result<Vec<GrowthCheck>> {
    let grid = Grid::new(setup.dim, setup.m)?;
    let modes: Vec<(usize, usize)> =
        setup.modes.iter().map(|&(k1, k2)| (k1, if setup.dim == 1 { 0 } else { k2 })).collect();
    if let Some(&(k1, k2)) = modes.iter().find(|&&(k1, k2)| k1.max(k2) >= setup.m) {
        return Err(Error::InvalidConfig(format!("mode ({k1}, {k2}) is not resolved on M = {}", setup.m)));
    }
    let params = PhysParams { nu: 1e-2, lambda: 1e-3, eps: setup.eps, g: 0.0, ..PhysParams::default() };
    let solver = SolverSettings { rel_tol: 1e-12, max_iters: 200, ..SolverSettings::default() };
    let chns = Chns::new(params, solver);
    let pair = tableau(setup.scheme);
    let dt = setup.t_final / setup.steps as f64;
    let mut state = seeded_state(grid, setup.c0, setup.amplitude, &modes);
    let mut samples = vec![(0.0, state.concentration()?)];
    for n in 0..setup.steps {
        let t = n as f64 * dt;
        state = chns.step(&state, t, dt, &pair)?.state;
        let c = state.concentration()?;
        check_linear(&c, setup.c0)?;
        samples.push((t + dt, c));
    }
    let rates = measure_growth_rates(&samples, setup.c0, &modes)?;
    Ok(modes
        .iter()
        .zip(rates)
        .map(|(&(k1, k2), measured)| GrowthCheck {
            k1,
            k2,
            predicted: growth_exponent(setup.c0, setup.eps, (k1 * k1 + k2 * k2) as f64),
            measured,
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeSpectrum {
    /// Mode with the largest cosine coefficient, excluding the mean.
    pub peak: (usize, usize),
    /// `k̂` averaged over all modes with weights `a²`.
    pub mean_khat: f64,
}

/// Locates the energetic modes of `c − c₀`.
pub fn mode_spectrum(c: &GridField) -> ModeSpectrum {
    let grid = c.grid();
    let a = cosine_coefficients(c);
    let mut peak = (0, 0);
    let mut best = -1.0;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 1..grid.len() {
        let (k1, k2) = grid.coords(k);
        let p = a[k] * a[k];
        num += p * (k1 * k1 + k2 * k2) as f64;
        den += p;
        if p > best {
            best = p;
            peak = (k1, k2);
        }
    }
    ModeSpectrum { peak, mean_khat: if den > 0.0 { num / den } else { 0.0 } }
}
