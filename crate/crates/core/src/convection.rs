//! Fifth-order WENO finite-difference convective terms with a global
//! Lax-Friedrichs flux splitting, applied dimension by dimension.

use crate::error::Result;
use crate::fields::State;

const WENO_EPS: f64 = 1e-6;
const GHOSTS: usize = 3;

/// How stencils are closed past the ends of a grid line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Reflecting wall: density and partial density are extended evenly and
    /// both momenta oddly, so no mass crosses the wall.
    Wall,
    /// Periodic wrap, used by convergence studies.
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bias {
    /// Upwind for right-going waves: uses `f_{i-2..=i+2}` for `i+½`.
    Left,
    /// Upwind for left-going waves: uses `f_{i-1..=i+3}` for `i+½`.
    Right,
}

/// Largest characteristic speed `max |v_k| + sqrt(γ ρ^{γ-1})` over the grid.
pub fn char_speed(state: &State, gamma: f64) -> Result<f64> {
    state.check_density()?;
    let mut cs = 0.0f64;
    for k in 0..state.grid().len() {
        let rho = state.rho[k];
        let sound = (gamma * rho.powf(gamma - 1.0)).sqrt();
        for m in &state.m {
            cs = cs.max((m[k] / rho).abs() + sound);
        }
    }
    Ok(cs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitFluxes {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

/// `f± = ½(f ± α u)`.
pub fn glf_split(f: &[f64], u: &[f64], alpha: f64) -> SplitFluxes {
    let plus = f.iter().zip(u).map(|(&f, &u)| 0.5 * (f + alpha * u)).collect();
    let minus = f.iter().zip(u).map(|(&f, &u)| 0.5 * (f - alpha * u)).collect();
    SplitFluxes { plus, minus }
}

/// Nonlinear weights of the three candidate stencils for left-biased data.
pub fn weno5_weights(v: [f64; 5]) -> [f64; 3] {
    let [a, b, c, d, e] = v;
    let beta = [
        13.0 / 12.0 * (a - 2.0 * b + c).powi(2) + 0.25 * (a - 4.0 * b + 3.0 * c).powi(2),
        13.0 / 12.0 * (b - 2.0 * c + d).powi(2) + 0.25 * (b - d).powi(2),
        13.0 / 12.0 * (c - 2.0 * d + e).powi(2) + 0.25 * (3.0 * c - 4.0 * d + e).powi(2),
    ];
    let ideal = [0.1, 0.6, 0.3];
    let alpha: [f64; 3] = std::array::from_fn(|r| ideal[r] / (WENO_EPS + beta[r]).powi(2));
    let sum: f64 = alpha.iter().sum();
    alpha.map(|a| a / sum)
}

/// Interface value at `i+½` from five values centered as given by `bias`.
pub fn weno5_reconstruct(v: [f64; 5], bias: Bias) -> f64 {
    let [a, b, c, d, e] = match bias {
        Bias::Left => v,
        Bias::Right => [v[4], v[3], v[2], v[1], v[0]],
    };
    let w = weno5_weights([a, b, c, d, e]);
    let q0 = (2.0 * a - 7.0 * b + 11.0 * c) / 6.0;
    let q1 = (-b + 5.0 * c + 2.0 * d) / 6.0;
    let q2 = (2.0 * c + 5.0 * d - e) / 6.0;
    w[0] * q0 + w[1] * q1 + w[2] * q2
}

/// Physical flux of the conserved variables `(ρ, m…, q)` along `axis`.
fn physical_flux(u: &[f64], dim: usize, axis: usize, gamma: f64, out: &mut [f64]) {
    let rho = u[0];
    let vn = u[1 + axis] / rho;
    out[0] = u[1 + axis];
    for a in 0..dim {
        out[1 + a] = u[1 + a] * vn;
    }
    out[1 + axis] += rho.powf(gamma);
    out[dim + 1] = u[dim + 1] * vn;
}

/// `𝒞(U)` with reflecting walls and α taken from `state` itself.
pub fn convective_rhs(state: &State, gamma: f64) -> Result<State> {
    let alpha = char_speed(state, gamma)?;
    convective_rhs_with(state, gamma, alpha, Boundary::Wall)
}

/// `−div` of the numerical flux, for a given splitting constant `alpha`.
pub fn convective_rhs_with(state: &State, gamma: f64, alpha: f64, boundary: Boundary) -> Result<State> {
    state.check_density()?;
    let grid = state.grid();
    let dim = grid.dim();
    let nc = dim + 2;
    let m = grid.m();
    let ih = 1.0 / grid.h();
    let ext = m + 2 * GHOSTS;
    let mut out = State::zeros(grid);

    // component-major line buffers over the extended line
    let mut fp = vec![0.0; nc * ext];
    let mut fm = vec![0.0; nc * ext];
    let mut node_u = vec![0.0; nc];
    let mut node_f = vec![0.0; nc];
    let mut flux = vec![0.0; nc * (m + 1)];

    for &axis in grid.axes() {
        let ax = axis.index();
        for (start, stride) in grid.lines(axis) {
            for e in 0..ext {
                let (i, sign) = source_node(e as isize - GHOSTS as isize, m, boundary);
                let k = start + i * stride;
                for (c, comp) in state.components().enumerate() {
                    let odd = boundary == Boundary::Wall && (1..=dim).contains(&c);
                    node_u[c] = if odd { sign * comp[k] } else { comp[k] };
                }
                physical_flux(&node_u, dim, ax, gamma, &mut node_f);
                for c in 0..nc {
                    fp[c * ext + e] = 0.5 * (node_f[c] + alpha * node_u[c]);
                    fm[c * ext + e] = 0.5 * (node_f[c] - alpha * node_u[c]);
                }
            }
            // interface p sits between nodes p-1 and p, p = 0..=m
            for c in 0..nc {
                let fp = &fp[c * ext..(c + 1) * ext];
                let fm = &fm[c * ext..(c + 1) * ext];
                for p in 0..=m {
                    // extended index of node p-1 is p-1+GHOSTS
                    let e = p + GHOSTS - 1;
                    let left = weno5_reconstruct([fp[e - 2], fp[e - 1], fp[e], fp[e + 1], fp[e + 2]], Bias::Left);
                    let right = weno5_reconstruct([fm[e - 1], fm[e], fm[e + 1], fm[e + 2], fm[e + 3]], Bias::Right);
                    flux[c * (m + 1) + p] = left + right;
                }
            }
            for (c, comp) in out.components_mut().enumerate() {
                let flux = &flux[c * (m + 1)..(c + 1) * (m + 1)];
                for i in 0..m {
                    comp[start + i * stride] -= (flux[i + 1] - flux[i]) * ih;
                }
            }
        }
    }
    Ok(out)
}

/// Node supplying the value at extended position `i`, and the sign applied
/// to odd components.
fn source_node(i: isize, m: usize, boundary: Boundary) -> (usize, f64) {
    let mi = m as isize;
    match boundary {
        Boundary::Periodic => (i.rem_euclid(mi) as usize, 1.0),
        Boundary::Wall if i < 0 => ((-1 - i) as usize, -1.0),
        Boundary::Wall if i >= mi => ((2 * mi - 1 - i) as usize, -1.0),
        Boundary::Wall => (i as usize, 1.0),
    }
}
