//! Grids, grid functions and the conserved state vector.
//!
//! The domain is the unit interval or the unit square, discretized by `M`
//! cells per axis with nodes at the cell centers `x_i = (i + 1/2) h`,
//! `h = 1/M` (indices are 0-based here). In 2D the flat index of node
//! `(i, j)` is `k = M i + j`, with `i` the x-index and `j` the y-index, so
//! the y-index runs fastest.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// Uniform cell-centered grid on `(0,1)^dim`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    dim: usize,
    m: usize,
}

/// Coordinate direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

impl Grid {
    pub const MIN_CELLS: usize = 3;

    pub fn new(dim: usize, m: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidConfig(format!("dimension must be 1 or 2, got {dim}")));
        }
        if m < Self::MIN_CELLS {
            return Err(Error::InvalidConfig(format!(
                "at least {} cells per axis are required, got {m}",
                Self::MIN_CELLS
            )));
        }
        Ok(Self { dim, m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per axis.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Cell width `1/M`.
    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// Total number of nodes, `M` or `M^2`.
    pub fn len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axes(&self) -> &'static [Axis] {
        if self.dim == 1 {
            &[Axis::X]
        } else {
            &[Axis::X, Axis::Y]
        }
    }

    /// Flat index of node `(i, j)`; `j` is ignored in 1D.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        if self.dim == 1 {
            i
        } else {
            i * self.m + j
        }
    }

    /// Inverse of [`Grid::index`].
    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        if self.dim == 1 {
            (k, 0)
        } else {
            (k / self.m, k % self.m)
        }
    }

    /// Cell-center coordinate of 0-based node index `i`.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }

    /// Position of flat node `k` as `(x, y)`; `y = 0` in 1D.
    pub fn position(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.coords(k);
        if self.dim == 1 {
            (self.node(i), 0.0)
        } else {
            (self.node(i), self.node(j))
        }
    }

    /// Start offset and stride of every grid line running along `axis`.
    pub fn lines(&self, axis: Axis) -> impl Iterator<Item = (usize, usize)> {
        let m = self.m;
        let (count, start_step, stride) = match (self.dim, axis) {
            (1, Axis::X) => (1, 0, 1),
            (1, Axis::Y) => panic!("no y axis on a 1D grid"),
            (_, Axis::X) => (m, 1, m),
            (_, Axis::Y) => (m, m, 1),
        };
        (0..count).map(move |l| (l * start_step, stride))
    }

    /// Grid with half as many cells per axis, if `M` is even.
    pub fn coarsen(&self) -> Option<Grid> {
        (self.m % 2 == 0 && self.m / 2 >= 1).then_some(Grid { dim: self.dim, m: self.m / 2 })
    }

    /// Samples `f(x, y)` at the nodes.
    pub fn sample(&self, mut f: impl FnMut(f64, f64) -> f64) -> GridField {
        let values = (0..self.len())
            .map(|k| {
                let (x, y) = self.position(k);
                f(x, y)
            })
            .collect();
        GridField { grid: *self, values }
    }

    pub fn zeros(&self) -> GridField {
        GridField::constant(*self, 0.0)
    }
}

/// Real values at the nodes of a grid, in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    grid: Grid,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "field length does not match the grid");
        Self { grid, values }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> GridField {
        debug_assert_eq!(self.grid, other.grid);
        GridField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &GridField) {
        debug_assert_eq!(self.grid, x.grid);
        for (s, &v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        integral(self) / self.values.len() as f64
    }

    pub fn dot(&self, other: &GridField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    /// Index of the first non-finite entry.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }
}

impl Deref for GridField {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl DerefMut for GridField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Plain sum of the nodal values (no cell-volume factor).
///
/// Uses pairwise summation so that conservation errors are not swamped by
/// accumulated rounding on large grids.
pub fn integral(f: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if f.len() <= BLOCK {
        f.iter().sum()
    } else {
        let (a, b) = f.split_at(f.len() / 2);
        integral(a) + integral(b)
    }
}

/// Cell-volume weighted integral `h^dim * sum f`, approximating `∫ f dx`.
pub fn volume_integral(f: &GridField) -> f64 {
    f.grid().h().powi(f.grid().dim() as i32) * integral(f)
}

/// Conserved variables `(rho, m, q)` with `m = rho v` and `q = rho c`.
///
/// The same container also holds right-hand sides and stage increments,
/// which have the same shape.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub rho: GridField,
    pub m: Vec<GridField>,
    pub q: GridField,
}

impl State {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            rho: grid.zeros(),
            m: vec![grid.zeros(); grid.dim()],
            q: grid.zeros(),
        }
    }

    /// Builds conserved variables from density, velocity and concentration.
    pub fn from_primitives(rho: GridField, v: &[GridField], c: &GridField) -> Self {
        assert_eq!(v.len(), rho.grid().dim());
        let m = v.iter().map(|vk| rho.zip_map(vk, |r, s| r * s)).collect();
        let q = rho.zip_map(c, |r, s| r * s);
        Self { rho, m, q }
    }

    pub fn grid(&self) -> Grid {
        self.rho.grid()
    }

    /// Number of scalar equations, `dim + 2`.
    pub fn n_components(&self) -> usize {
        self.m.len() + 2
    }

    pub fn component(&self, k: usize) -> &GridField {
        let d = self.m.len();
        match k {
            0 => &self.rho,
            k if k <= d => &self.m[k - 1],
            k if k == d + 1 => &self.q,
            _ => panic!("component {k} out of range"),
        }
    }

    pub fn component_mut(&mut self, k: usize) -> &mut GridField {
        let d = self.m.len();
        match k {
            0 => &mut self.rho,
            k if k <= d => &mut self.m[k - 1],
            k if k == d + 1 => &mut self.q,
            _ => panic!("component {k} out of range"),
        }
    }

    pub fn components(&self) -> impl Iterator<Item = &GridField> {
        std::iter::once(&self.rho).chain(self.m.iter()).chain(std::iter::once(&self.q))
    }

    pub fn components_mut(&mut self) -> impl Iterator<Item = &mut GridField> {
        std::iter::once(&mut self.rho)
            .chain(self.m.iter_mut())
            .chain(std::iter::once(&mut self.q))
    }

    /// Checks `rho > 0` everywhere.
    pub fn check_density(&self) -> Result<()> {
        check_positive(&self.rho)
    }

    /// Velocity components `m_k / rho` and concentration `q / rho`.
    pub fn primitives(&self) -> Result<(Vec<GridField>, GridField)> {
        self.check_density()?;
        let v = self.m.iter().map(|mk| mk.zip_map(&self.rho, |a, r| a / r)).collect();
        let c = self.q.zip_map(&self.rho, |a, r| a / r);
        Ok((v, c))
    }

    pub fn concentration(&self) -> Result<GridField> {
        self.check_density()?;
        Ok(self.q.zip_map(&self.rho, |a, r| a / r))
    }

    /// `self += a * x`, componentwise.
    pub fn axpy(&mut self, a: f64, x: &State) {
        for (s, v) in self.components_mut().zip(x.components()) {
            s.axpy(a, v);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.components().map(GridField::max_abs).fold(0.0, f64::max)
    }

    pub fn check_finite(&self) -> Result<()> {
        for (component, f) in self.components().enumerate() {
            if let Some(index) = f.first_non_finite() {
                return Err(Error::NonFinite { component, index });
            }
        }
        Ok(())
    }
}

pub(crate) fn check_positive(rho: &[f64]) -> Result<()> {
    match rho.iter().position(|&r| !(r > 0.0)) {
        Some(index) => Err(Error::NonPositiveDensity {
            index,
            value: rho[index],
        }),
        None => Ok(()),
    }
}

/// Physical parameters of the model.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhysParams {
    /// Adiabatic exponent of the pressure law `p = rho^gamma`.
    pub gamma: f64,
    /// Shear viscosity.
    pub nu: f64,
    /// Second viscosity.
    pub lambda: f64,
    /// Interface thickness parameter.
    pub eps: f64,
    /// Gravitational acceleration along the last axis.
    pub g: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            gamma: 5.0 / 3.0,
            nu: 1e-3,
            lambda: 1e-4,
            eps: 1e-4,
            g: -10.0,
        }
    }
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidConfig(format!("eps must be positive, got {}", self.eps)));
        }
        if self.nu < 0.0 {
            return Err(Error::InvalidConfig(format!("nu must be non-negative, got {}", self.nu)));
        }
        let bulk = 2.0 * self.nu + self.lambda;
        if (self.nu != 0.0 || self.lambda != 0.0) && !(bulk > 0.0) {
            return Err(Error::InvalidConfig(format!("2 nu + lambda must be positive, got {bulk}")));
        }
        Ok(())
    }
}
