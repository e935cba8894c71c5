//! Finite-difference operators on cell-centered grids with the boundary
//! closures dictated by no-slip velocities and homogeneous Neumann data for
//! the concentration and the chemical potential.
//!
//! Every one-dimensional stencil is described once, by [`StencilKind`]'s row
//! coefficients, and is used both for matrix-free application and for sparse
//! assembly of the implicit stage systems.

use crate::error::Result;
use crate::fields::{check_positive, Axis, Grid, GridField};
use crate::linsolve::sparse::CsrMatrix;

/// One-dimensional difference stencils, applied along an axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StencilKind {
    /// Backward difference `(f_i - f_{i-1})/h` with `f` taken as zero outside
    /// the first and at the last node.
    D1Star,
    /// Forward difference `(f_{i+1} - f_i)/h`, zero on the last node.
    D1,
    /// Centered difference with one-sided first-order boundary rows.
    D,
    /// Centered difference with halved one-sided boundary rows, for functions
    /// whose derivative vanishes on the wall.
    DStar,
    /// `f_{i+1}`, zero on the last node.
    Shift,
    /// Second difference under no-slip (zero Dirichlet) data.
    E,
    /// Second difference under homogeneous Neumann data.
    Laplacian,
}

#[derive(Clone, Copy)]
struct Row {
    len: usize,
    taps: [(isize, f64); 3],
}

impl Row {
    const EMPTY: Row = Row {
        len: 0,
        taps: [(0, 0.0); 3],
    };

    fn new(taps: &[(isize, f64)]) -> Row {
        let mut row = Row::EMPTY;
        row.taps[..taps.len()].copy_from_slice(taps);
        row.len = taps.len();
        row
    }

    fn taps(&self) -> &[(isize, f64)] {
        &self.taps[..self.len]
    }
}

impl StencilKind {
    /// Nonzero coefficients of row `i` as `(offset, value)` pairs.
    fn row(self, i: usize, m: usize, h: f64) -> Row {
        let first = i == 0;
        let last = i == m - 1;
        let ih = 1.0 / h;
        let ih2 = ih * ih;
        match self {
            StencilKind::D1Star if first => Row::new(&[(0, ih)]),
            StencilKind::D1Star if last => Row::new(&[(-1, -ih)]),
            StencilKind::D1Star => Row::new(&[(-1, -ih), (0, ih)]),
            StencilKind::D1 if last => Row::EMPTY,
            StencilKind::D1 => Row::new(&[(0, -ih), (1, ih)]),
            StencilKind::D if first => Row::new(&[(0, -ih), (1, ih)]),
            StencilKind::D if last => Row::new(&[(-1, -ih), (0, ih)]),
            StencilKind::D => Row::new(&[(-1, -0.5 * ih), (1, 0.5 * ih)]),
            StencilKind::DStar if first => Row::new(&[(0, -0.5 * ih), (1, 0.5 * ih)]),
            StencilKind::DStar if last => Row::new(&[(-1, -0.5 * ih), (0, 0.5 * ih)]),
            StencilKind::DStar => Row::new(&[(-1, -0.5 * ih), (1, 0.5 * ih)]),
            StencilKind::Shift if last => Row::EMPTY,
            StencilKind::Shift => Row::new(&[(1, 1.0)]),
            StencilKind::E if first => Row::new(&[(0, -4.0 * ih2), (1, 4.0 / 3.0 * ih2)]),
            StencilKind::E if last => Row::new(&[(-1, 4.0 / 3.0 * ih2), (0, -4.0 * ih2)]),
            StencilKind::E => Row::new(&[(-1, ih2), (0, -2.0 * ih2), (1, ih2)]),
            StencilKind::Laplacian if first => Row::new(&[(0, -ih2), (1, ih2)]),
            StencilKind::Laplacian if last => Row::new(&[(-1, ih2), (0, -ih2)]),
            StencilKind::Laplacian => Row::new(&[(-1, ih2), (0, -2.0 * ih2), (1, ih2)]),
        }
    }
}

/// A [`StencilKind`] acting along one axis of a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StencilOperator {
    pub kind: StencilKind,
    pub axis: Axis,
}

impl StencilOperator {
    pub fn new(kind: StencilKind, axis: Axis) -> Self {
        Self { kind, axis }
    }

    pub fn apply(&self, f: &GridField) -> GridField {
        let mut out = f.grid().zeros();
        self.apply_into(f.grid(), f, &mut out);
        out
    }

    pub fn apply_into(&self, grid: Grid, f: &[f64], out: &mut [f64]) {
        let m = grid.m();
        let h = grid.h();
        for (start, stride) in grid.lines(self.axis) {
            for i in 0..m {
                let row = self.kind.row(i, m, h);
                let mut acc = 0.0;
                for &(off, coef) in row.taps() {
                    acc += coef * f[start + (i as isize + off) as usize * stride];
                }
                out[start + i * stride] = acc;
            }
        }
    }

    pub fn to_csr(&self, grid: Grid) -> CsrMatrix {
        let m = grid.m();
        let h = grid.h();
        let mut triplets = Vec::with_capacity(3 * grid.len());
        for (start, stride) in grid.lines(self.axis) {
            for i in 0..m {
                for &(off, coef) in self.kind.row(i, m, h).taps() {
                    triplets.push((start + i * stride, start + (i as isize + off) as usize * stride, coef));
                }
            }
        }
        CsrMatrix::from_triplets(grid.len(), triplets)
    }
}

fn apply(kind: StencilKind, f: &GridField, axis: Axis) -> GridField {
    StencilOperator::new(kind, axis).apply(f)
}

pub fn apply_d1star(f: &GridField, axis: Axis) -> GridField {
    apply(StencilKind::D1Star, f, axis)
}

pub fn apply_d1(f: &GridField, axis: Axis) -> GridField {
    apply(StencilKind::D1, f, axis)
}

pub fn apply_d(f: &GridField, axis: Axis) -> GridField {
    apply(StencilKind::D, f, axis)
}

pub fn apply_dstar(f: &GridField, axis: Axis) -> GridField {
    apply(StencilKind::DStar, f, axis)
}

pub fn apply_shift(f: &GridField, axis: Axis) -> GridField {
    apply(StencilKind::Shift, f, axis)
}

pub fn apply_e(f: &GridField, axis: Axis) -> GridField {
    apply(StencilKind::E, f, axis)
}

/// `Δ_h f`, the Neumann Laplacian summed over all axes.
pub fn apply_neumann_laplacian(f: &GridField) -> GridField {
    let grid = f.grid();
    let mut out = grid.zeros();
    let mut tmp = grid.zeros();
    for &axis in grid.axes() {
        StencilOperator::new(StencilKind::Laplacian, axis).apply_into(grid, f, &mut tmp);
        out.axpy(1.0, &tmp);
    }
    out
}

pub fn neumann_laplacian_csr(grid: Grid) -> CsrMatrix {
    let mut lap = StencilOperator::new(StencilKind::Laplacian, Axis::X).to_csr(grid);
    if grid.dim() == 2 {
        lap = lap.add(1.0, &StencilOperator::new(StencilKind::Laplacian, Axis::Y).to_csr(grid), 1.0);
    }
    lap
}

/// Which half of the convex-concave splitting `ψ' = φ₊ + φ₋`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitSign {
    /// `φ₊(c) = 2c`, treated implicitly.
    Plus,
    /// `φ₋(c) = c³ - 3c`, treated explicitly.
    Minus,
}

impl SplitSign {
    /// Derivative of the split potential.
    pub fn phi_prime(self, c: f64) -> f64 {
        match self {
            SplitSign::Plus => 2.0,
            SplitSign::Minus => 3.0 * (c * c - 1.0),
        }
    }
}

/// `M_±(C̃)`: the edge-weighted divergence-form approximation of
/// `Δ φ_±(c)` with weights frozen at a reference concentration.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPotentialTensor {
    grid: Grid,
    sign: SplitSign,
    /// Per axis, the weight of the edge between node `k` and its successor
    /// along that axis; zero on the last node of each line.
    weights: Vec<Vec<f64>>,
}

impl SplitPotentialTensor {
    pub fn assemble(c_ref: &GridField, sign: SplitSign) -> Self {
        let grid = c_ref.grid();
        let m = grid.m();
        let weights = grid
            .axes()
            .iter()
            .map(|&axis| {
                let mut w = vec![0.0; grid.len()];
                for (start, stride) in grid.lines(axis) {
                    for i in 0..m - 1 {
                        let k = start + i * stride;
                        w[k] = 0.5 * (sign.phi_prime(c_ref[k]) + sign.phi_prime(c_ref[k + stride]));
                    }
                }
                w
            })
            .collect();
        Self { grid, sign, weights }
    }

    pub fn sign(&self) -> SplitSign {
        self.sign
    }

    pub fn edge_weights(&self, axis: Axis) -> &[f64] {
        &self.weights[axis.index()]
    }

    pub fn apply(&self, c: &GridField) -> GridField {
        let grid = self.grid;
        let m = grid.m();
        let ih2 = 1.0 / (grid.h() * grid.h());
        let mut out = grid.zeros();
        for &axis in grid.axes() {
            let w = &self.weights[axis.index()];
            for (start, stride) in grid.lines(axis) {
                for i in 0..m - 1 {
                    let k = start + i * stride;
                    let flux = w[k] * (c[k + stride] - c[k]) * ih2;
                    out[k] += flux;
                    out[k + stride] -= flux;
                }
            }
        }
        out
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let grid = self.grid;
        let m = grid.m();
        let ih2 = 1.0 / (grid.h() * grid.h());
        let mut triplets = Vec::with_capacity(5 * grid.len());
        for &axis in grid.axes() {
            let w = &self.weights[axis.index()];
            for (start, stride) in grid.lines(axis) {
                for i in 0..m - 1 {
                    let k = start + i * stride;
                    let a = w[k] * ih2;
                    triplets.extend([(k, k, -a), (k, k + stride, a), (k + stride, k, a), (k + stride, k + stride, -a)]);
                }
            }
        }
        CsrMatrix::from_triplets(grid.len(), triplets)
    }
}

pub fn assemble_split_tensor(c_ref: &GridField, sign: SplitSign) -> SplitPotentialTensor {
    SplitPotentialTensor::assemble(c_ref, sign)
}

pub fn apply_split_tensor(tensor: &SplitPotentialTensor, c: &GridField) -> GridField {
    tensor.apply(c)
}

fn square(f: &GridField) -> GridField {
    f.map(|v| v * v)
}

/// Capillary forcing of the momentum equations.
///
/// In 2D returns `ε(½(c_y²)_x − ½(c_x²)_x − (c_x c_y)_y)` and
/// `ε(½(c_x²)_y − ½(c_y²)_y − (c_x c_y)_x)`; in 1D the single term
/// `−(ε/2)(c_x²)_x`.
pub fn capillary_terms(c: &GridField, eps: f64) -> Vec<GridField> {
    use Axis::{X, Y};
    let grid = c.grid();
    if grid.dim() == 1 {
        let d1 = apply_d1(c, X);
        let mut f = apply_d1star(&square(&d1), X);
        f.scale(-0.5 * eps);
        return vec![f];
    }
    let d1x = apply_d1(c, X);
    let d1y = apply_d1(c, Y);
    let dsx = apply_dstar(c, X);
    let dsy = apply_dstar(c, Y);

    let cx2_x = apply_d1star(&square(&d1x), X);
    let cy2_y = apply_d1star(&square(&d1y), Y);
    let cy2_x = apply_d(&square(&dsy), X);
    let cx2_y = apply_d(&square(&dsx), Y);
    // ½ (S D* + D*) averages the transverse derivative onto the edge.
    let avg_y_on_x_edges = apply_shift(&dsy, X).zip_map(&dsy, |a, b| a + b);
    let avg_x_on_y_edges = apply_shift(&dsx, Y).zip_map(&dsx, |a, b| a + b);
    let mut cxcy_x = apply_d1star(&d1x.zip_map(&avg_y_on_x_edges, |a, b| a * b), X);
    cxcy_x.scale(0.5);
    let mut cxcy_y = apply_d1star(&d1y.zip_map(&avg_x_on_y_edges, |a, b| a * b), Y);
    cxcy_y.scale(0.5);

    let mut f2 = grid.zeros();
    let mut f3 = grid.zeros();
    for k in 0..grid.len() {
        f2[k] = eps * (0.5 * cy2_x[k] - 0.5 * cx2_x[k] - cxcy_y[k]);
        f3[k] = eps * (0.5 * cx2_y[k] - 0.5 * cy2_y[k] - cxcy_x[k]);
    }
    vec![f2, f3]
}

/// Matrix-free viscous operator acting on the velocity components.
///
/// 2D: `g₁ = (2ν+λ)E_x V₁ + νE_y V₁ + (ν+λ)D_x D_y V₂` and symmetrically for
/// `g₂`; 1D: `(2ν+λ) E V`.
pub fn viscous_block_apply(v: &[GridField], nu: f64, lambda: f64) -> Vec<GridField> {
    use Axis::{X, Y};
    let grid = v[0].grid();
    let bulk = 2.0 * nu + lambda;
    if grid.dim() == 1 {
        let mut g = apply_e(&v[0], X);
        g.scale(bulk);
        return vec![g];
    }
    let cross = nu + lambda;
    let exx = [apply_e(&v[0], X), apply_e(&v[1], X)];
    let eyy = [apply_e(&v[0], Y), apply_e(&v[1], Y)];
    let dxy = [apply_d(&apply_d(&v[0], Y), X), apply_d(&apply_d(&v[1], Y), X)];
    let mut g1 = grid.zeros();
    let mut g2 = grid.zeros();
    for k in 0..grid.len() {
        g1[k] = bulk * exx[0][k] + nu * eyy[0][k] + cross * dxy[1][k];
        g2[k] = cross * dxy[0][k] + nu * exx[1][k] + bulk * eyy[1][k];
    }
    vec![g1, g2]
}

/// Sparse form of [`viscous_block_apply`] with velocity components
/// interleaved: unknown `dim * k + a` is component `a` at node `k`.
pub fn viscous_block_csr(grid: Grid, nu: f64, lambda: f64) -> CsrMatrix {
    use Axis::{X, Y};
    let bulk = 2.0 * nu + lambda;
    if grid.dim() == 1 {
        return StencilOperator::new(StencilKind::E, X).to_csr(grid).scaled(bulk);
    }
    let cross = nu + lambda;
    let ex = StencilOperator::new(StencilKind::E, X).to_csr(grid);
    let ey = StencilOperator::new(StencilKind::E, Y).to_csr(grid);
    let dxy = StencilOperator::new(StencilKind::D, X)
        .to_csr(grid)
        .mul(&StencilOperator::new(StencilKind::D, Y).to_csr(grid));
    let a11 = ex.add(bulk, &ey, nu);
    let a22 = ex.add(nu, &ey, bulk);
    let mut triplets = Vec::new();
    let blocks = [(0, 0, &a11, 1.0), (1, 1, &a22, 1.0), (0, 1, &dxy, cross), (1, 0, &dxy, cross)];
    for (br, bc, mat, scale) in blocks {
        for r in 0..grid.len() {
            let (cols, vals) = mat.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                triplets.push((2 * r + br, 2 * c + bc, scale * v));
            }
        }
    }
    CsrMatrix::from_triplets(2 * grid.len(), triplets)
}

/// `M₊(C̃)C + M₋(C̃)C̃ − ε Δ_h(D(ϱ)⁻¹ Δ_h C)`, the split approximation of
/// `Δμ`. With `C̃ = C` this is the unsplit chemical-potential Laplacian.
pub fn chemical_potential_laplacian(c: &GridField, rho: &GridField, c_ref: &GridField, eps: f64) -> Result<GridField> {
    check_positive(rho)?;
    let plus = SplitPotentialTensor::assemble(c_ref, SplitSign::Plus);
    let minus = SplitPotentialTensor::assemble(c_ref, SplitSign::Minus);
    let mut out = plus.apply(c);
    out.axpy(1.0, &minus.apply(c_ref));
    let xi = apply_neumann_laplacian(c).zip_map(rho, |l, r| l / r);
    out.axpy(-eps, &apply_neumann_laplacian(&xi));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn g1(m: usize) -> Grid {
        Grid::new(1, m).unwrap()
    }

    fn g2(m: usize) -> Grid {
        Grid::new(2, m).unwrap()
    }

    fn random_field(grid: Grid, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> GridField {
        grid.sample(|_, _| rng.gen_range(lo..hi))
    }

    fn slope(e_coarse: f64, e_fine: f64) -> f64 {
        (e_coarse / e_fine).log2()
    }

    #[test]
    fn d1star_on_constants() {
        let g = g1(8);
        let f = GridField::constant(g, 3.0);
        let out = apply_d1star(&f, Axis::X);
        assert_eq!(out[0], 3.0 * 8.0);
        assert_eq!(out[7], -3.0 * 8.0);
        assert!(out[1..7].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn d1star_is_second_order_at_half_nodes() {
        // f vanishes at the ghost node x = -h/2 and at the last node.
        let err = |m: usize| {
            let g = g1(m);
            let h = g.h();
            let f = g.sample(|x, _| (PI * (x + 0.5 * h)).sin());
            let out = apply_d1star(&f, Axis::X);
            (0..m)
                .map(|i| (out[i] - PI * (PI * (g.node(i) - 0.5 * h + 0.5 * h)).cos()).abs())
                .fold(0.0, f64::max)
        };
        assert!(slope(err(32), err(64)) >= 1.9);
    }

    #[test]
    fn d_family_on_linears() {
        let g = g1(10);
        let f = g.sample(|x, _| x);
        let d = apply_d(&f, Axis::X);
        assert!(d.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let ds = apply_dstar(&f, Axis::X);
        assert!(ds[1..9].iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!((ds[0] - 0.5).abs() < 1e-12 && (ds[9] - 0.5).abs() < 1e-12);
        let s = apply_shift(&f, Axis::X);
        assert_eq!(s[9], 0.0);
        assert_eq!(s[3], f[4]);
    }

    #[test]
    fn shift_zeroes_the_last_row_in_2d() {
        let g = g2(5);
        let f = GridField::constant(g, 1.0);
        let sx = apply_shift(&f, Axis::X);
        let sy = apply_shift(&f, Axis::Y);
        for j in 0..5 {
            assert_eq!(sx[g.index(4, j)], 0.0);
            assert_eq!(sy[g.index(j, 4)], 0.0);
            assert_eq!(sx[g.index(2, j)], 1.0);
        }
    }

    #[test]
    fn dstar_convergence() {
        // Derivative of cos(pi x) vanishes on the walls.
        let errs = |m: usize| {
            let g = g1(m);
            let f = g.sample(|x, _| (PI * x).cos());
            let out = apply_dstar(&f, Axis::X);
            let exact = |i: usize| -PI * (PI * g.node(i)).sin();
            let interior = (1..m - 1).map(|i| (out[i] - exact(i)).abs()).fold(0.0, f64::max);
            let boundary = (out[0] - exact(0)).abs().max((out[m - 1] - exact(m - 1)).abs());
            (interior, boundary)
        };
        let (i32_, b32) = errs(32);
        let (i64_, b64) = errs(64);
        assert!(slope(i32_, i64_) >= 1.9);
        assert!(slope(b32, b64) >= 1.0);
    }

    #[test]
    fn e_matrix_matches_the_closed_form() {
        let m = 5;
        let g = g1(m);
        let h2 = g.h() * g.h();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(5, 5, &[
            -4.0, 4.0 / 3.0, 0.0, 0.0, 0.0,
            1.0, -2.0, 1.0, 0.0, 0.0,
            0.0, 1.0, -2.0, 1.0, 0.0,
            0.0, 0.0, 1.0, -2.0, 1.0,
            0.0, 0.0, 0.0, 4.0 / 3.0, -4.0,
        ]) / h2;
        let e = StencilOperator::new(StencilKind::E, Axis::X).to_csr(g).to_dense();
        assert!((e - expected).abs().max() < 1e-9);
        let zero = apply_e(&g.zeros(), Axis::X);
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn e_converges_under_no_slip_data() {
        let errs = |m: usize| {
            let g = g1(m);
            let f = g.sample(|x, _| (PI * x).sin());
            let out = apply_e(&f, Axis::X);
            let exact = |i: usize| -PI * PI * (PI * g.node(i)).sin();
            let interior = (1..m - 1).map(|i| (out[i] - exact(i)).abs()).fold(0.0, f64::max);
            let boundary = (out[0] - exact(0)).abs().max((out[m - 1] - exact(m - 1)).abs());
            (interior, boundary)
        };
        let (ia, ba) = errs(32);
        let (ib, bb) = errs(64);
        assert!((slope(ia, ib) - 2.0).abs() < 0.15);
        // the one-sided closure is exactly first order
        assert!(slope(ba, bb) >= 0.95);
    }

    #[test]
    fn laplacian_null_space_and_column_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = g2(9);
        let c = apply_neumann_laplacian(&GridField::constant(g, 2.5));
        assert!(c.iter().all(|&v| v == 0.0));
        for _ in 0..10 {
            let f = random_field(g, &mut rng, -1.0, 1.0);
            let norm = f.max_abs();
            let s: f64 = apply_neumann_laplacian(&f).iter().sum();
            assert!(s.abs() <= 1e-12 * norm * g.m() as f64 * g.m() as f64);
        }
    }

    #[test]
    fn laplacian_second_order() {
        let err = |m: usize| {
            let g = g2(m);
            let f = g.sample(|x, y| (PI * x).cos() * (PI * y).cos());
            let out = apply_neumann_laplacian(&f);
            (0..g.len())
                .map(|k| (out[k] + 2.0 * PI * PI * f[k]).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn laplacian_is_symmetric_negative_semidefinite() {
        for m in [4, 8] {
            let lap = neumann_laplacian_csr(g2(m)).to_dense();
            assert!((&lap - lap.transpose()).abs().max() < 1e-9);
            let eig = SymmetricEigen::new(lap);
            assert!(eig.eigenvalues.max() <= 1e-9);
        }
    }

    #[test]
    fn matrix_free_matches_sparse_assembly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = g2(6);
        let f = random_field(g, &mut rng, -1.0, 1.0);
        for kind in [
            StencilKind::D1Star,
            StencilKind::D1,
            StencilKind::D,
            StencilKind::DStar,
            StencilKind::Shift,
            StencilKind::E,
            StencilKind::Laplacian,
        ] {
            for axis in [Axis::X, Axis::Y] {
                let op = StencilOperator::new(kind, axis);
                let a = op.apply(&f);
                let mut b = vec![0.0; g.len()];
                crate::linsolve::sparse::LinearOperator::apply(&op.to_csr(g), &f, &mut b);
                for k in 0..g.len() {
                    assert!((a[k] - b[k]).abs() < 1e-9, "{kind:?} {axis:?}");
                }
            }
        }
    }

    #[test]
    fn plus_tensor_is_twice_the_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = g2(7);
        let c_ref = random_field(g, &mut rng, -3.0, 3.0);
        let c = random_field(g, &mut rng, -1.0, 1.0);
        let t = assemble_split_tensor(&c_ref, SplitSign::Plus);
        assert!(t.edge_weights(Axis::X).iter().enumerate().all(|(k, &w)| {
            let (i, _) = g.coords(k);
            if i == 6 {
                w == 0.0
            } else {
                w == 2.0
            }
        }));
        let lhs = apply_split_tensor(&t, &c);
        let rhs = apply_neumann_laplacian(&c);
        for k in 0..g.len() {
            assert!((lhs[k] - 2.0 * rhs[k]).abs() <= 1e-12 * rhs.max_abs().max(1.0));
        }
    }

    #[test]
    fn minus_tensor_weights_for_constant_reference() {
        let g = g2(5);
        let c0 = 0.4;
        let t = assemble_split_tensor(&GridField::constant(g, c0), SplitSign::Minus);
        for axis in [Axis::X, Axis::Y] {
            for (k, &w) in t.edge_weights(axis).iter().enumerate() {
                let (i, j) = g.coords(k);
                let last = match axis {
                    Axis::X => i == 4,
                    Axis::Y => j == 4,
                };
                if !last {
                    assert!((w - 3.0 * (c0 * c0 - 1.0)).abs() < 1e-15);
                    assert!(w <= 0.0);
                }
            }
        }
    }

    #[test]
    fn minus_tensor_is_symmetric_positive_semidefinite() {
        // Weights are non-positive on [-1, 1], so -D1^T W D1 is anti-diffusive.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g = g2(6);
        for _ in 0..5 {
            let c_ref = random_field(g, &mut rng, -1.0, 1.0);
            let t = assemble_split_tensor(&c_ref, SplitSign::Minus);
            let dense = t.to_csr().to_dense();
            assert!((&dense - dense.transpose()).abs().max() < 1e-9);
            let scale = dense.abs().max();
            let eig = SymmetricEigen::new(dense);
            assert!(eig.eigenvalues.min() >= -1e-12 * scale);
            // matrix-free agrees with the sparse form
            let c = random_field(g, &mut rng, -1.0, 1.0);
            let mut y = vec![0.0; g.len()];
            crate::linsolve::sparse::LinearOperator::apply(&t.to_csr(), &c, &mut y);
            let z = t.apply(&c);
            for k in 0..g.len() {
                assert!((y[k] - z[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn capillary_vanishes_on_constants() {
        let g = g2(8);
        for f in capillary_terms(&GridField::constant(g, 0.3), 1e-2) {
            assert!(f.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn capillary_for_x_only_concentration() {
        let eps = 1e-2;
        let err = |m: usize| {
            let g = g2(m);
            let c = g.sample(|x, _| (PI * x).cos());
            let f = capillary_terms(&c, eps);
            assert!(f[1].max_abs() == 0.0);
            // -eps/2 (c_x^2)_x = -eps pi^3 sin cos
            let mut e = 0.0f64;
            for i in 1..m - 1 {
                for j in 0..m {
                    let x = g.node(i);
                    let exact = -eps * PI.powi(3) * (PI * x).sin() * (PI * x).cos();
                    e = e.max((f[0][g.index(i, j)] - exact).abs());
                }
            }
            e
        };
        assert!(slope(err(32), err(64)) >= 1.9);
    }

    #[test]
    fn capillary_transposes_with_the_axes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = g2(7);
        let c = random_field(g, &mut rng, -1.0, 1.0);
        let ct = GridField::new(g, (0..g.len()).map(|k| {
            let (i, j) = g.coords(k);
            c[g.index(j, i)]
        }).collect());
        let f = capillary_terms(&c, 0.1);
        let ft = capillary_terms(&ct, 0.1);
        for i in 0..7 {
            for j in 0..7 {
                assert!((ft[0][g.index(i, j)] - f[1][g.index(j, i)]).abs() < 1e-12);
                assert!((ft[1][g.index(i, j)] - f[0][g.index(j, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn capillary_1d() {
        let g = g1(16);
        let c = g.sample(|x, _| (PI * x).cos());
        let f = capillary_terms(&c, 0.5);
        let d1 = apply_d1(&c, Axis::X);
        let expected = apply_d1star(&d1.map(|v| v * v), Axis::X);
        for k in 0..16 {
            assert!((f[0][k] + 0.25 * expected[k]).abs() < 1e-12);
        }
    }

    fn e_dense(m: usize) -> DMatrix<f64> {
        let h = 1.0 / m as f64;
        let mut e = DMatrix::zeros(m, m);
        for i in 0..m {
            if i == 0 {
                e[(0, 0)] = -4.0;
                e[(0, 1)] = 4.0 / 3.0;
            } else if i == m - 1 {
                e[(i, i)] = -4.0;
                e[(i, i - 1)] = 4.0 / 3.0;
            } else {
                e[(i, i - 1)] = 1.0;
                e[(i, i)] = -2.0;
                e[(i, i + 1)] = 1.0;
            }
        }
        e / (h * h)
    }

    fn d_dense(m: usize) -> DMatrix<f64> {
        let h = 1.0 / m as f64;
        let mut d = DMatrix::zeros(m, m);
        d[(0, 0)] = -1.0;
        d[(0, 1)] = 1.0;
        d[(m - 1, m - 2)] = -1.0;
        d[(m - 1, m - 1)] = 1.0;
        for i in 1..m - 1 {
            d[(i, i - 1)] = -0.5;
            d[(i, i + 1)] = 0.5;
        }
        d / h
    }

    #[test]
    fn viscous_block_matches_kronecker_assembly() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let m = 4;
        let g = g2(m);
        let (nu, lambda) = (0.3, 0.05);
        let id = DMatrix::<f64>::identity(m, m);
        let (e, d) = (e_dense(m), d_dense(m));
        // x is the slow index: E_x = E ⊗ I, E_y = I ⊗ E.
        let ex = e.kronecker(&id);
        let ey = id.kronecker(&e);
        let dd = d.kronecker(&d);
        let a11 = &ex * (2.0 * nu + lambda) + &ey * nu;
        let a22 = &ex * nu + &ey * (2.0 * nu + lambda);
        let a12 = &dd * (nu + lambda);
        let v1 = random_field(g, &mut rng, -1.0, 1.0);
        let v2 = random_field(g, &mut rng, -1.0, 1.0);
        let x1 = nalgebra::DVector::from_column_slice(&v1);
        let x2 = nalgebra::DVector::from_column_slice(&v2);
        let g1_ref = &a11 * &x1 + &a12 * &x2;
        let g2_ref = &a12 * &x1 + &a22 * &x2;
        let out = viscous_block_apply(&[v1.clone(), v2.clone()], nu, lambda);
        let scale = g1_ref.amax().max(g2_ref.amax());
        for k in 0..g.len() {
            assert!((out[0][k] - g1_ref[k]).abs() <= 1e-13 * scale);
            assert!((out[1][k] - g2_ref[k]).abs() <= 1e-13 * scale);
        }
        // interleaved sparse assembly
        let csr = viscous_block_csr(g, nu, lambda).to_dense();
        for r in 0..g.len() {
            for c in 0..g.len() {
                assert!((csr[(2 * r, 2 * c)] - a11[(r, c)]).abs() < 1e-9);
                assert!((csr[(2 * r, 2 * c + 1)] - a12[(r, c)]).abs() < 1e-9);
                assert!((csr[(2 * r + 1, 2 * c)] - a12[(r, c)]).abs() < 1e-9);
                assert!((csr[(2 * r + 1, 2 * c + 1)] - a22[(r, c)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn viscous_block_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g = g2(6);
        let zero = viscous_block_apply(&[g.zeros(), g.zeros()], 0.1, 0.01);
        assert!(zero.iter().all(|f| f.max_abs() == 0.0));
        let v = [random_field(g, &mut rng, -1.0, 1.0), random_field(g, &mut rng, -1.0, 1.0)];
        let inviscid = viscous_block_apply(&v, 0.0, 0.0);
        assert!(inviscid.iter().all(|f| f.max_abs() == 0.0));
    }

    #[test]
    fn chemical_potential_of_constant_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let g = g2(8);
        let c = GridField::constant(g, 0.2);
        let rho = random_field(g, &mut rng, 0.5, 2.0);
        let out = chemical_potential_laplacian(&c, &rho, &c, 1e-3).unwrap();
        assert!(out.max_abs() < 1e-10);
    }

    #[test]
    fn chemical_potential_matches_dense_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let m = 6;
        let g = g2(m);
        let eps = 1e-2;
        let h2 = g.h() * g.h();
        let c = random_field(g, &mut rng, -1.0, 1.0);
        let rho = GridField::constant(g, 1.0);
        // edge-weighted divergence form with the full derivative psi''
        let mut split = DMatrix::zeros(g.len(), g.len());
        for i in 0..m {
            for j in 0..m {
                let k = g.index(i, j);
                for nb in [(i + 1 < m).then(|| g.index(i + 1, j)), (j + 1 < m).then(|| g.index(i, j + 1))]
                    .into_iter()
                    .flatten()
                {
                    let w = 0.5 * (3.0 * c[k] * c[k] - 1.0 + 3.0 * c[nb] * c[nb] - 1.0) / h2;
                    split[(k, k)] -= w;
                    split[(nb, nb)] -= w;
                    split[(k, nb)] += w;
                    split[(nb, k)] += w;
                }
            }
        }
        let lap = neumann_laplacian_csr(g).to_dense();
        let cv = nalgebra::DVector::from_column_slice(&c);
        let expected = &split * &cv - (&lap * &lap * &cv) * eps;
        let out = chemical_potential_laplacian(&c, &rho, &c, eps).unwrap();
        let scale = expected.amax();
        for k in 0..g.len() {
            assert!((out[k] - expected[k]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn split_form_approximates_the_potential_laplacian() {
        // With a smooth C the edge-averaged form is a second-order
        // approximation of the Laplacian of psi'(c).
        let err = |m: usize| {
            let g = g2(m);
            let c = g.sample(|x, y| 0.8 * (PI * x).cos() * (PI * y).cos());
            let plus = assemble_split_tensor(&c, SplitSign::Plus).apply(&c);
            let minus = assemble_split_tensor(&c, SplitSign::Minus).apply(&c);
            let direct = apply_neumann_laplacian(&c.map(|v| v * v * v - v));
            (0..g.len()).map(|k| (plus[k] + minus[k] - direct[k]).abs()).fold(0.0, f64::max)
        };
        assert!(slope(err(32), err(64)) >= 1.9);
    }

    #[test]
    fn chemical_potential_rejects_bad_density() {
        let g = g2(4);
        let mut rho = GridField::constant(g, 1.0);
        rho[5] = 0.0;
        let c = g.zeros();
        assert!(chemical_potential_laplacian(&c, &rho, &c, 1e-3).is_err());
    }
}
