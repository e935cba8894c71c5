//! Linearly implicit-explicit partitioned Runge-Kutta stepping.
//!
//! Every stage solves, in order, for the density (explicitly), the
//! concentration and the velocity. Stage derivatives `𝒦ⱼ = ℒ̃(Ũ⁽ʲ⁾, U⁽ʲ⁾)`
//! are re-evaluated from the solved stage values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::convection::{char_speed, convective_rhs_with, Boundary};
use crate::error::{Error, Result};
use crate::fields::{check_positive, GridField, PhysParams, State};
use crate::linsolve::{solve_stage, SolverSettings, StageSystem};
use crate::ops::{capillary_terms, SplitPotentialTensor, SplitSign};
use crate::semidisc::{rhs_full, rhs_split, Forcing};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "ee-ie")]
    EeIe,
    #[serde(rename = "dirksa")]
    Dirksa,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ee-ie" | "eeie" | "ee-ei" => Ok(Scheme::EeIe),
            "dirksa" | "*-dirksa" => Ok(Scheme::Dirksa),
            _ => Err(Error::UnknownScheme(s.to_string())),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::EeIe => "ee-ie",
            Scheme::Dirksa => "dirksa",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tableau {
    pub gamma: Vec<f64>,
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
}

impl Tableau {
    pub fn stages(&self) -> usize {
        self.beta.len()
    }

    pub fn is_stiffly_accurate(&self) -> bool {
        self.alpha.last() == Some(&self.beta)
    }
}

/// Explicit and diagonally implicit tableaus sharing their weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ButcherPair {
    pub scheme: Scheme,
    pub explicit: Tableau,
    pub implicit: Tableau,
}

impl ButcherPair {
    pub fn stages(&self) -> usize {
        self.implicit.stages()
    }
}

pub fn tableau(scheme: Scheme) -> ButcherPair {
    match scheme {
        Scheme::EeIe => ButcherPair {
            scheme,
            explicit: Tableau { gamma: vec![0.0], alpha: vec![vec![0.0]], beta: vec![1.0] },
            implicit: Tableau { gamma: vec![1.0], alpha: vec![vec![1.0]], beta: vec![1.0] },
        },
        Scheme::Dirksa => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            ButcherPair {
                scheme,
                explicit: Tableau {
                    gamma: vec![0.0, 1.0 + s],
                    alpha: vec![vec![0.0, 0.0], vec![1.0 + s, 0.0]],
                    beta: vec![s, 1.0 - s],
                },
                implicit: Tableau {
                    gamma: vec![1.0 - s, 1.0],
                    alpha: vec![vec![1.0 - s, 0.0], vec![s, 1.0 - s]],
                    beta: vec![s, 1.0 - s],
                },
            }
        }
    }
}

/// Solver iterations spent in one step, per stage.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepStats {
    pub concentration_iters: Vec<usize>,
    pub velocity_iters: Vec<usize>,
}

impl StepStats {
    pub fn total_concentration(&self) -> usize {
        self.concentration_iters.iter().sum()
    }

    pub fn total_velocity(&self) -> usize {
        self.velocity_iters.iter().sum()
    }
}

/// A system `U' = ℒ̃(Ũ, U)` whose stages can be solved for `U`.
pub trait PartitionedSystem {
    type State: Clone;

    /// `ℒ̃(Ũ, U)` at time `t`.
    fn rhs(&self, tilde: &Self::State, u: &Self::State, t: f64) -> Result<Self::State>;

    /// Solves `U = base + τ ℒ̃(Ũ, U)` at time `t`, starting from `guess`.
    fn solve_stage(
        &self,
        base: &Self::State,
        tilde: &Self::State,
        tau: f64,
        t: f64,
        guess: &Self::State,
        stats: &mut StepStats,
    ) -> Result<Self::State>;

    /// `y += a x`.
    fn axpy(y: &mut Self::State, a: f64, x: &Self::State);
}

#[derive(Clone, Debug)]
pub struct StepOutcome<S> {
    pub state: S,
    /// The solved last stage `U⁽ˢ⁾`.
    pub last_stage: S,
    pub stats: StepStats,
}

/// One step of the partitioned scheme from `(t, u)` with step `dt`.
pub fn imex_step<P: PartitionedSystem>(
    system: &P,
    u: &P::State,
    t: f64,
    dt: f64,
    pair: &ButcherPair,
) -> Result<StepOutcome<P::State>> {
    let (ex, im) = (&pair.explicit, &pair.implicit);
    let mut stats = StepStats::default();
    let mut k: Vec<P::State> = Vec::with_capacity(pair.stages());
    let mut guess = u.clone();
    for i in 0..pair.stages() {
        let wrap = |e: Error| Error::Step { t, stage: i + 1, source: Box::new(e) };
        let mut tilde = u.clone();
        let mut base = u.clone();
        for (j, kj) in k.iter().enumerate() {
            P::axpy(&mut tilde, dt * ex.alpha[i][j], kj);
            P::axpy(&mut base, dt * im.alpha[i][j], kj);
        }
        let ti = t + im.gamma[i] * dt;
        let stage = system
            .solve_stage(&base, &tilde, dt * im.alpha[i][i], ti, &guess, &mut stats)
            .map_err(wrap)?;
        k.push(system.rhs(&tilde, &stage, ti).map_err(wrap)?);
        guess = stage;
    }
    let mut next = u.clone();
    for (j, kj) in k.iter().enumerate() {
        P::axpy(&mut next, dt * im.beta[j], kj);
    }
    Ok(StepOutcome { state: next, last_stage: guess, stats })
}

/// The compressible CHNS semidiscretization with its two stage solvers.
pub struct Chns<'a> {
    pub params: PhysParams,
    pub forcing: Option<&'a dyn Forcing>,
    pub solver: SolverSettings,
}

impl<'a> Chns<'a> {
    pub fn new(params: PhysParams, solver: SolverSettings) -> Self {
        Self { params, forcing: None, solver }
    }

    pub fn with_forcing(mut self, forcing: &'a dyn Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn step(&self, u: &State, t: f64, dt: f64, pair: &ButcherPair) -> Result<StepOutcome<State>> {
        imex_step(self, u, t, dt, pair)
    }
}

impl PartitionedSystem for Chns<'_> {
    type State = State;

    fn rhs(&self, tilde: &State, u: &State, t: f64) -> Result<State> {
        rhs_split(tilde, u, &self.params, t, self.forcing)
    }

    fn solve_stage(
        &self,
        base: &State,
        tilde: &State,
        tau: f64,
        t: f64,
        guess: &State,
        stats: &mut StepStats,
    ) -> Result<State> {
        let p = &self.params;
        let grid = base.grid();
        let dim = grid.dim();
        let forcing = self.forcing.map(|f| f.eval(grid, t, p));
        let alpha = char_speed(tilde, p.gamma)?;
        let mut explicit = convective_rhs_with(tilde, p.gamma, alpha, Boundary::Wall)?;
        if let Some(f) = &forcing {
            explicit.axpy(1.0, f);
        }
        let c_ref = tilde.concentration()?;

        let mut rho = base.rho.clone();
        rho.axpy(tau, &explicit.rho);
        check_positive(&rho)?;

        let mut bq = base.q.clone();
        bq.axpy(tau, &explicit.q);
        bq.axpy(tau, &SplitPotentialTensor::assemble(&c_ref, SplitSign::Minus).apply(&c_ref));
        let (v_guess, c_guess) = guess.primitives()?;
        let mut c = c_guess.into_values();
        let sys = StageSystem::Concentration { rho: rho.clone(), tau, eps: p.eps };
        stats.concentration_iters.push(solve_stage(&sys, &bq, &mut c, &self.solver)?.iterations);
        let c = GridField::new(grid, c);

        let capillary = capillary_terms(&c, p.eps);
        let mut bm = vec![0.0; dim * grid.len()];
        for a in 0..dim {
            let mut rhs = base.m[a].clone();
            rhs.axpy(tau, &explicit.m[a]);
            rhs.axpy(tau, &capillary[a]);
            if a == dim - 1 {
                rhs.axpy(tau * p.g, &rho);
            }
            for k in 0..grid.len() {
                bm[dim * k + a] = rhs[k];
            }
        }
        let mut v = vec![0.0; dim * grid.len()];
        for (a, va) in v_guess.iter().enumerate() {
            for k in 0..grid.len() {
                v[dim * k + a] = va[k];
            }
        }
        let sys = StageSystem::Velocity { rho: rho.clone(), tau, nu: p.nu, lambda: p.lambda };
        stats.velocity_iters.push(solve_stage(&sys, &bm, &mut v, &self.solver)?.iterations);
        let v: Vec<GridField> = (0..dim)
            .map(|a| GridField::new(grid, (0..grid.len()).map(|k| v[dim * k + a]).collect()))
            .collect();
        Ok(State::from_primitives(rho, &v, &c))
    }

    fn axpy(y: &mut State, a: f64, x: &State) {
        y.axpy(a, x);
    }
}

/// Forward Euler on the full semidiscretization.
pub fn explicit_euler_step(u: &State, t: f64, dt: f64, params: &PhysParams, forcing: Option<&dyn Forcing>) -> Result<State> {
    let mut next = u.clone();
    next.axpy(dt, &rhs_full(u, params, t, forcing)?);
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use crate::linsolve::SolverKind;
    use crate::manufactured::{exact_state, ManufacturedForcing};
    use nalgebra::{DMatrix, DVector};
    use std::f64::consts::PI;

    /// `u' = λₑ ũ + λᵢ u` with the explicit part in the tilde slot.
    struct Scalar {
        explicit: f64,
        implicit: f64,
    }

    impl PartitionedSystem for Scalar {
        type State = f64;

        fn rhs(&self, tilde: &f64, u: &f64, _t: f64) -> Result<f64> {
            Ok(self.explicit * tilde + self.implicit * u)
        }

        fn solve_stage(&self, base: &f64, tilde: &f64, tau: f64, _t: f64, _g: &f64, _s: &mut StepStats) -> Result<f64> {
            Ok((base + tau * self.explicit * tilde) / (1.0 - tau * self.implicit))
        }

        fn axpy(y: &mut f64, a: f64, x: &f64) {
            *y += a * x;
        }
    }

    fn settings() -> SolverSettings {
        SolverSettings { kind: SolverKind::Multigrid, rel_tol: 1e-12, max_iters: 100 }
    }

    fn params() -> PhysParams {
        PhysParams { gamma: 5.0 / 3.0, nu: 0.1, lambda: 0.01, eps: 1e-3, g: -10.0 }
    }

    #[test]
    fn tableau_entries() {
        let d = tableau(Scheme::Dirksa);
        assert!((d.implicit.alpha[1][0] - 0.7071067811865476).abs() < 1e-15);
        assert!((d.implicit.alpha[1][1] - 0.2928932188134524).abs() < 1e-15);
        let e = tableau(Scheme::EeIe);
        assert_eq!(e.stages(), 1);
        assert_eq!(e.implicit.alpha[0][0], 1.0);
        for pair in [d, e] {
            assert!((pair.implicit.beta.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert_eq!(pair.explicit.beta, pair.implicit.beta);
            assert!(pair.implicit.is_stiffly_accurate());
            for (i, row) in pair.explicit.alpha.iter().enumerate() {
                assert!(row[i..].iter().all(|&a| a == 0.0));
                assert!(pair.implicit.alpha[i][i] >= 0.0);
            }
        }
        assert!("DIRKSA".parse::<Scheme>().is_ok());
        assert!(matches!("rk4".parse::<Scheme>(), Err(Error::UnknownScheme(_))));
    }

    #[test]
    fn implicit_stability_function() {
        // R(z) = 1 + z βᵀ(I − zα)⁻¹𝟙, evaluated densely
        let pair = tableau(Scheme::Dirksa);
        let a = DMatrix::from_fn(2, 2, |i, j| pair.implicit.alpha[i][j]);
        let b = DVector::from_column_slice(&pair.implicit.beta);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for z in [-1.0, -0.1, -10.0, -1000.0] {
            let y = (DMatrix::identity(2, 2) - z * &a).lu().solve(&DVector::from_element(2, 1.0)).unwrap();
            let r = 1.0 + z * b.dot(&y);
            let closed = (1.0 + (2.0 * s - 1.0) * z) / (1.0 - (1.0 - s) * z).powi(2);
            assert!((r - closed).abs() < 1e-14);
            let out = imex_step(&Scalar { explicit: 0.0, implicit: z }, &1.0, 0.0, 1.0, &pair).unwrap();
            assert!((out.state - r).abs() < 1e-14, "z = {z}");
        }
        let ee = tableau(Scheme::EeIe);
        let out = imex_step(&Scalar { explicit: 0.0, implicit: -1.0 }, &1.0, 0.0, 1.0, &ee).unwrap();
        assert!((out.state - 0.5).abs() < 1e-15);
    }

    #[test]
    fn explicit_stability_function() {
        let pair = tableau(Scheme::Dirksa);
        for z in [-1.0, -0.5, 0.3] {
            let out = imex_step(&Scalar { explicit: z, implicit: 0.0 }, &1.0, 0.0, 1.0, &pair).unwrap();
            assert!((out.state - (1.0 + z + 0.5 * z * z)).abs() < 1e-14);
        }
    }

    #[test]
    fn partitioned_scheme_is_second_order() {
        let sys = Scalar { explicit: -0.7, implicit: -2.0 };
        let exact = (-2.7f64).exp();
        let pair = tableau(Scheme::Dirksa);
        let err = |n: usize| {
            let dt = 1.0 / n as f64;
            let mut u = 1.0;
            for step in 0..n {
                u = imex_step(&sys, &u, step as f64 * dt, dt, &pair).unwrap().state;
            }
            (u - exact).abs()
        };
        let order = (err(40) / err(80)).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    fn test_state(grid: Grid) -> State {
        let rho = grid.sample(|x, y| 0.1 * (2.0 * PI * x).cos() * (PI * y).cos() + 1.25);
        let v = [
            grid.sample(|x, y| (PI * x).sin() * (PI * y).sin()),
            grid.sample(|x, y| (PI * x).sin() * (2.0 * PI * y).sin()),
        ];
        let c = grid.sample(|x, y| 0.1 * (PI * x).cos() * (PI * y).cos());
        State::from_primitives(rho, &v, &c)
    }

    #[test]
    fn zero_right_hand_side_is_a_fixed_point() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 8).unwrap();
            let v: Vec<GridField> = (0..dim).map(|_| g.zeros()).collect();
            let u = State::from_primitives(GridField::constant(g, 1.0), &v, &GridField::constant(g, 0.2));
            let chns = Chns::new(PhysParams { g: 0.0, ..params() }, settings());
            for scheme in [Scheme::EeIe, Scheme::Dirksa] {
                let out = chns.step(&u, 0.0, 1e-2, &tableau(scheme)).unwrap();
                let mut d = out.state.clone();
                d.axpy(-1.0, &u);
                assert!(d.max_abs() < 1e-13, "{scheme} in {dim}D");
            }
        }
    }

    #[test]
    fn stiffly_accurate_last_stage() {
        let g = Grid::new(2, 16).unwrap();
        let u = test_state(g);
        let chns = Chns::new(params(), settings());
        for scheme in [Scheme::EeIe, Scheme::Dirksa] {
            let out = chns.step(&u, 0.0, 2e-3, &tableau(scheme)).unwrap();
            let mut d = out.state.clone();
            d.axpy(-1.0, &out.last_stage);
            assert!(d.max_abs() <= 1e-12 * out.state.max_abs(), "{scheme}: {}", d.max_abs());
        }
    }

    #[test]
    fn steps_conserve_mass_and_partial_density() {
        let g = Grid::new(2, 16).unwrap();
        let u = test_state(g);
        let chns = Chns::new(params(), settings());
        let out = chns.step(&u, 0.0, 2e-3, &tableau(Scheme::Dirksa)).unwrap();
        let sum = |f: &GridField| f.iter().sum::<f64>();
        assert!((sum(&out.state.rho) - sum(&u.rho)).abs() < 1e-11 * sum(&u.rho));
        assert!((sum(&out.state.q) - sum(&u.q)).abs() < 1e-11 * sum(&u.rho));
    }

    /// Carries `Ũⁿ` separately, as in the doubled system.
    fn doubled_step(chns: &Chns, u: &State, tilde_n: &State, t: f64, dt: f64, pair: &ButcherPair) -> (State, State) {
        let mut k: Vec<State> = Vec::new();
        let mut guess = u.clone();
        let mut stats = StepStats::default();
        for i in 0..pair.stages() {
            let mut tilde = tilde_n.clone();
            let mut base = u.clone();
            for (j, kj) in k.iter().enumerate() {
                tilde.axpy(dt * pair.explicit.alpha[i][j], kj);
                base.axpy(dt * pair.implicit.alpha[i][j], kj);
            }
            let ti = t + pair.implicit.gamma[i] * dt;
            let stage = chns.solve_stage(&base, &tilde, dt * pair.implicit.alpha[i][i], ti, &guess, &mut stats).unwrap();
            k.push(chns.rhs(&tilde, &stage, ti).unwrap());
            guess = stage;
        }
        let (mut next, mut next_tilde) = (u.clone(), tilde_n.clone());
        for (j, kj) in k.iter().enumerate() {
            next.axpy(dt * pair.implicit.beta[j], kj);
            next_tilde.axpy(dt * pair.explicit.beta[j], kj);
        }
        (next, next_tilde)
    }

    #[test]
    fn doubling_variables_is_unnecessary() {
        let g = Grid::new(2, 8).unwrap();
        let chns = Chns::new(params(), settings());
        let pair = tableau(Scheme::Dirksa);
        let (mut u, mut doubled, mut tilde) = (test_state(g), test_state(g), test_state(g));
        for n in 0..5 {
            let t = n as f64 * 1e-3;
            u = chns.step(&u, t, 1e-3, &pair).unwrap().state;
            (doubled, tilde) = doubled_step(&chns, &doubled, &tilde, t, 1e-3, &pair);
            assert_eq!(u, doubled);
            assert_eq!(tilde, doubled);
        }
    }

    fn dense_laplacian(m: usize) -> DMatrix<f64> {
        // Neumann second difference, assembled from its definition
        let h = 1.0 / m as f64;
        let mut a = DMatrix::zeros(m, m);
        for i in 0..m {
            if i > 0 {
                a[(i, i - 1)] = 1.0;
                a[(i, i)] -= 1.0;
            }
            if i + 1 < m {
                a[(i, i + 1)] = 1.0;
                a[(i, i)] -= 1.0;
            }
        }
        a / (h * h)
    }

    #[test]
    fn ee_ie_concentration_update_matches_dense_assembly() {
        let m = 8;
        let g = Grid::new(2, m).unwrap();
        let c0 = g.sample(|x, y| 0.3 * (PI * x).cos() * (2.0 * PI * y).cos() + 0.1 * (3.0 * PI * x).cos());
        let zeros = [g.zeros(), g.zeros()];
        let u = State::from_primitives(GridField::constant(g, 1.0), &zeros, &c0);
        let p = PhysParams { g: 0.0, ..params() };
        let dt = 1e-3;
        let out = Chns::new(p, settings()).step(&u, 0.0, dt, &tableau(Scheme::EeIe)).unwrap();

        let l1 = dense_laplacian(m);
        let id = DMatrix::<f64>::identity(m, m);
        let lap = l1.kronecker(&id) + id.kronecker(&l1);
        // M₋(C)C: edge weights ½(φ₋'(cₗ) + φ₋'(cᵣ)) times the difference quotient
        let h = g.h();
        let phi = |c: f64| 3.0 * c * c - 3.0;
        let mut minus = DVector::zeros(g.len());
        for k in 0..g.len() {
            let (i, j) = g.coords(k);
            for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni < 0 || nj < 0 || ni >= m as i64 || nj >= m as i64 {
                    continue;
                }
                let n = g.index(ni as usize, nj as usize);
                minus[k] += 0.5 * (phi(c0[k]) + phi(c0[n])) * (c0[n] - c0[k]) / (h * h);
            }
        }
        let a = DMatrix::<f64>::identity(g.len(), g.len()) - 2.0 * dt * &lap + dt * p.eps * &lap * &lap;
        // at rest the Lax-Friedrichs splitting still diffuses q
        let conv = crate::convection::convective_rhs(&u, p.gamma).unwrap();
        let rhs = DVector::from_column_slice(&c0) + dt * (minus + DVector::from_column_slice(&conv.q));
        let expected = a.lu().solve(&rhs).unwrap();
        for k in 0..g.len() {
            assert!((out.state.q[k] - expected[k]).abs() < 1e-11, "node {k}: {} vs {}", out.state.q[k], expected[k]);
        }
        // density is unchanged at rest with constant density and no gravity
        assert!(out.state.rho.iter().all(|&r| (r - 1.0).abs() < 1e-14));
    }

    #[test]
    fn manufactured_solution_converges_in_time_and_space() {
        let p = PhysParams { gamma: 5.0 / 3.0, nu: 1.0, lambda: 0.1, eps: 1e-4, g: -10.0 };
        let forcing = ManufacturedForcing;
        let err = |m: usize| {
            let g = Grid::new(2, m).unwrap();
            let chns = Chns::new(p, settings()).with_forcing(&forcing);
            let pair = tableau(Scheme::Dirksa);
            let mut u = exact_state(g, 0.0);
            let t_final = 2e-3;
            let steps = m / 4;
            let dt = t_final / steps as f64;
            for n in 0..steps {
                u = chns.step(&u, n as f64 * dt, dt, &pair).unwrap().state;
            }
            let mut d = u.clone();
            d.axpy(-1.0, &exact_state(g, t_final));
            d.components().map(|f| f.iter().map(|v| v.abs()).sum::<f64>()).sum::<f64>() / g.len() as f64
        };
        let order = (err(16) / err(32)).log2();
        assert!(order > 1.7, "order {order}");
    }

    #[test]
    fn explicit_euler_matches_the_right_hand_side() {
        let g = Grid::new(1, 16).unwrap();
        let u = State::from_primitives(
            g.sample(|x, _| 0.1 * (2.0 * PI * x).cos() + 1.25),
            &[g.sample(|x, _| (PI * x).sin())],
            &g.sample(|x, _| 0.1 * (PI * x).cos()),
        );
        let dt = 1e-6;
        let next = explicit_euler_step(&u, 0.0, dt, &params(), None).unwrap();
        let rhs = rhs_full(&u, &params(), 0.0, None).unwrap();
        for (a, (b, r)) in next.components().zip(u.components().zip(rhs.components())) {
            for k in 0..16 {
                assert_eq!(a[k], b[k] + dt * r[k]);
            }
        }
    }

    #[test]
    fn failing_stage_is_reported_with_its_index() {
        let g = Grid::new(2, 8).unwrap();
        let mut u = test_state(g);
        u.rho[3] = -1.0;
        let err = Chns::new(params(), settings()).step(&u, 0.5, 1e-3, &tableau(Scheme::Dirksa)).unwrap_err();
        assert!(matches!(err, Error::Step { stage: 1, .. }));
        assert!(matches!(err.root(), Error::NonPositiveDensity { .. }));
        assert!(err.is_recoverable());
    }
}
