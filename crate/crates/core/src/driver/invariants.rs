//! Property tests across the driver, stepping and spinodal modules.

use crate::convection::char_speed;
use crate::driver::diagnostics::{global_error, Totals};
use crate::driver::spinodal::{growth_exponent, predict_spinodal_mode};
use crate::driver::timestep::{select_dt, CflDecision, CflPolicy};
use crate::imex::{tableau, Chns, Scheme};
use crate::linsolve::SolverSettings;
use crate::fields::{Grid, GridField, PhysParams, State};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(dim: usize, m: usize, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Grid::new(dim, m).unwrap();
    let rho = g.sample(|_, _| rng.gen_range(0.7..1.5));
    let v: Vec<GridField> = (0..dim).map(|_| g.sample(|_, _| rng.gen_range(-0.5..0.5))).collect();
    let c = g.sample(|_, _| rng.gen_range(-0.9..0.9));
    State::from_primitives(rho, &v, &c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dt_times_speed_over_h_is_cfl(dim in 1usize..=2, m in 4usize..40, seed in any::<u64>(), cfl in 0.01f64..2.0) {
        let s = random_state(dim, m, seed);
        let gamma = 5.0 / 3.0;
        let dt = select_dt(&s, cfl, gamma).unwrap();
        let back = dt * char_speed(&s, gamma).unwrap() / s.grid().h();
        prop_assert!((back - cfl).abs() <= 1e-14 * cfl);
    }

    #[test]
    fn rejections_shrink_and_acceptances_stay_capped(
        max_c in 0.0f64..3.0,
        cfl in 0.001f64..1.0,
        cap in 0.001f64..1.0,
        backoff in 0.1f64..0.9,
    ) {
        let policy = CflPolicy { c_threshold: 1.5, cfl_max: cap, backoff, recovery: 1.1 };
        match policy.adapt(max_c, cfl) {
            CflDecision::Reject { retry_cfl } => {
                prop_assert!(max_c >= 1.5);
                prop_assert!(retry_cfl < cfl);
            }
            CflDecision::Accept { next_cfl } => {
                prop_assert!(max_c < 1.5);
                prop_assert!(next_cfl <= cap && next_cfl <= 1.1 * cfl);
            }
        }
    }

    #[test]
    fn steps_conserve_mass_and_species(dim in 1usize..=2, seed in any::<u64>(), dirksa in any::<bool>()) {
        let s = random_state(dim, 16, seed);
        let chns = Chns::new(PhysParams::default(), SolverSettings { rel_tol: 1e-8, ..Default::default() });
        let scheme = if dirksa { Scheme::Dirksa } else { Scheme::EeIe };
        let next = chns.step(&s, 0.0, 1e-3, &tableau(scheme)).unwrap().state;
        let (a, b) = (Totals::of(&s), Totals::of(&next));
        prop_assert!((a.rho - b.rho).abs() <= 1e-12 * a.rho.abs());
        prop_assert!((a.q - b.q).abs() <= 1e-12 * a.rho.abs());
    }

    #[test]
    fn dominant_mode_grows_fastest(c0 in -0.55f64..0.55, eps in 1e-4f64..1e-2, dim in 1usize..=2) {
        let p = predict_spinodal_mode(c0, eps, dim).unwrap();
        for md in &p.modes {
            prop_assert!(md.sigma > 0.0);
            prop_assert!((md.sigma - growth_exponent(c0, eps, md.khat() as f64)).abs() <= 1e-12 * md.sigma);
        }
        if let Some(d) = p.dominant {
            prop_assert!(p.modes.iter().all(|md| md.sigma <= d.sigma));
        }
        // every mode left out, up to a margin past the largest listed one, is stable
        let top = p.modes.iter().map(|md| md.k1.max(md.k2)).max().unwrap_or(0) + 3;
        for k1 in 0..top {
            for k2 in 0..if dim == 1 { 1 } else { top } {
                let listed = p.modes.iter().any(|md| (md.k1, md.k2) == (k1, k2));
                let khat = (k1 * k1 + k2 * k2) as f64;
                prop_assert!(listed || khat == 0.0 || growth_exponent(c0, eps, khat) <= 0.0);
            }
        }
    }

    #[test]
    fn single_node_error_is_delta_over_n(m in 3usize..20, seed in any::<u64>(), delta in -1.0f64..1.0, comp in 0usize..4) {
        let s = random_state(2, m, seed);
        let mut t = s.clone();
        let k = (seed as usize) % s.grid().len();
        let mut v = t.component(comp).values().to_vec();
        v[k] += delta;
        *t.component_mut(comp) = GridField::new(s.grid(), v);
        let e = global_error(&t, &s);
        prop_assert!((e - delta.abs() / (m * m) as f64).abs() <= 1e-15);
    }
}
