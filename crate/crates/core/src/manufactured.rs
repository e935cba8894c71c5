//! The smooth manufactured solution used for order-of-accuracy studies and
//! the source terms that make it an exact solution of the 2D system.

use std::f64::consts::PI;

use crate::fields::{Grid, GridField, PhysParams, State};
use crate::semidisc::Forcing;

/// Exact primitive variables `(ρ, v₁, v₂, c)` at `(x, y, t)`.
pub fn exact_primitives(x: f64, y: f64, t: f64) -> [f64; 4] {
    let rho = (2.0 * PI * x).cos() * (PI * y).cos() * (t + 1.0) / 10.0 + 1.25;
    let v1 = -(PI * x).sin() * (PI * y).sin() * (2.0 * t * t - 1.0);
    let v2 = (PI * x).sin() * (2.0 * PI * y).sin() * (t * t + 1.0);
    let c = 0.75 - (PI * x).cos() * (PI * y).cos() * (t - 1.0) / 10.0;
    [rho, v1, v2, c]
}

/// Exact conserved state sampled on a 2D grid.
pub fn exact_state(grid: Grid, t: f64) -> State {
    assert_eq!(grid.dim(), 2, "the manufactured solution is two-dimensional");
    let field = |n: usize| grid.sample(|x, y| exact_primitives(x, y, t)[n]);
    State::from_primitives(field(0), &[field(1), field(2)], &field(3))
}

/// Source terms `(f₁, f₂, f₃, f₄)` for the density, both momenta and the
/// partial density.
#[allow(clippy::all)]
pub fn source_terms(x: f64, y: f64, t: f64, p: &PhysParams) -> [f64; 4] {
    let (gamma, nu, lambda, eps, g) = (p.gamma, p.nu, p.lambda, p.eps, p.g);
    // generated by common-subexpression elimination of the substituted system
    let w0 = PI*x;
    let w1 = 2.0*w0;
    let w2 = w1.cos();
    let w3 = PI*y;
    let w4 = w3.cos();
    let w5 = ((1.0/10.0))*w4;
    let w6 = w2*w5;
    let w7 = w0.sin();
    let w8 = w3.sin();
    let w9 = w7*w8;
    let w10 = (t).powi(2);
    let w11 = w10 + 1.0;
    let w12 = 2.0*w3;
    let w13 = w12.sin();
    let w14 = w11*w13;
    let w15 = t + 1.0;
    let w16 = w15*w2;
    let w17 = ((1.0/10.0))*PI*w16;
    let w18 = w14*w17*w9;
    let w19 = 2.0*w10 - 1.0;
    let w20 = w19*w9;
    let w21 = w1.sin();
    let w22 = ((1.0/5.0))*PI*w15*w21;
    let w23 = w22*w4;
    let w24 = w12.cos();
    let w25 = 2.0*w24;
    let w26 = w15*w6 + (5.0/4.0);
    let w27 = PI*w26;
    let w28 = w11*w27;
    let w29 = w25*w28;
    let w30 = w0.cos();
    let w31 = w27*w30;
    let w32 = w19*w8;
    let w33 = w31*w32;
    let w34 = (PI).powi(2);
    let w35 = w19*w34;
    let w36 = w35*w9;
    let w37 = (w8).powi(2);
    let w38 = (w19).powi(2);
    let w39 = (w7).powi(2);
    let w40 = w39*w4;
    let w41 = lambda + nu;
    let w42 = w11*w34;
    let w43 = w32*w39;
    let w44 = w30*w37;
    let w45 = (PI).powi(3);
    let w46 = t - 1.0;
    let w47 = (w46).powi(2);
    let w48 = w45*w47;
    let w49 = w48*w7;
    let w50 = ((1.0/50.0))*w49;
    let w51 = (w4).powi(2);
    let w52 = ((1.0/2.0))*eps;
    let w53 = gamma*(w26).recip()*(w26).powf(gamma);
    let w54 = (w11).powi(2);
    let w55 = w17*w8;
    let w56 = w30*w4;
    let w57 = w48*w8;
    let w58 = ((1.0/50.0))*w57;
    let w59 = (w30).powi(2);
    let w60 = ((1.0/10.0))*w30;
    let w61 = w4*w60;
    let w62 = -(w46*w61) + (3.0/4.0);
    let w63 = 2.0*w46*w56 - 15.0;
    let w64 = (w63).powi(2);
    let w65 = 2.0*w16*w4 + 25.0;
    let w66 = (w65).recip();
    let w67 = ((3.0/1000.0))*w46*w63;
    let w68 = (w65).powi(-2);
    let w69 = eps*w34;
    let w70 = w16*w68*w69;
    let w71 = (w15).powi(2)*(w65).powi(-3);
    let w72 = w34*w46;
    let f1 = -w18 + w20*w23 + w29*w7 - w33 + w6;
    let f2 = eps*(((1.0/100.0))*w30*w45*w47*w51*w7 - (((1.0/100.0))*w44*w49)) - (2.0*nu*w36) - (4.0*t*w26*w9) + ((1.0/10.0))*PI*w11*w13*w15*w19*w2*w37*w39 - (w13*w19*w28*w40) - (w20*w6) - (w22*w37*w38*w40) - (w23*w53) + 2.0*PI*w26*w30*w37*w38*w7 - (w29*w43) - (w41*(w25*w30*w42 + w36)) - (w52*(-(w30*w50*w51) - (w44*w50)));
    let f3 = eps*(((1.0/100.0))*w4*w45*w47*w59*w8 - (((1.0/100.0))*w40*w57)) - (g*w26) + 5.0*nu*w11*w13*w34*w7 + 2.0*t*w13*w26*w7 + ((1.0/5.0))*PI*w11*w13*w15*w19*w21*w39*w4*w8 + ((1.0/10.0))*w11*w13*w2*w4*w7 - ((w13).powi(2)*w39*w54*w55) + 4.0*PI*w13*w24*w26*w39*w54 - (2.0*w14*w20*w31) - (w41*(-(4.0*w13*w42*w7) - (w35*w56))) - (w52*(-(w4*w58*w59) - (w40*w58))) - (w53*w55);
    let f4 = ((1.0/10.0))*PI*w11*w13*w26*w30*w46*w7*w8 + 2.0*PI*w11*w24*w26*w62*w7 + ((1.0/5.0))*PI*w15*w19*w21*w4*w62*w7*w8 - (w18*w62) + ((1.0/10.0))*w2*w4*w62 - (w26*w61) - (w27*w43*w46*w5) - (w30*w72*(16.0*eps*w15*w2*w34*w37*w68 + 4.0*eps*w34*w4*w66 - (32.0*(w2).powi(2)*w37*w4*w69*w71) + ((3.0/4000.0))*w4*w64 - (w44*w67) - w5 - (8.0*w51*w70))) - (w33*w62) - (w4*w72*(32.0*eps*w15*w21*w34*w4*w68*w7 + 4.0*eps*w30*w34*w66 - (128.0*(w21).powi(2)*w30*w51*w69*w71) + ((3.0/4000.0))*w30*w64 - (w40*w67) - (32.0*w56*w70) - w60));
    [f1, f2, f3, f4]
}

/// [`Forcing`] for the manufactured solution.
#[derive(Clone, Copy, Debug, Default)]
pub struct ManufacturedForcing;

impl Forcing for ManufacturedForcing {
    fn eval(&self, grid: Grid, t: f64, params: &PhysParams) -> State {
        let n = grid.len();
        let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(n); 4];
        for k in 0..n {
            let (x, y) = grid.position(k);
            let f = source_terms(x, y, t, params);
            for (o, v) in out.iter_mut().zip(f) {
                o.push(v);
            }
        }
        let mut it = out.into_iter().map(|v| GridField::new(grid, v));
        let rho = it.next().unwrap();
        let m = vec![it.next().unwrap(), it.next().unwrap()];
        State { rho, m, q: it.next().unwrap() }
    }
}
