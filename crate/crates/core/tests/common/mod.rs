#![allow(dead_code)]

use istring::coeffs::{Length, Measure, StringSpec};
use istring::scalar::Cx;
use num_complex::Complex64;
use rand::Rng;

pub type Spec = StringSpec<f64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn spec(l: f64, omega: Measure<f64>, upsilon: Measure<f64>) -> Spec {
    StringSpec::from_parts(Length::from_value(l), omega, upsilon).unwrap()
}

pub fn empty(l: f64) -> Spec {
    spec(l, Measure::zero(), Measure::zero())
}

pub fn uniform(l: f64, rate: f64) -> Spec {
    spec(
        l,
        Measure::zero().with_density(0.0, l, rate),
        Measure::zero(),
    )
}

pub fn omega_atom(x: f64, mass: f64) -> Spec {
    spec(1.0, Measure::zero().with_atom(x, mass), Measure::zero())
}

pub fn upsilon_atom(x: f64, mass: f64) -> Spec {
    spec(1.0, Measure::zero(), Measure::zero().with_atom(x, mass))
}

pub fn lebesgue_upsilon() -> Spec {
    spec(
        f64::INFINITY,
        Measure::zero(),
        Measure::zero().with_density(0.0, f64::INFINITY, 1.0),
    )
}

/// Atoms, densities of both signs and an upsilon density on `[0, 2)`.
pub fn mixed() -> Spec {
    spec(
        2.0,
        Measure::zero()
            .with_atom(0.0, 0.5)
            .with_atom(0.7, -0.3)
            .with_density(0.2, 0.9, 1.5)
            .with_density(1.2, 2.0, -0.4),
        Measure::zero()
            .with_atom(1.1, 0.25)
            .with_density(0.4, 1.6, 0.8),
    )
}

/// Named regression strings.
pub fn regression_suite() -> Vec<(&'static str, Spec)> {
    vec![
        ("empty L=1", empty(1.0)),
        ("empty L=2", empty(2.0)),
        ("empty half-line", empty(f64::INFINITY)),
        ("uniform L=1", uniform(1.0, 1.0)),
        ("uniform half-line", uniform(f64::INFINITY, 1.0)),
        ("negative uniform L=1", uniform(1.0, -1.0)),
        ("lebesgue upsilon half-line", lebesgue_upsilon()),
        ("omega 2 delta_0", omega_atom(0.0, 2.0)),
        ("omega delta_1/2", omega_atom(0.5, 1.0)),
        ("omega -delta_1/2", omega_atom(0.5, -1.0)),
        ("upsilon 3 delta_0", upsilon_atom(0.0, 3.0)),
        ("upsilon delta_1/2", upsilon_atom(0.5, 1.0)),
        ("mixed L=2", mixed()),
    ]
}

/// 7 x 7 grid over `[-5, 5] x [0.1, 5] i`.
pub fn standard_grid() -> Vec<Cx<f64>> {
    let mut out = Vec::new();
    for i in 0..7 {
        for j in 0..7 {
            let re = -5.0 + 10.0 * i as f64 / 6.0;
            let im = 0.1 + 4.9 * j as f64 / 6.0;
            out.push(c(re, im));
        }
    }
    out
}

/// Positions kept on a 1/64 lattice so that random atoms never coincide
/// with density end points by accident.
fn lattice<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let k = rng.gen_range((lo * 64.0).ceil() as i64..(hi * 64.0).floor() as i64);
    k as f64 / 64.0
}

/// Finite string with omega and upsilon atoms and upsilon densities.
pub fn random_piecewise<R: Rng>(rng: &mut R) -> Spec {
    let l = [1.0, 1.5, 2.0, 3.0][rng.gen_range(0..4)];
    let mut omega = Measure::zero();
    for _ in 0..rng.gen_range(1..5) {
        omega = omega.with_atom(lattice(rng, 0.0, l), rng.gen_range(-2.0..2.0));
    }
    let mut upsilon = Measure::zero();
    for _ in 0..rng.gen_range(0..3) {
        upsilon = upsilon.with_atom(lattice(rng, 0.0, l), rng.gen_range(0.1..2.0));
    }
    let mut a = 0.0;
    while a < l {
        let b = (a + lattice(rng, 0.25, 1.0)).min(l);
        if rng.gen_bool(0.6) {
            upsilon = upsilon.with_density(a, b, rng.gen_range(0.0..3.0));
        }
        a = b;
    }
    spec(l, omega, upsilon)
}

/// Finite, purely atomic string with atoms in `(0, L)`; upsilon atoms only
/// with probability `p_upsilon`.
pub fn random_atomic<R: Rng>(rng: &mut R, p_upsilon: f64) -> Spec {
    let l = 1.0;
    let mut omega = Measure::zero();
    let n = rng.gen_range(1..5);
    let positive = rng.gen_bool(0.5);
    for _ in 0..n {
        let mass = if positive {
            rng.gen_range(0.2..2.0)
        } else {
            rng.gen_range(-2.0..2.0)
        };
        omega = omega.with_atom(lattice(rng, 0.05, 0.95), mass);
    }
    let mut upsilon = Measure::zero();
    if rng.gen_bool(p_upsilon) {
        upsilon = upsilon.with_atom(lattice(rng, 0.05, 0.95), rng.gen_range(0.2..1.5));
    }
    spec(l, omega, upsilon)
}
