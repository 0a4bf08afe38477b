//! Hand-derived values for small strings and Hamiltonians, through the public API.

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use common::*;
use istring::canonical::{
    canonical_m, hamiltonian_to_string, indivisible_prefix, string_to_hamiltonian, HPiece,
    Hamiltonian,
};
use istring::coeffs::{eval_coefficients, xi_eval, Length, Measure, RawString, StringSpec};
use istring::converge::{
    hamiltonian_convergence_check, mollify_string, scaled_atom_family, string_convergence_check,
    StringSequence, Verdict,
};
use istring::propagate::{
    fundamental_system, solve_inhomogeneous, step_matrix, PropagationOptions,
};
use istring::spectral::{
    discrete_eigenvalues, green_kernel, spectral_measure_discrete, stieltjes_inversion_spec,
    transform_hat, HilbertElement,
};
use istring::weyl::{
    classify, default_grid, integral_rep_constants, m_truncated, weyl_m, weyl_solution_psi,
};
use istring::Error;
use num_complex::Complex64;

const TOL: f64 = 1e-12;

fn near(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

fn piece(len: f64, h11: f64, h12: f64) -> HPiece<f64> {
    HPiece { len, h11, h12 }
}

#[test]
fn validation() {
    assert!(empty(1.0).omega().is_zero() && empty(1.0).upsilon().is_zero());
    let raw = |l: f64, ups: Measure<f64>| RawString {
        length: Length::from_value(l),
        omega: Measure::zero(),
        upsilon: ups,
    };
    assert!(matches!(
        StringSpec::new(raw(1.0, Measure::zero().with_atom(0.5, -1.0))),
        Err(Error::NegativeUpsilon { .. })
    ));
    assert!(matches!(
        StringSpec::new(raw(0.0, Measure::zero())),
        Err(Error::NonPositiveLength)
    ));
}

#[test]
fn coefficients_and_travel() {
    assert_eq!(
        eval_coefficients(&omega_atom(0.0, 2.0), 0.5).unwrap(),
        (2.0, 0.0, 2.5)
    );
    assert_eq!(
        eval_coefficients(&upsilon_atom(0.0, 3.0), 0.5).unwrap(),
        (0.0, 3.0, 3.5)
    );
    assert_eq!(eval_coefficients(&mixed(), 0.0).unwrap(), (0.0, 0.0, 0.0));
    assert!(eval_coefficients(&empty(1.0), 1.5).is_err());
    assert!((xi_eval(&omega_atom(0.0, 2.0), 2.0).unwrap() - 0.4).abs() < 1e-15);
    assert_eq!(xi_eval(&omega_atom(0.0, 2.0), 7.0).unwrap(), 1.0);
    assert_eq!(xi_eval(&upsilon_atom(0.0, 3.0), 2.0).unwrap(), 0.0);
    for s in [0.3, 1.0, 4.0] {
        assert_eq!(xi_eval(&empty(1.0), s).unwrap(), s.min(1.0));
    }
}

#[test]
fn substitution_identity() {
    // int_0^sigma(x) F(xi(t)) dt = int_0^x F (1 + w^2) dt + int_[0,x) F dupsilon for F = 1, t
    let s = mixed();
    let x = 1.6;
    let tc = s.travel();
    let sig = tc.sigma(x);
    let n = 200_000;
    let h = sig / n as f64;
    let (mut l1, mut lt) = (0.0, 0.0);
    for k in 0..n {
        let v = tc.xi((k as f64 + 0.5) * h);
        l1 += h;
        lt += v * h;
    }
    let cv = s.coefficients();
    let m = 200_000;
    let dx = x / m as f64;
    let (mut r1, mut rt) = (0.0, 0.0);
    for k in 0..m {
        let t = (k as f64 + 0.5) * dx;
        let w = cv.w(t);
        let dens = s.upsilon().rate_at(t);
        r1 += (1.0 + w * w + dens) * dx;
        rt += t * (1.0 + w * w + dens) * dx;
    }
    for a in s.upsilon().atoms.iter().filter(|a| a.x < x) {
        r1 += a.mass;
        rt += a.x * a.mass;
    }
    assert!((l1 - r1).abs() < 1e-10, "{l1} {r1}");
    assert!((lt - rt).abs() < 1e-8, "{lt} {rt}");
}

#[test]
fn propagation_examples() {
    let i = c(0.0, 1.0);
    let m = step_matrix(c(0.0, 0.0), 0.5);
    assert_eq!(
        (m.m[0][0], m.m[0][1], m.m[1][0], m.m[1][1]),
        (c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0))
    );
    let m = step_matrix(c(2.0, 0.0), 0.5);
    assert!(near(m.m[0][0], c(0.0, 0.0), 1e-15) && near(m.m[1][0], c(-2.0, 0.0), 1e-15));
    assert!(near(m.m[1][1], c(2.0, 0.0), 1e-15) && near(m.det(), c(1.0, 0.0), 1e-15));

    let xs = [0.25, 0.5, 1.0];
    let fs = fundamental_system(
        &empty(1.0),
        c(3.0, -2.0),
        &xs,
        PropagationOptions::default(),
    )
    .unwrap();
    for (k, &x) in xs.iter().enumerate() {
        assert!(near(fs.theta[k].f, c(1.0, 0.0), 1e-15) && near(fs.phi[k].f, c(x, 0.0), 1e-15));
    }
    let fs = fundamental_system(
        &omega_atom(0.0, 2.0),
        i,
        &[1.0],
        PropagationOptions::default(),
    )
    .unwrap();
    assert!(near(fs.theta[0].f, c(1.0, -2.0), 1e-15) && near(fs.phi[0].f, c(1.0, 0.0), 1e-15));
    let fs = fundamental_system(
        &uniform(1.0, 1.0),
        c(-1.0, 0.0),
        &[1.0],
        PropagationOptions::default(),
    )
    .unwrap();
    assert!((fs.theta[0].f.re - 1f64.cosh()).abs() < 1e-8);
}

#[test]
fn inhomogeneous_examples() {
    let xs = [0.2, 0.5, 0.8, 1.0];
    let z0 = c(0.0, 0.0);
    let lebesgue = Measure::zero().with_density(0.0, 1.0, 1.0);
    let f = solve_inhomogeneous(&empty(1.0), z0, &lebesgue, z0, z0, &xs).unwrap();
    for (st, &x) in f.iter().zip(&xs) {
        assert!(near(st.f, c(-x * x / 2.0, 0.0), 1e-14), "{x}: {}", st.f);
    }
    let atom = Measure::zero().with_atom(0.5, 1.0);
    let f = solve_inhomogeneous(&empty(1.0), z0, &atom, z0, z0, &xs).unwrap();
    for (st, &x) in f.iter().zip(&xs) {
        let want = if x <= 0.5 { 0.0 } else { -(x - 0.5) };
        assert!(near(st.f, c(want, 0.0), 1e-14), "{x}: {}", st.f);
    }
    // chi = 0 reduces to d1 theta + d2 phi
    let s = mixed();
    let z = c(0.7, 1.1);
    let (d1, d2) = (c(0.3, -1.0), c(2.0, 0.5));
    let f = solve_inhomogeneous(&s, z, &Measure::zero(), d1, d2, &xs).unwrap();
    let fs = fundamental_system(&s, z, &xs, PropagationOptions::default()).unwrap();
    for ((g, t), p) in f.iter().zip(&fs.theta).zip(&fs.phi) {
        assert!(near(g.f, d1 * t.f + d2 * p.f, 1e-15));
    }
}

#[test]
fn weyl_examples() {
    let i = c(0.0, 1.0);
    let m = m_truncated(&uniform(1.0, 1.0), c(-1.0, 1e-9), 1.0).unwrap();
    assert!((m.re - 1f64.cosh() / 1f64.sinh()).abs() < 1e-7);
    assert!(near(m_truncated(&empty(1.0), i, 1.0).unwrap(), i, 1e-15));
    assert!(near(
        m_truncated(&omega_atom(0.0, 2.0), i, 1.0).unwrap(),
        c(2.0, 1.0),
        1e-15
    ));

    assert!(weyl_m(&empty(f64::INFINITY), i, TOL).unwrap().m.norm() < 1e-9);
    for z in [i, c(2.0, 0.3), c(-3.0, 1.5)] {
        assert!(near(
            weyl_m(&lebesgue_upsilon(), z, TOL).unwrap().m,
            i,
            1e-9
        ));
    }
    assert!(near(
        weyl_m(&uniform(f64::INFINITY, 1.0), i, TOL).unwrap().m,
        c(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        1e-7
    ));
    let m = weyl_m(&omega_atom(0.5, 1.0), i, TOL).unwrap().m;
    assert!(near(m, c(4.0 / 17.0, 18.0 / 17.0), 1e-14));
}

#[test]
fn psi_examples() {
    let xs = [0.0, 0.25, 0.5, 1.0];
    let z = c(0.4, 2.0);
    for s in [empty(1.0), omega_atom(0.0, 2.0)] {
        let psi = weyl_solution_psi(&s, c(0.0, 1.0), &xs, TOL).unwrap();
        for (p, &x) in psi.iter().zip(&xs) {
            assert!(near(p.f, c(1.0 - x, 0.0), 1e-14), "{x}: {}", p.f);
        }
    }
    let psi = weyl_solution_psi(&mixed(), z, &[2.0], TOL).unwrap();
    assert!(psi[0].f.norm() < 1e-12);
    let psi = weyl_solution_psi(&uniform(1.0, 1.0), c(-1.0, 1e-9), &xs, TOL).unwrap();
    for (p, &x) in psi.iter().zip(&xs) {
        assert!((p.f.re - (1.0 - x).sinh() / 1f64.sinh()).abs() < 1e-7);
    }
}

#[test]
fn integral_representation_examples() {
    let r = integral_rep_constants(&upsilon_atom(0.0, 3.0)).unwrap();
    assert!((r.c1 - 3.0).abs() < 1e-6);
    assert!((integral_rep_constants(&empty(2.0)).unwrap().inv_l - 0.5).abs() < 1e-6);
    let r = integral_rep_constants(&omega_atom(0.0, 2.0)).unwrap();
    assert!(r.c1.abs() < 1e-6 && (r.inv_l - 1.0).abs() < 1e-6);
    assert!((r.c2.unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn classification_examples() {
    let g = default_grid();
    let cl = classify(&uniform(1.0, 1.0), &g, 1e-8).unwrap();
    assert!(cl.herglotz && cl.stieltjes && cl.nonneg_spectrum_predicted);
    let cl = classify(&uniform(1.0, -1.0), &g, 1e-8).unwrap();
    assert!(cl.herglotz && !cl.stieltjes && !cl.nonneg_spectrum_predicted);
    let cl = classify(&omega_atom(0.5, -1.0), &g, 1e-8).unwrap();
    assert!(cl.herglotz && !cl.stieltjes);
}

#[test]
fn hamiltonian_examples() {
    let h = string_to_hamiltonian(&empty(1.0));
    assert_eq!(
        h.pieces(),
        &[piece(1.0, 0.0, 0.0), piece(f64::INFINITY, 1.0, 0.0)]
    );
    let h = string_to_hamiltonian(&omega_atom(0.0, 2.0));
    let p = h.pieces()[0];
    assert!(
        (p.len - 5.0).abs() < 1e-15 && (p.h11 - 0.8).abs() < 1e-15 && (p.h12 - 0.4).abs() < 1e-15
    );
    assert_eq!(h.pieces()[1], piece(f64::INFINITY, 1.0, 0.0));
    let h = string_to_hamiltonian(&upsilon_atom(0.0, 3.0));
    assert_eq!(
        h.pieces(),
        &[
            piece(3.0, 1.0, 0.0),
            piece(1.0, 0.0, 0.0),
            piece(f64::INFINITY, 1.0, 0.0)
        ]
    );
    assert_eq!(indivisible_prefix(&h), 3.0);

    let s = hamiltonian_to_string(&Hamiltonian::new(vec![piece(f64::INFINITY, 0.5, 0.0)]).unwrap())
        .unwrap();
    assert_eq!(s.length(), Length::Infinite);
    assert!(s.omega().is_zero());
    assert_eq!(s.upsilon().density.len(), 1);
    assert_eq!(
        (s.upsilon().density[0].a, s.upsilon().density[0].value),
        (0.0, 1.0)
    );
    let s = hamiltonian_to_string(
        &Hamiltonian::new(vec![piece(5.0, 0.8, 0.4), piece(f64::INFINITY, 1.0, 0.0)]).unwrap(),
    )
    .unwrap();
    // h22 = 1 - 0.8 is not exactly 0.2
    assert!((s.length().value() - 1.0).abs() < 1e-15);
    assert!((s.coefficients().w(0.5) - 2.0).abs() < 1e-15 && s.upsilon().is_zero());
    let s = hamiltonian_to_string(&Hamiltonian::new(vec![piece(f64::INFINITY, 0.0, 0.0)]).unwrap())
        .unwrap();
    assert_eq!(s.length(), Length::Infinite);
    assert!(s.omega().is_zero() && s.upsilon().is_zero());
    // H22 = 0 a.e. is rejected on construction
    assert!(Hamiltonian::new(vec![piece(f64::INFINITY, 1.0, 0.0)]).is_err());
}

#[test]
fn canonical_examples() {
    let i = c(0.0, 1.0);
    let h = Hamiltonian::new(vec![piece(f64::INFINITY, 0.0, 0.0)]).unwrap();
    assert!(canonical_m(&h, c(1.5, 0.2), TOL).unwrap().norm() < 1e-12);
    let h = Hamiltonian::new(vec![piece(f64::INFINITY, 0.5, 0.0)]).unwrap();
    assert!(near(canonical_m(&h, c(-2.0, 0.7), TOL).unwrap(), i, 1e-10));
    assert_eq!(indivisible_prefix(&h), 0.0);
    let m = canonical_m(&string_to_hamiltonian(&omega_atom(0.0, 2.0)), i, TOL).unwrap();
    assert!(near(m, c(2.0, 1.0), 1e-12));
    let h = Hamiltonian::new(vec![piece(7.0, 1.0, 0.0), piece(f64::INFINITY, 0.0, 0.0)]).unwrap();
    assert_eq!(indivisible_prefix(&h), 7.0);
    // the half-line uniform string through its meshed Hamiltonian
    let m = canonical_m(&string_to_hamiltonian(&uniform(f64::INFINITY, 1.0)), i, TOL).unwrap();
    assert!(near(m, c(FRAC_1_SQRT_2, FRAC_1_SQRT_2), 1e-6), "{m}");
}

#[test]
fn discrete_spectrum_examples() {
    let w = (-100.0, 100.0);
    assert_eq!(
        discrete_eigenvalues(&omega_atom(0.5, 1.0), w).unwrap(),
        vec![4.0]
    );
    assert_eq!(
        discrete_eigenvalues(&omega_atom(0.5, -1.0), w).unwrap(),
        vec![-4.0]
    );
    assert_eq!(
        discrete_eigenvalues(&upsilon_atom(0.5, 1.0), w).unwrap(),
        vec![-2.0, 2.0]
    );
    for (s, lam) in [(omega_atom(0.5, 1.0), 4.0), (omega_atom(0.5, -1.0), -4.0)] {
        let mu = spectral_measure_discrete(&s).unwrap();
        assert_eq!(mu.atoms.len(), 1);
        assert!((mu.atoms[0].lambda - lam).abs() < 1e-14 && (mu.atoms[0].mass - 1.0).abs() < 1e-14);
    }
    assert!(spectral_measure_discrete(&empty(1.0))
        .unwrap()
        .atoms
        .is_empty());
    assert!(matches!(
        spectral_measure_discrete(&uniform(1.0, 1.0)),
        Err(Error::NotAtomic)
    ));
    assert!(matches!(
        spectral_measure_discrete(&empty(f64::INFINITY)),
        Err(Error::NotFiniteLength)
    ));
}

#[test]
fn stieltjes_inversion_examples() {
    let mu =
        stieltjes_inversion_spec(&uniform(1.0, 1.0), (1.0, 50.0), &[1e-2, 1e-3, 1e-4]).unwrap();
    assert_eq!(mu.atoms.len(), 2);
    for (a, n) in mu.atoms.iter().zip([1.0, 2.0]) {
        assert!((a.lambda - n * n * PI * PI).abs() < 1e-6);
        assert!((a.mass - 2.0).abs() < 0.02);
    }
    let mu =
        stieltjes_inversion_spec(&omega_atom(0.5, 1.0), (1.0, 10.0), &[1e-2, 1e-3, 1e-4]).unwrap();
    assert_eq!(mu.atoms.len(), 1);
    assert!((mu.atoms[0].lambda - 4.0).abs() < 1e-3 && (mu.atoms[0].mass - 1.0).abs() < 1e-3);
    let mu = stieltjes_inversion_spec(&empty(1.0), (0.5, 20.0), &[1e-2, 1e-3, 1e-4]).unwrap();
    assert!(mu.atoms.is_empty());
    assert!(matches!(
        stieltjes_inversion_spec(&empty(1.0), (-1.0, 1.0), &[1e-2]),
        Err(Error::WindowTouchesAtomZero)
    ));
}

#[test]
fn green_and_transform_examples() {
    let g = green_kernel(&empty(1.0), c(0.3, 2.0), 0.5, 0.25).unwrap();
    assert!(near(g[0], c(0.125, 0.0), 1e-15));
    let g = green_kernel(&omega_atom(0.0, 2.0), c(0.0, 1.0), 0.5, 0.5).unwrap();
    assert!(near(g[0], c(0.25, 0.0), 1e-15));
    let s = omega_atom(0.5, 1.0);
    let d = HilbertElement::delta(&s, 0.5).unwrap();
    let v = transform_hat(&s, &d, &[4.0, 0.0]).unwrap();
    assert!(near(v[0], c(0.5, 0.0), 1e-15) && v[1].norm() < 1e-15);
}

#[test]
fn convergence_examples() {
    let limit = omega_atom(0.0, 1.0);
    let m4 = mollify_string(&limit, 4).unwrap();
    assert_eq!(
        (
            m4.omega().density[0].a,
            m4.omega().density[0].b,
            m4.omega().density[0].value
        ),
        (0.0, 0.25, 4.0)
    );

    let ns = [1usize, 2, 4, 8, 16, 32, 64];
    let seq = StringSequence {
        specs: ns
            .iter()
            .map(|&n| mollify_string(&limit, n).unwrap())
            .collect(),
        limit: Some(limit.clone()),
    };
    let xs: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let r = string_convergence_check(&seq, &xs, usize::MAX);
    assert_eq!(r.verdict, Verdict::Converges);
    // int_0^x w_n = x - 1/(2n) once x >= 1/n
    let last = r.w_integral_table.last().unwrap();
    assert!(
        last.iter().all(|d| (d - 1.0 / 128.0).abs() < 1e-12),
        "{last:?}"
    );

    let same = StringSequence {
        specs: vec![mixed(); 3],
        limit: Some(mixed()),
    };
    let r = string_convergence_check(&same, &xs, usize::MAX);
    assert!(r
        .w_integral_table
        .iter()
        .flatten()
        .chain(r.sigma_integral_table.iter().flatten())
        .all(|&d| d == 0.0));

    let div = scaled_atom_family::<f64>(&ns).unwrap();
    let r = string_convergence_check(&div, &xs, usize::MAX);
    assert_eq!(r.verdict, Verdict::DivergesToInfinity);
    for (row, &n) in r.sigma_table.iter().zip(&ns) {
        for (v, &x) in row.iter().zip(&xs) {
            assert!((v - (x + (n * n) as f64 * x)).abs() < 1e-12);
        }
    }
}

#[test]
fn hamiltonian_convergence_examples() {
    let ss: Vec<f64> = (1..=8).map(|k| k as f64 / 2.0).collect();
    let h = Hamiltonian::new(vec![piece(2.0, 0.8, 0.4), piece(f64::INFINITY, 0.5, 0.0)]).unwrap();
    let r = hamiltonian_convergence_check(&vec![h.clone(); 4], Some(&h), &ss);
    assert!(r.limit_table.iter().flatten().all(|&d| d == 0.0));

    // primitives of the mollified family approach the atom's at rate C / n
    let limit = omega_atom(0.0, 1.0);
    let ns = [4usize, 16, 64];
    let hs: Vec<_> = ns
        .iter()
        .map(|&n| string_to_hamiltonian(&mollify_string(&limit, n).unwrap()))
        .collect();
    let r = hamiltonian_convergence_check(&hs, Some(&string_to_hamiltonian(&limit)), &ss);
    assert_eq!(r.verdict, Verdict::Converges);
    let sups: Vec<f64> = r
        .limit_table
        .iter()
        .map(|row| row.iter().cloned().fold(0.0, f64::max))
        .collect();
    for (s, &n) in sups.iter().zip(&ns) {
        assert!(s * n as f64 <= 2.0, "{sups:?}");
    }

    // indivisible prefix of length n, then I/2: diverges to infinity
    let hs: Vec<_> = [1.0, 4.0, 16.0, 64.0]
        .iter()
        .map(|&n| {
            Hamiltonian::new(vec![piece(n, 1.0, 0.0), piece(f64::INFINITY, 0.5, 0.0)]).unwrap()
        })
        .collect();
    let r = hamiltonian_convergence_check(&hs, None, &ss);
    assert_eq!(r.verdict, Verdict::DivergesToInfinity);
}

#[test]
fn mollified_error_is_first_order() {
    // n (m_n - m) -> -(1 - z/3) for omega = delta_0, L = 1
    let limit = omega_atom(0.0, 1.0);
    for z in [c(0.0, 1.0), c(-2.0, 0.5), c(1.0, 2.0)] {
        let m = weyl_m(&limit, z, TOL).unwrap().m;
        let lead = -(c(1.0, 0.0) - z / 3.0);
        let e: Vec<f64> = [64usize, 256, 1024]
            .iter()
            .map(|&n| {
                let mn = weyl_m(&mollify_string(&limit, n).unwrap(), z, TOL)
                    .unwrap()
                    .m;
                ((mn - m) * n as f64 - lead).norm()
            })
            .collect();
        assert!(e[1] < e[0] / 3.0 && e[2] < e[1] / 3.0, "{z}: {e:?}");
    }
}
