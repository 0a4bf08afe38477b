//! Solutions of `-f'' = z omega f + z^2 upsilon f + chi`.
//!
//! Internally the state is `(f(x), f'(x-))`. On every cell between
//! breakpoints the densities are constant, so the equation reduces to
//! `-f'' = k f + c` with constant `k` and `c`, which is integrated exactly.
//! Atoms at `x` make `f'` jump after `x`. The first-order system in the
//! variables `F = (f, f' + n_z f)` is also available as an alternative
//! integrator that freezes `n_z` on substeps.

use crate::coeffs::{Measure, StringSpec};
use crate::error::{Error, Result};
use crate::linalg::{wave_kernels, Mat2};
use crate::scalar::{cre, Cx, Real};

/// Solution value and quasi-derivatives at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemState<T> {
    pub x: T,
    pub f: Cx<T>,
    /// `f' + n_z f + q` with `n_z = z w + z^2 Upsilon` and `q` the
    /// distribution function of `chi` (zero for the homogeneous equation)
    pub f2: Cx<T>,
    /// `f' + z w f + q = f2 - z^2 Upsilon f`
    pub quasi: Cx<T>,
}

impl<T: Real> SystemState<T> {
    /// Left limit `f'(x-)`, recovered from the stored quasi-derivative.
    pub fn derivative(&self, z: Cx<T>, w: T, q: T) -> Cx<T> {
        self.quasi - z * w * self.f - cre(q)
    }
}

/// `theta`, `phi` sampled at the requested positions.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalSystem<T> {
    pub z: Cx<T>,
    pub theta: Vec<SystemState<T>>,
    pub phi: Vec<SystemState<T>>,
    /// `W(theta, phi)` evaluated from the last sample.
    pub wronskian: Cx<T>,
}

impl<T: Real> FundamentalSystem<T> {
    pub fn wronskians(&self) -> Vec<Cx<T>> {
        self.theta
            .iter()
            .zip(&self.phi)
            .map(|(t, p)| t.f * p.f2 - t.f2 * p.f)
            .collect()
    }

    /// Largest `|W - 1|` relative to the size of the two products forming
    /// `W` (and to 1), i.e. the drift up to the conditioning of `W` itself.
    pub fn wronskian_drift(&self) -> T {
        self.theta
            .iter()
            .zip(&self.phi)
            .map(|(t, p)| {
                let (a, b) = (t.f * p.f2, t.f2 * p.f);
                let scale = T::one().max(a.norm() + b.norm());
                (a - b - Cx::new(T::one(), T::zero())).norm() / scale
            })
            .fold(T::zero(), |m, d| m.max(d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrator {
    /// Exact constant-coefficient solution on every cell.
    Exact,
    /// Frozen `n_z` with step doubling until the cell transfer matrix
    /// stabilizes within the tolerance.
    Frozen,
    /// Frozen `n_z` with a fixed number of substeps per cell.
    FrozenFixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions<T> {
    pub integrator: Integrator,
    /// Relative tolerance for [`Integrator::Frozen`].
    pub tol: T,
    pub max_doublings: u32,
}

impl<T: Real> Default for PropagationOptions<T> {
    fn default() -> Self {
        PropagationOptions {
            integrator: Integrator::Exact,
            tol: T::lit(1e-10),
            max_doublings: 24,
        }
    }
}

/// Step matrix `I + dx A` of the frozen system, `A = [[-n, 1], [-n^2, n]]`.
pub fn step_matrix<T: Real>(n: Cx<T>, dx: T) -> Mat2<T> {
    let one = cre(T::one());
    Mat2::new(one - n * dx, cre(dx), -(n * n) * dx, one + n * dx)
}

/// Advances `F = (f, f' + n f)` by `dx` with constant `n`.
pub fn exact_step<T: Real>(state: [Cx<T>; 2], n: Cx<T>, dx: T) -> [Cx<T>; 2] {
    step_matrix(n, dx).apply(state)
}

#[derive(Debug, Clone, Copy)]
struct Cell<T> {
    start: T,
    end: T,
    omega_atom: T,
    ups_atom: T,
    chi_atom: T,
    omega_rate: T,
    ups_rate: T,
    chi_rate: T,
    w_start: T,
    ups_start: T,
}

impl<T: Real> Cell<T> {
    fn n_at(&self, z: Cx<T>, x: T) -> Cx<T> {
        let tau = x - self.start;
        z * (self.w_start + self.omega_rate * tau) + z * z * (self.ups_start + self.ups_rate * tau)
    }
}

fn build_cells<T: Real>(spec: &StringSpec<T>, chi: &Measure<T>) -> Vec<Cell<T>> {
    let mut cuts: Vec<T> = chi.atoms.iter().map(|a| a.x).collect();
    for p in &chi.density {
        cuts.push(p.a);
        cuts.push(p.b);
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cuts"));
    cuts.dedup();
    let mut cells = Vec::new();
    for s in spec.segments() {
        let mut bounds = vec![s.start];
        bounds.extend(cuts.iter().copied().filter(|&c| c > s.start && c < s.end));
        bounds.push(s.end);
        for (i, win) in bounds.windows(2).enumerate() {
            let (a, b) = (win[0], win[1]);
            let tau = a - s.start;
            cells.push(Cell {
                start: a,
                end: b,
                omega_atom: if i == 0 { s.omega_atom } else { T::zero() },
                ups_atom: if i == 0 { s.upsilon_atom } else { T::zero() },
                chi_atom: chi.atom_at(a),
                omega_rate: s.omega_rate,
                ups_rate: s.upsilon_rate,
                chi_rate: chi.rate_at(a),
                w_start: s.w_at(tau),
                ups_start: s.ups_at(tau),
            });
        }
    }
    cells
}

/// Incremental solver for `theta`, `phi` and the particular solution with
/// zero initial data, in `(f, f'(x-))` variables.
#[derive(Debug, Clone)]
pub struct Propagator<'a, T> {
    spec: &'a StringSpec<T>,
    chi: Measure<T>,
    z: Cx<T>,
    opts: PropagationOptions<T>,
    cells: Vec<Cell<T>>,
    k: usize,
    pos: T,
    atoms_done: bool,
    cols: [[Cx<T>; 2]; 3],
    projective: bool,
    log_scale: T,
}

impl<'a, T: Real> Propagator<'a, T> {
    pub fn new(spec: &'a StringSpec<T>, z: Cx<T>, opts: PropagationOptions<T>) -> Self {
        Self::with_source(spec, z, Measure::zero(), opts).expect("zero source is valid")
    }

    pub fn with_source(
        spec: &'a StringSpec<T>,
        z: Cx<T>,
        chi: Measure<T>,
        opts: PropagationOptions<T>,
    ) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidValue(format!("spectral parameter {z}")));
        }
        let chi = chi.normalized(spec.length(), false)?;
        if !chi.is_zero() && opts.integrator != Integrator::Exact {
            return Err(Error::UnsupportedShape(
                "source terms require the exact integrator".into(),
            ));
        }
        let cells = build_cells(spec, &chi);
        let (o, z0) = (cre(T::one()), cre(T::zero()));
        Ok(Propagator {
            spec,
            chi,
            z,
            opts,
            cells,
            k: 0,
            pos: T::zero(),
            atoms_done: false,
            cols: [[o, z0], [z0, o], [z0, z0]],
            projective: false,
            log_scale: T::zero(),
        })
    }

    /// Keeps the columns bounded by a common rescaling. Only ratios of the
    /// homogeneous solutions remain meaningful; see [`Propagator::log_scale`].
    pub fn projective(mut self) -> Self {
        self.projective = self.chi.is_zero();
        self
    }

    /// Natural logarithm of the factor removed by projective rescaling.
    pub fn log_scale(&self) -> T {
        self.log_scale
    }

    fn rescale(&mut self) {
        if !self.projective {
            return;
        }
        let big = self.cols[..2]
            .iter()
            .flatten()
            .fold(T::zero(), |m, v| m.max(v.norm()));
        if big > T::lit(1e30) && big.is_finite() {
            let inv = big.recip();
            for c in self.cols.iter_mut() {
                c[0] = c[0] * inv;
                c[1] = c[1] * inv;
            }
            self.log_scale = self.log_scale + big.ln();
        }
    }

    pub fn position(&self) -> T {
        self.pos
    }

    pub fn z(&self) -> Cx<T> {
        self.z
    }

    /// Current `(f, f'(x-))` for `theta`, `phi` and the particular solution.
    pub fn columns(&self) -> [[Cx<T>; 2]; 3] {
        self.cols
    }

    /// Transfer matrix in `(f, f'(x-))` variables: columns `theta`, `phi`.
    pub fn transfer(&self) -> Mat2<T> {
        let [t, p, _] = self.cols;
        Mat2::new(t[0], p[0], t[1], p[1])
    }

    /// Advances to `to >= position()`; stops before the atoms sitting at `to`.
    pub fn advance_to(&mut self, to: T) -> Result<()> {
        self.spec.check_position(to)?;
        if to < self.pos {
            return Err(Error::InvalidValue(format!(
                "cannot propagate backwards from {} to {}",
                self.pos, to
            )));
        }
        let z = self.z;
        loop {
            let cell = self.cells[self.k];
            if !self.atoms_done {
                if to <= self.pos {
                    return Ok(());
                }
                let jump = z * cell.omega_atom + z * z * cell.ups_atom;
                if jump != cre(T::zero()) || cell.chi_atom != T::zero() {
                    for (i, c) in self.cols.iter_mut().enumerate() {
                        c[1] = c[1] - jump * c[0];
                        if i == 2 {
                            c[1] = c[1] - cre(cell.chi_atom);
                        }
                    }
                    self.rescale();
                }
                self.atoms_done = true;
            }
            let end = cell.end.min(to);
            if end > self.pos {
                self.step_within(&cell, self.pos, end)?;
                self.pos = end;
            }
            if self.pos >= to || self.k + 1 == self.cells.len() {
                return Ok(());
            }
            self.k += 1;
            self.atoms_done = false;
        }
    }

    fn step_within(&mut self, cell: &Cell<T>, a: T, b: T) -> Result<()> {
        let z = self.z;
        let tau = b - a;
        match self.opts.integrator {
            Integrator::Exact => {
                let k = z * cell.omega_rate + z * z * cell.ups_rate;
                // split so that no single step grows by more than e^200
                let growth = k.sqrt().im.abs() * tau;
                let pieces = if self.projective && growth > T::lit(200.0) {
                    (growth / T::lit(200.0)).ceil().to_usize().unwrap_or(1)
                } else {
                    1
                };
                let h = tau / T::from_usize(pieces).expect("piece count");
                let (c, s, q) = wave_kernels(k, h);
                for _ in 0..pieces {
                    for (i, col) in self.cols.iter_mut().enumerate() {
                        let (f, d) = (col[0], col[1]);
                        col[0] = c * f + s * d;
                        col[1] = -(k * s) * f + c * d;
                        if i == 2 && cell.chi_rate != T::zero() {
                            col[0] = col[0] - q * cell.chi_rate;
                            col[1] = col[1] - s * cell.chi_rate;
                        }
                    }
                    self.rescale();
                }
            }
            Integrator::Frozen | Integrator::FrozenFixed(_) => {
                let m = self.frozen_transfer(cell, a, b)?;
                for col in self.cols.iter_mut().take(2) {
                    *col = m.apply(*col);
                }
                self.rescale();
            }
        }
        Ok(())
    }

    /// Transfer matrix of the frozen system on `[a, b]`, in `(f, f')` variables.
    fn frozen_transfer(&self, cell: &Cell<T>, a: T, b: T) -> Result<Mat2<T>> {
        let z = self.z;
        let (na, nb) = (cell.n_at(z, a), cell.n_at(z, b));
        let one = cre(T::one());
        let zero = cre(T::zero());
        let into_sys = Mat2::new(one, zero, na, one);
        let from_sys = Mat2::new(one, zero, -nb, one);
        let run = |steps: usize| -> Mat2<T> {
            let h = (b - a) / T::from_usize(steps).expect("step count");
            let mut m = Mat2::identity();
            for j in 0..steps {
                let mid = a + h * (T::from_usize(j).expect("index") + T::lit(0.5));
                m = step_matrix(cell.n_at(z, mid), h) * m;
            }
            m
        };
        let constant = cell.omega_rate == T::zero() && cell.ups_rate == T::zero();
        let sys = match self.opts.integrator {
            Integrator::FrozenFixed(n) => run(n.max(1)),
            _ if constant => run(1),
            _ => {
                let mut steps = 1usize;
                let mut coarse = run(steps);
                let mut last = T::infinity();
                let mut accepted = None;
                for _ in 0..self.opts.max_doublings {
                    steps *= 2;
                    let fine = run(steps);
                    let diff = fine.add(&coarse.scale(cre(-T::one()))).max_abs();
                    last = diff / T::one().max(fine.max_abs());
                    if last <= self.opts.tol {
                        // Richardson correction for the second-order midpoint rule
                        let corr = fine
                            .add(&coarse.scale(cre(-T::one())))
                            .scale(cre(T::lit(1.0 / 3.0)));
                        accepted = Some(fine.add(&corr));
                        break;
                    }
                    coarse = fine;
                }
                accepted.ok_or(Error::ToleranceNotMet {
                    a: a.as_f64(),
                    b: b.as_f64(),
                    achieved: last.as_f64(),
                })?
            }
        };
        Ok(from_sys * sys * into_sys)
    }

    /// States of `theta`, `phi` and the particular solution at the current position.
    pub fn states(&self) -> [SystemState<T>; 3] {
        let x = self.pos;
        let c = self.spec.coefficients();
        let (w, ups) = (c.w(x), c.upsilon(x));
        let q = self.chi.distribution(x);
        let z = self.z;
        let mk = |col: [Cx<T>; 2], q: T| {
            let quasi = col[1] + z * w * col[0] + cre(q);
            SystemState {
                x,
                f: col[0],
                f2: quasi + z * z * ups * col[0],
                quasi,
            }
        };
        [
            mk(self.cols[0], T::zero()),
            mk(self.cols[1], T::zero()),
            mk(self.cols[2], q),
        ]
    }
}

fn check_sorted<T: Real>(xs: &[T]) -> Result<()> {
    if xs.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidValue("positions must be sorted".into()));
    }
    Ok(())
}

/// `theta(z, .)` and `phi(z, .)` at the sorted positions `xs`.
pub fn fundamental_system<T: Real>(
    spec: &StringSpec<T>,
    z: Cx<T>,
    xs: &[T],
    opts: PropagationOptions<T>,
) -> Result<FundamentalSystem<T>> {
    check_sorted(xs)?;
    let mut prop = Propagator::new(spec, z, opts);
    let mut theta = Vec::with_capacity(xs.len());
    let mut phi = Vec::with_capacity(xs.len());
    for &x in xs {
        prop.advance_to(x)?;
        let [t, p, _] = prop.states();
        theta.push(t);
        phi.push(p);
    }
    let wronskian = match (theta.last(), phi.last()) {
        (Some(t), Some(p)) => t.f * p.f2 - t.f2 * p.f,
        _ => cre(T::one()),
    };
    Ok(FundamentalSystem {
        z,
        theta,
        phi,
        wronskian,
    })
}

/// Solution of the inhomogeneous equation with `f(0) = d1`, `f'(0-) = d2`.
pub fn solve_inhomogeneous<T: Real>(
    spec: &StringSpec<T>,
    z: Cx<T>,
    chi: &Measure<T>,
    d1: Cx<T>,
    d2: Cx<T>,
    xs: &[T],
) -> Result<Vec<SystemState<T>>> {
    check_sorted(xs)?;
    let mut prop = Propagator::with_source(spec, z, chi.clone(), PropagationOptions::default())?;
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        prop.advance_to(x)?;
        let [t, p, q] = prop.states();
        out.push(SystemState {
            x,
            f: t.f * d1 + p.f * d2 + q.f,
            f2: t.f2 * d1 + p.f2 * d2 + q.f2,
            quasi: t.quasi * d1 + p.quasi * d2 + q.quasi,
        });
    }
    Ok(out)
}

/// Transfer matrix from `0-` to `x-` in `(f, f')` variables.
pub fn transfer_matrix<T: Real>(spec: &StringSpec<T>, z: Cx<T>, x: T) -> Result<Mat2<T>> {
    let mut prop = Propagator::new(spec, z, PropagationOptions::default());
    prop.advance_to(x)?;
    Ok(prop.transfer())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::Length;
    use crate::scalar::cx;

    fn atom_spec(x: f64, m: f64) -> StringSpec<f64> {
        StringSpec::from_parts(
            Length::Finite(1.0),
            Measure::zero().with_atom(x, m),
            Measure::zero(),
        )
        .unwrap()
    }

    #[test]
    fn step_matrix_examples() {
        let m = step_matrix(cx(0.0, 0.0), 0.3);
        assert_eq!(
            m,
            Mat2::new(cx(1.0, 0.0), cx(0.3, 0.0), cx(0.0, 0.0), cx(1.0, 0.0))
        );
        let m = step_matrix(cx(2.0, 0.0), 0.5);
        assert_eq!(
            m,
            Mat2::new(cx(0.0, 0.0), cx(0.5, 0.0), cx(-2.0, 0.0), cx(2.0, 0.0))
        );
        assert_eq!(m.det(), cx(1.0, 0.0));
        let n = cx(0.3, -1.7);
        let p = step_matrix(n, 0.4) * step_matrix(n, -0.4);
        assert!((p.m[0][1]).norm() < 1e-15 && (p.m[1][0]).norm() < 1e-15);
        assert!((p.m[0][0] - cx(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn empty_string_solutions() {
        let s = StringSpec::<f64>::empty(Length::Finite(1.0)).unwrap();
        let fs =
            fundamental_system(&s, cx(0.3, 2.0), &[0.0, 0.25, 1.0], Default::default()).unwrap();
        for (t, p) in fs.theta.iter().zip(&fs.phi) {
            assert_eq!(t.f, cx(1.0, 0.0));
            assert_eq!(p.f, cx(t.x, 0.0));
        }
        assert_eq!(fs.wronskian, cx(1.0, 0.0));
    }

    #[test]
    fn atom_at_origin() {
        let s = atom_spec(0.0, 2.0);
        let fs = fundamental_system(&s, cx(0.0, 1.0), &[1.0], Default::default()).unwrap();
        assert!((fs.theta[0].f - cx(1.0, -2.0)).norm() < 1e-15);
        assert!((fs.phi[0].f - cx(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn uniform_string_cosh() {
        let s = StringSpec::from_parts(
            Length::Finite(1.0),
            Measure::zero().with_density(0.0, 1.0, 1.0),
            Measure::zero(),
        )
        .unwrap();
        for integ in [Integrator::Exact, Integrator::Frozen] {
            let opts = PropagationOptions {
                integrator: integ,
                ..Default::default()
            };
            let fs = fundamental_system(&s, cx(-1.0, 0.0), &[1.0], opts).unwrap();
            assert!(
                (fs.theta[0].f - cx(1f64.cosh(), 0.0)).norm() < 1e-8,
                "{integ:?}"
            );
        }
    }

    #[test]
    fn inhomogeneous_examples() {
        let s = StringSpec::<f64>::empty(Length::Finite(1.0)).unwrap();
        let z0 = cx(0.0, 0.0);
        let xs = [0.0, 0.3, 0.5, 0.8, 1.0];
        let chi = Measure::zero().with_density(0.0, 1.0, 1.0);
        let sol = solve_inhomogeneous(&s, z0, &chi, z0, z0, &xs).unwrap();
        for st in &sol {
            assert!((st.f.re + st.x * st.x / 2.0).abs() < 1e-15);
        }
        let chi = Measure::zero().with_atom(0.5, 1.0);
        let sol = solve_inhomogeneous(&s, z0, &chi, z0, z0, &xs).unwrap();
        for st in &sol {
            let want = if st.x <= 0.5 { 0.0 } else { -(st.x - 0.5) };
            assert!((st.f.re - want).abs() < 1e-15);
        }
    }

    #[test]
    fn frozen_requires_no_source() {
        let s = StringSpec::<f64>::empty(Length::Finite(1.0)).unwrap();
        let opts = PropagationOptions {
            integrator: Integrator::Frozen,
            ..Default::default()
        };
        let r =
            Propagator::with_source(&s, cx(1.0, 0.0), Measure::zero().with_atom(0.5, 1.0), opts);
        assert!(matches!(r, Err(Error::UnsupportedShape(_))));
    }
}
