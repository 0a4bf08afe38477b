//! Trace-normed canonical systems and the correspondence with strings.
//!
//! A string is mapped to the Hamiltonian
//!
//! ```text
//! H(s) = [[1 - xi'(s), xi'(s) w(xi(s))], [xi'(s) w(xi(s)), xi'(s)]]
//! ```
//!
//! in the travel coordinate `s = sigma(x)`. Atoms of `upsilon` become
//! indivisible pieces `[[1, 0], [0, 0]]`, and so does everything beyond
//! `sigma(L)`. The inverse direction reads `xi = int H22`, `w = H12 / H22`
//! and the `upsilon` density `det H / H22^2` off every piece.

use crate::coeffs::{Length, Measure, Segment, StringSpec};
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::scalar::{close, cre, Cx, Real};

/// Constant piece of a Hamiltonian; `h22 = 1 - h11`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPiece<T> {
    pub len: T,
    pub h11: T,
    pub h12: T,
}

impl<T: Real> HPiece<T> {
    pub fn h22(&self) -> T {
        T::one() - self.h11
    }

    pub fn det(&self) -> T {
        self.h11 * self.h22() - self.h12 * self.h12
    }

    pub fn is_indivisible_prefix_type(&self, eps: T) -> bool {
        self.h22() <= eps
    }
}

/// Piecewise-constant trace-normed Hamiltonian on `[0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian<T> {
    pieces: Vec<HPiece<T>>,
    /// Step in `x` used to mesh pieces where `w` is not constant, if any.
    pub mesh_step: Option<T>,
}

/// Determinant tolerance accepted on input.
const DET_TOL: f64 = 1e-12;
/// Below this `H22` counts as zero.
const H22_EPS: f64 = 1e-14;

impl<T: Real> Hamiltonian<T> {
    pub fn new(pieces: Vec<HPiece<T>>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidHamiltonian("no pieces".into()));
        }
        let last = pieces.len() - 1;
        for (i, p) in pieces.iter().enumerate() {
            if p.len.is_nan() || p.len <= T::zero() {
                return Err(Error::InvalidHamiltonian(format!(
                    "piece {i}: length {}",
                    p.len
                )));
            }
            if p.len.is_infinite() != (i == last) {
                return Err(Error::InvalidHamiltonian(format!(
                    "piece {i}: only the last piece may (and must) be infinite"
                )));
            }
            if !(p.h11.is_finite() && p.h12.is_finite()) || p.h11 < T::zero() || p.h11 > T::one() {
                return Err(Error::InvalidHamiltonian(format!(
                    "piece {i}: h11 = {} must lie in [0, 1]",
                    p.h11
                )));
            }
            if p.det() < -T::lit(DET_TOL) {
                return Err(Error::InvalidHamiltonian(format!(
                    "piece {i}: negative determinant {:e}",
                    p.det()
                )));
            }
        }
        let eps = T::lit(H22_EPS);
        if pieces.iter().all(|p| p.is_indivisible_prefix_type(eps)) {
            return Err(Error::InvalidHamiltonian(
                "H equals [[1, 0], [0, 0]] almost everywhere".into(),
            ));
        }
        Ok(Hamiltonian {
            pieces,
            mesh_step: None,
        })
    }

    pub fn pieces(&self) -> &[HPiece<T>] {
        &self.pieces
    }

    /// `int_0^s H(t) dt` as `(h11, h12, h22)`.
    pub fn primitive(&self, s: T) -> [T; 3] {
        let mut acc = [T::zero(); 3];
        let mut pos = T::zero();
        for p in &self.pieces {
            if pos >= s {
                break;
            }
            let dl = p.len.min(s - pos);
            acc[0] = acc[0] + p.h11 * dl;
            acc[1] = acc[1] + p.h12 * dl;
            acc[2] = acc[2] + p.h22() * dl;
            pos = pos + p.len;
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianOptions<T> {
    /// `x`-step of the mesh on pieces where `w` is linear; on a half-line
    /// tail the step is scaled by `max(1, x)`.
    pub mesh_step: T,
    /// Where a half-line tail with linear `w` is cut off and continued
    /// with the frozen value of `w`.
    pub horizon: T,
}

impl<T: Real> Default for HamiltonianOptions<T> {
    fn default() -> Self {
        HamiltonianOptions {
            mesh_step: T::lit(1e-4),
            horizon: T::lit(1000.0),
        }
    }
}

fn constant_piece<T: Real>(len_x: T, w: T, rate: T) -> HPiece<T> {
    let sp = T::one() + rate + w * w;
    let h22 = sp.recip();
    HPiece {
        len: len_x * sp,
        h11: T::one() - h22,
        h12: w * h22,
    }
}

fn push_merged<T: Real>(out: &mut Vec<HPiece<T>>, p: HPiece<T>) {
    if let Some(last) = out.last_mut() {
        if last.h11 == p.h11 && last.h12 == p.h12 && last.len.is_finite() {
            last.len = last.len + p.len;
            return;
        }
    }
    out.push(p);
}

fn mesh_body<T: Real>(out: &mut Vec<HPiece<T>>, seg: &Segment<T>, len_x: T, step: T) {
    let cells = (len_x / step).ceil().to_usize().unwrap_or(1).max(1);
    let h = len_x / T::from_usize(cells).expect("cell count");
    for j in 0..cells {
        let a = h * T::from_usize(j).expect("index");
        let b = if j + 1 == cells { len_x } else { a + h };
        mesh_cell(out, seg, a, b);
    }
}

/// Cells growing in proportion to `x` beyond `x = 1`, where `w` is large and
/// the direction of `H` turns slowly.
fn mesh_graded<T: Real>(out: &mut Vec<HPiece<T>>, seg: &Segment<T>, len_x: T, step: T) {
    let mut a = T::zero();
    while a < len_x {
        let h = step * (seg.start + a).max(T::one());
        let b = if a + h + h * T::lit(0.5) >= len_x {
            len_x
        } else {
            a + h
        };
        mesh_cell(out, seg, a, b);
        a = b;
    }
}

fn mesh_cell<T: Real>(out: &mut Vec<HPiece<T>>, seg: &Segment<T>, a: T, b: T) {
    {
        let ds = seg.sigma_at(b) - seg.sigma_at(a);
        let dx = b - a;
        let wint = seg.w_int_at(b) - seg.w_int_at(a);
        let h22 = (dx / ds).min(T::one());
        push_merged(
            out,
            HPiece {
                len: ds,
                h11: T::one() - h22,
                h12: wint / ds,
            },
        );
    }
}

/// String to Hamiltonian with the default mesh.
pub fn string_to_hamiltonian<T: Real>(spec: &StringSpec<T>) -> Hamiltonian<T> {
    string_to_hamiltonian_with(spec, &HamiltonianOptions::default())
}

pub fn string_to_hamiltonian_with<T: Real>(
    spec: &StringSpec<T>,
    opts: &HamiltonianOptions<T>,
) -> Hamiltonian<T> {
    let mut out: Vec<HPiece<T>> = Vec::new();
    let mut meshed = false;
    let indivisible = |len: T| HPiece {
        len,
        h11: T::one(),
        h12: T::zero(),
    };
    for seg in spec.segments() {
        if seg.upsilon_atom > T::zero() {
            push_merged(&mut out, indivisible(seg.upsilon_atom));
        }
        if seg.end.is_infinite() {
            if seg.omega_rate == T::zero() {
                out.push(constant_piece(T::infinity(), seg.w_start, seg.upsilon_rate));
            } else {
                let cut = (opts.horizon - seg.start).max(opts.mesh_step);
                mesh_graded(&mut out, seg, cut, opts.mesh_step);
                meshed = true;
                out.push(constant_piece(
                    T::infinity(),
                    seg.w_at(cut),
                    seg.upsilon_rate,
                ));
            }
        } else if seg.omega_rate == T::zero() {
            push_merged(
                &mut out,
                constant_piece(seg.len(), seg.w_start, seg.upsilon_rate),
            );
        } else {
            mesh_body(&mut out, seg, seg.len(), opts.mesh_step);
            meshed = true;
        }
    }
    if spec.length().is_finite() {
        out.push(indivisible(T::infinity()));
    }
    Hamiltonian {
        pieces: out,
        mesh_step: if meshed { Some(opts.mesh_step) } else { None },
    }
}

/// Hamiltonian to string; `L` is `int_0^inf H22`.
pub fn hamiltonian_to_string<T: Real>(h: &Hamiltonian<T>) -> Result<StringSpec<T>> {
    let eps = T::lit(H22_EPS);
    if h.pieces.iter().all(|p| p.h22() <= eps) {
        return Err(Error::DegenerateHamiltonian);
    }
    let mut omega = Measure::zero();
    let mut upsilon = Measure::zero();
    let mut x = T::zero();
    let mut w = T::zero();
    let mut pending = T::zero();
    let mut length = Length::Infinite;
    for p in &h.pieces {
        let h22 = p.h22();
        if h22 <= eps {
            if p.len.is_infinite() {
                // mass sitting at L does not enter the string
                length = Length::Finite(x);
                break;
            }
            pending = pending + p.len;
            continue;
        }
        if pending > T::zero() {
            upsilon.atoms.push(crate::coeffs::Atom { x, mass: pending });
            pending = T::zero();
        }
        let wp = p.h12 / h22;
        if !close(cre(wp), cre(w), T::lit(1e-14)) {
            omega.atoms.push(crate::coeffs::Atom { x, mass: wp - w });
            w = wp;
        }
        let mut dens = p.det().max(T::zero()) / (h22 * h22);
        if dens <= T::lit(DET_TOL) {
            dens = T::zero();
        }
        let dx = p.len * h22;
        let end = x + dx;
        if dens > T::zero() {
            match upsilon.density.last_mut() {
                Some(last) if last.b == x && last.value == dens => last.b = end,
                _ => upsilon.density.push(crate::coeffs::DensityPiece {
                    a: x,
                    b: end,
                    value: dens,
                }),
            }
        }
        if dx.is_infinite() {
            break;
        }
        x = end;
    }
    if x <= T::zero() && length.is_finite() {
        return Err(Error::DegenerateHamiltonian);
    }
    StringSpec::from_parts(length, omega, upsilon)
}

/// Discrepancies of `spec -> Hamiltonian -> spec`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundtripReport<T> {
    /// Relative error of `L` (zero when both are infinite).
    pub length: T,
    /// Largest difference of `w` away from breakpoints.
    pub w: T,
    /// Largest difference of the distribution function of `upsilon`.
    pub upsilon: T,
}

impl<T: Real> RoundtripReport<T> {
    pub fn max(&self) -> T {
        self.length.max(self.w).max(self.upsilon)
    }
}

/// Roundtrip through [`string_to_hamiltonian`] and [`hamiltonian_to_string`],
/// compared at `samples` points offset from any lattice of breakpoints.
pub fn roundtrip_discrepancy<T: Real>(
    spec: &StringSpec<T>,
    samples: usize,
) -> Result<RoundtripReport<T>> {
    let back = hamiltonian_to_string(&string_to_hamiltonian(spec))?;
    let (l0, l1) = (spec.length().value(), back.length().value());
    let length = match (l0.is_finite(), l1.is_finite()) {
        (true, true) => (l0 - l1).abs() / l0,
        (false, false) => T::zero(),
        _ => T::infinity(),
    };
    let span = if l0.is_finite() {
        l0
    } else {
        spec.coefficients()
            .breakpoints()
            .last()
            .copied()
            .unwrap_or(T::zero())
            + T::one()
    };
    let (a, b) = (spec.coefficients(), back.coefficients());
    let mut w = T::zero();
    let mut upsilon = T::zero();
    let n = T::from_usize(samples.max(1)).expect("sample count");
    for k in 0..samples.max(1) {
        let x = span * (T::from_usize(k).expect("index") + T::lit(0.37)) / n;
        w = w.max((a.w(x) - b.w(x)).abs());
        upsilon = upsilon.max((a.upsilon(x) - b.upsilon(x)).abs());
    }
    Ok(RoundtripReport { length, w, upsilon })
}

/// Length of the leading `[[1, 0], [0, 0]]` interval.
pub fn indivisible_prefix<T: Real>(h: &Hamiltonian<T>) -> T {
    let eps = T::lit(H22_EPS);
    h.pieces
        .iter()
        .take_while(|p| p.is_indivisible_prefix_type(eps))
        .fold(T::zero(), |s, p| s + p.len)
}

/// Transfer matrix of one constant piece over length `ds`: `exp(-z ds J H)`.
pub fn piece_exponential<T: Real>(p: &HPiece<T>, z: Cx<T>, ds: T) -> Mat2<T> {
    let g = Mat2::new(cre(p.h12), cre(p.h22()), cre(-p.h11), cre(-p.h12)).scale(-z * ds);
    if p.det().abs() <= T::lit(1e-13) {
        // nilpotent branch: (J H)^2 = -det H = 0
        Mat2::identity().add(&g)
    } else {
        g.exp_traceless()
    }
}

/// Samples of the fundamental matrix `U(z, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalSolution<T> {
    pub z: Cx<T>,
    pub samples: Vec<(T, Mat2<T>)>,
}

pub fn canonical_solution<T: Real>(
    h: &Hamiltonian<T>,
    z: Cx<T>,
    ss: &[T],
) -> Result<CanonicalSolution<T>> {
    if ss.windows(2).any(|w| !(w[0] <= w[1])) || ss.first().is_some_and(|s| *s < T::zero()) {
        return Err(Error::InvalidValue(
            "coordinates must be sorted and non-negative".into(),
        ));
    }
    let mut walk = Walk::new(h);
    let mut u = Mat2::identity();
    let mut samples = Vec::with_capacity(ss.len());
    for &s in ss {
        walk.advance(s, |p, ds| u = piece_exponential(p, z, ds) * u);
        samples.push((s, u));
    }
    Ok(CanonicalSolution { z, samples })
}

/// Cursor over the pieces that hands out constant sub-steps.
struct Walk<'a, T> {
    pieces: &'a [HPiece<T>],
    k: usize,
    used: T,
    pos: T,
}

impl<'a, T: Real> Walk<'a, T> {
    fn new(h: &'a Hamiltonian<T>) -> Self {
        Walk {
            pieces: &h.pieces,
            k: 0,
            used: T::zero(),
            pos: T::zero(),
        }
    }

    fn advance(&mut self, to: T, mut step: impl FnMut(&HPiece<T>, T)) {
        while self.pos < to {
            let p = &self.pieces[self.k];
            let remaining = p.len - self.used;
            if remaining <= to - self.pos {
                step(p, remaining);
                self.pos = self.pos + remaining;
                self.k += 1;
                self.used = T::zero();
            } else {
                let ds = to - self.pos;
                step(p, ds);
                self.used = self.used + ds;
                self.pos = to;
            }
        }
    }
}

/// `m(z) = lim U11 / U12`, truncated at `s = 2^k` until three successive
/// values agree within `tol`.
pub fn canonical_m<T: Real>(h: &Hamiltonian<T>, z: Cx<T>, tol: T) -> Result<Cx<T>> {
    if z.im == T::zero() || !z.im.is_finite() {
        return Err(Error::NonRealRequired);
    }
    // U up to a scalar factor, kept bounded by rescaling
    let apply = |u: Mat2<T>, e: &Mat2<T>| {
        let r = *e * u;
        let big = r.max_abs();
        if big > T::lit(1e30) {
            r.scale(cre(T::one() / big))
        } else {
            r
        }
    };
    let step = |mut u: Mat2<T>, p: &HPiece<T>, ds: T| {
        // split long steps so the exponential stays representable
        let growth = if p.det().abs() <= T::lit(1e-13) {
            T::zero()
        } else {
            (z * z * p.det()).sqrt().im.abs() * ds
        };
        // past this the decaying mode is far below rounding
        let (ds, growth) = if growth > T::lit(2000.0) {
            (ds * T::lit(2000.0) / growth, T::lit(2000.0))
        } else {
            (ds, growth)
        };
        let parts = if growth > T::lit(200.0) {
            (growth / T::lit(200.0)).ceil().to_usize().unwrap_or(1)
        } else {
            1
        };
        let e = piece_exponential(p, z, ds / T::from_usize(parts).expect("parts"));
        for _ in 0..parts {
            u = apply(u, &e);
        }
        u
    };
    let (tail, finite) = h.pieces.split_last().expect("non-empty");
    let tail_start = finite.iter().fold(T::zero(), |s, p| s + p.len);
    let nilpotent_tail = tail.det().abs() <= T::lit(1e-13);
    let mut u = Mat2::identity();
    let mut walk = Walk::new(h);
    let mut target = T::one();
    let mut prev: Option<Cx<T>> = None;
    let mut agree = 0;
    let mut diff = T::infinity();
    for _ in 0..256 {
        walk.advance(target.min(tail_start), |p, ds| u = step(u, p, ds));
        if nilpotent_tail && target >= tail_start {
            // U(s) = (I + G(s - s0)) U(s0) with G nilpotent: the first row
            // tends to a multiple of (h12, h22) U(s0)
            let (a, b) = (cre(tail.h12), cre(tail.h22()));
            let m = if tail.h12 == T::zero() && tail.h22() == T::zero() {
                u.m[0][0] / u.m[0][1]
            } else {
                (a * u.m[0][0] + b * u.m[1][0]) / (a * u.m[0][1] + b * u.m[1][1])
            };
            if m.re.is_finite() && m.im.is_finite() {
                return Ok(m);
            }
        }
        let ut = if target > tail_start {
            step(u, tail, target - tail_start)
        } else {
            u
        };
        let m = ut.m[0][0] / ut.m[0][1];
        if !(m.re.is_finite() && m.im.is_finite()) {
            // U12 vanishes while s is inside an indivisible prefix
            prev = None;
            agree = 0;
            target = target + target;
            continue;
        }
        if let Some(pm) = prev {
            diff = (m - pm).norm();
            if close(m, pm, tol) {
                agree += 1;
                if agree >= 3 {
                    return Ok(m);
                }
            } else {
                agree = 0;
            }
        }
        prev = Some(m);
        target = target + target;
    }
    Err(Error::TruncationNotConverged {
        last_diameter: diff.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    fn piece(len: f64, h11: f64, h12: f64) -> HPiece<f64> {
        HPiece { len, h11, h12 }
    }

    #[test]
    fn validation() {
        assert!(Hamiltonian::new(vec![piece(f64::INFINITY, 1.0, 0.0)]).is_err());
        assert!(Hamiltonian::new(vec![piece(1.0, 0.5, 0.0)]).is_err());
        assert!(Hamiltonian::new(vec![piece(f64::INFINITY, 0.5, 0.6)]).is_err());
        assert!(Hamiltonian::new(vec![piece(f64::INFINITY, 0.5, 0.5)]).is_ok());
    }

    #[test]
    fn simple_strings() {
        let s = StringSpec::<f64>::empty(Length::Finite(1.0)).unwrap();
        let h = string_to_hamiltonian(&s);
        assert_eq!(
            h.pieces(),
            &[piece(1.0, 0.0, 0.0), piece(f64::INFINITY, 1.0, 0.0)]
        );
        let s = StringSpec::from_parts(
            Length::Finite(1.0),
            Measure::zero().with_atom(0.0, 2.0),
            Measure::zero(),
        )
        .unwrap();
        let h = string_to_hamiltonian(&s);
        assert_eq!(h.pieces().len(), 2);
        assert_eq!(h.pieces()[0].len, 5.0);
        let p0 = h.pieces()[0];
        assert!((p0.h11 - 0.8f64).abs() < 1e-16 && (p0.h12 - 0.4f64).abs() < 1e-16);
    }

    #[test]
    fn inverse_examples() {
        let h = Hamiltonian::new(vec![piece(f64::INFINITY, 0.5, 0.0)]).unwrap();
        let s = hamiltonian_to_string(&h).unwrap();
        assert_eq!(s.length(), Length::Infinite);
        assert!(s.omega().is_zero());
        assert_eq!(s.upsilon().density.len(), 1);
        assert_eq!(s.upsilon().density[0].value, 1.0);
        let h =
            Hamiltonian::new(vec![piece(5.0, 0.8, 0.4), piece(f64::INFINITY, 1.0, 0.0)]).unwrap();
        let s = hamiltonian_to_string(&h).unwrap();
        assert!(matches!(s.length(), Length::Finite(l) if (l - 1.0).abs() < 1e-15));
        assert!((s.coefficients().w(0.5) - 2.0).abs() < 1e-15);
        assert!(s.upsilon().is_zero());
    }

    #[test]
    fn canonical_m_examples() {
        let i = cx(0.0, 1.0);
        let h = Hamiltonian::new(vec![piece(f64::INFINITY, 0.5, 0.0)]).unwrap();
        assert!((canonical_m(&h, cx(0.4, 1.3), 1e-12).unwrap() - i).norm() < 1e-10);
        let h =
            Hamiltonian::new(vec![piece(5.0, 0.8, 0.4), piece(f64::INFINITY, 1.0, 0.0)]).unwrap();
        assert!((canonical_m(&h, i, 1e-12).unwrap() - cx(2.0, 1.0)).norm() < 1e-12);
        let h = Hamiltonian::new(vec![piece(f64::INFINITY, 0.0, 0.0)]).unwrap();
        assert!(canonical_m(&h, i, 1e-12).unwrap().norm() < 1e-10);
    }

    #[test]
    fn solution_samples_and_determinant() {
        let h = Hamiltonian::new(vec![
            piece(0.7, 0.3, 0.2),
            piece(1.1, 0.9, -0.1),
            piece(f64::INFINITY, 0.5, 0.0),
        ])
        .unwrap();
        let z = cx(0.3, 2.0);
        let ss = [0.0, 0.35, 0.7, 1.0, 2.5, 4.0];
        let sol = canonical_solution(&h, z, &ss).unwrap();
        assert_eq!(sol.samples.len(), ss.len());
        for (s, u) in &sol.samples {
            assert!((u.det() - cx(1.0, 0.0)).norm() < 1e-12, "s = {s}");
        }
        // samples agree with a direct product
        let direct =
            piece_exponential(&h.pieces()[1], z, 0.3) * piece_exponential(&h.pieces()[0], z, 0.7);
        let u = sol.samples[3].1;
        assert!((u.m[0][1] - direct.m[0][1]).norm() < 1e-13);
    }

    #[test]
    fn prefix() {
        let h =
            Hamiltonian::new(vec![piece(7.0, 1.0, 0.0), piece(f64::INFINITY, 0.0, 0.0)]).unwrap();
        assert_eq!(indivisible_prefix(&h), 7.0);
    }
}
