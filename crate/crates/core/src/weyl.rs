//! The Weyl–Titchmarsh function `m(z) = psi'(z, 0-) / (z psi(z, 0))`.
//!
//! For a finite length the truncation `m_x = -theta(z, x) / (z phi(z, x))`
//! is exact at `x = L`. On a half-line the truncation point follows the
//! travel coordinate, `x_k = xi(2^k)`, until three consecutive values agree.

use crate::coeffs::{Length, StringSpec};
use crate::error::{Error, Result};
use crate::propagate::{fundamental_system, PropagationOptions, Propagator, SystemState};
use crate::scalar::{close, cre, cx, sqrt_upper, Cx, Real};
use crate::spectral::SpectralMeasure;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylSample<T> {
    pub z: Cx<T>,
    pub m: Cx<T>,
    /// Position of the last truncation (`L` when exact).
    pub truncation_x: T,
    /// Heuristic: the last Cauchy difference of successive truncations,
    /// zero when the value is exact.
    pub est_error: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    /// Close a constant-coefficient half-line tail with its decaying solution
    /// instead of truncating.
    pub tail_closure: bool,
}

impl<T: Real> Default for WeylOptions<T> {
    fn default() -> Self {
        WeylOptions {
            tol: T::lit(1e-12),
            max_iter: 256,
            tail_closure: false,
        }
    }
}

impl<T: Real> WeylOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        WeylOptions {
            tol,
            ..Default::default()
        }
    }
}

fn require_nonreal<T: Real>(z: Cx<T>) -> Result<()> {
    if z.im == T::zero() || !z.im.is_finite() || !z.re.is_finite() {
        Err(Error::NonRealRequired)
    } else {
        Ok(())
    }
}

fn ratio<T: Real>(prop: &Propagator<'_, T>) -> Cx<T> {
    let t = prop.transfer();
    -t.m[0][0] / (prop.z() * t.m[0][1])
}

/// `m_x(z) = -theta(z, x) / (z phi(z, x))`.
pub fn m_truncated<T: Real>(spec: &StringSpec<T>, z: Cx<T>, x: T) -> Result<Cx<T>> {
    require_nonreal(z)?;
    if x <= T::zero() {
        return Err(Error::PositionOutOfRange { x: x.as_f64() });
    }
    let mut prop = Propagator::new(spec, z, PropagationOptions::default()).projective();
    prop.advance_to(x)?;
    Ok(ratio(&prop))
}

/// `m(z)` with the default options and the given tolerance.
pub fn weyl_m<T: Real>(spec: &StringSpec<T>, z: Cx<T>, tol: T) -> Result<WeylSample<T>> {
    weyl_m_with(spec, z, &WeylOptions::with_tol(tol))
}

pub fn weyl_m_with<T: Real>(
    spec: &StringSpec<T>,
    z: Cx<T>,
    opts: &WeylOptions<T>,
) -> Result<WeylSample<T>> {
    require_nonreal(z)?;
    if let Length::Finite(l) = spec.length() {
        return Ok(WeylSample {
            z,
            m: m_truncated(spec, z, l)?,
            truncation_x: l,
            est_error: T::zero(),
        });
    }
    let mut prop = Propagator::new(spec, z, PropagationOptions::default()).projective();
    if opts.tail_closure {
        let tail = spec.segments().last().expect("at least one segment");
        prop.advance_to(tail.start)?;
        let t = prop.transfer();
        // continue through the atoms sitting at the tail start
        let jump = z * tail.omega_atom + z * z * tail.upsilon_atom;
        let (th, thd) = (t.m[0][0], t.m[1][0] - jump * t.m[0][0]);
        let (ph, phd) = (t.m[0][1], t.m[1][1] - jump * t.m[0][1]);
        let k = z * tail.omega_rate + z * z * tail.upsilon_rate;
        let r = if k == cre(T::zero()) {
            cre(T::zero())
        } else {
            cx(T::zero(), T::one()) * sqrt_upper(k)
        };
        let m = (r * th - thd) / (z * (phd - r * ph));
        if !(m.re.is_finite() && m.im.is_finite()) {
            return Err(Error::TruncationNotConverged {
                last_diameter: f64::INFINITY,
            });
        }
        return Ok(WeylSample {
            z,
            m,
            truncation_x: tail.start,
            est_error: T::zero(),
        });
    }
    let travel = spec.travel();
    let mut s = T::one();
    let mut prev: Option<Cx<T>> = None;
    let mut agree = 0;
    let mut diff = T::infinity();
    for _ in 0..opts.max_iter {
        let x = travel.xi(s);
        s = s + s;
        if x <= T::zero() {
            continue;
        }
        prop.advance_to(x)?;
        let m = ratio(&prop);
        if !(m.re.is_finite() && m.im.is_finite()) {
            return Err(Error::TruncationNotConverged {
                last_diameter: diff.as_f64(),
            });
        }
        if let Some(p) = prev {
            diff = (m - p).norm();
            if close(m, p, opts.tol) {
                agree += 1;
                if agree >= 3 {
                    return Ok(WeylSample {
                        z,
                        m,
                        truncation_x: x,
                        est_error: diff,
                    });
                }
            } else {
                agree = 0;
            }
        }
        prev = Some(m);
    }
    Err(Error::TruncationNotConverged {
        last_diameter: diff.as_f64(),
    })
}

/// `psi(z, x) = theta(z, x) + m(z) z phi(z, x)` at sorted positions.
pub fn weyl_solution_psi<T: Real>(
    spec: &StringSpec<T>,
    z: Cx<T>,
    xs: &[T],
    tol: T,
) -> Result<Vec<SystemState<T>>> {
    let m = weyl_m(spec, z, tol)?.m;
    let fs = fundamental_system(spec, z, xs, PropagationOptions::default())?;
    let c = m * z;
    Ok(fs
        .theta
        .iter()
        .zip(&fs.phi)
        .map(|(t, p)| SystemState {
            x: t.x,
            f: t.f + c * p.f,
            f2: t.f2 + c * p.f2,
            quasi: t.quasi + c * p.quasi,
        })
        .collect())
}

/// Constants of `m(z) = c1 z + c2 - 1/(L z) + int (...) dmu`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralRep<T> {
    pub c1: T,
    /// Only determined for Krein strings; `None` means undetermined.
    pub c2: Option<T>,
    pub inv_l: T,
    pub mu: Option<SpectralMeasure<T>>,
}

/// Aitken extrapolation of a sequence, returning the limit and the
/// disagreement between the last two extrapolants.
pub fn aitken_limit<T: Real>(seq: &[T]) -> (T, T) {
    let n = seq.len();
    let aitken = |a: T, b: T, c: T| {
        let d = c - b - (b - a);
        let scale = a.abs() + b.abs() + c.abs();
        if d.abs() <= T::epsilon() * T::lit(16.0) * scale || d == T::zero() {
            c
        } else {
            c - (c - b) * (c - b) / d
        }
    };
    match n {
        0 => (T::nan(), T::infinity()),
        1 | 2 => (seq[n - 1], (seq[n - 1] - seq[0]).abs()),
        3 => {
            let e = aitken(seq[0], seq[1], seq[2]);
            (e, (e - seq[2]).abs())
        }
        _ => {
            let e1 = aitken(seq[n - 3], seq[n - 2], seq[n - 1]);
            let e0 = aitken(seq[n - 4], seq[n - 3], seq[n - 2]);
            (e1, (e1 - e0).abs())
        }
    }
}

fn extrapolate<T: Real>(what: &'static str, seq: &[T]) -> Result<T> {
    let (v, spread) = aitken_limit(seq);
    if !v.is_finite() || spread > T::lit(1e-4) * (T::one() + v.abs()) {
        return Err(Error::ExtrapolationUnstable {
            what,
            spread: spread.as_f64(),
        });
    }
    Ok(v)
}

fn decades<T: Real>(from: i32, to: i32) -> Vec<T> {
    let step = if to >= from { 1 } else { -1 };
    let mut out = Vec::new();
    let mut e = from;
    loop {
        out.push(T::lit(10f64.powi(e)));
        if e == to {
            break;
        }
        e += step;
    }
    out
}

/// Extracts `c1`, `1/L` and, for Krein strings, `c2` from `m` on the imaginary axis.
pub fn integral_rep_constants<T: Real>(spec: &StringSpec<T>) -> Result<IntegralRep<T>> {
    let opts = WeylOptions::default();
    let i = cx(T::zero(), T::one());
    let mut c1_seq = Vec::new();
    let mut c2_seq = Vec::new();
    for eta in decades::<T>(2, 6) {
        let z = i * eta;
        let m = weyl_m_with(spec, z, &opts)?.m;
        c1_seq.push((m / z).re);
        c2_seq.push(m.re);
    }
    let mut l_seq = Vec::new();
    for eps in decades::<T>(-2, -6) {
        let z = i * eps;
        let m = weyl_m_with(spec, z, &opts)?.m;
        l_seq.push((-(i * eps) * m).re);
    }
    let c1 = extrapolate("c1", &c1_seq)?.max(T::zero());
    let inv_l = extrapolate("1/L", &l_seq)?.max(T::zero());
    let c2 = if spec.is_krein_string() {
        Some(extrapolate("c2", &c2_seq)?)
    } else {
        None
    };
    Ok(IntegralRep {
        c1,
        c2,
        inv_l,
        mu: None,
    })
}

/// Outcome of the sampled Herglotz / Stieltjes tests.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification<T> {
    pub herglotz: bool,
    pub stieltjes: bool,
    /// Structural: `upsilon` vanishes on `(0, L)` and `w` is non-decreasing.
    pub nonneg_spectrum_predicted: bool,
    /// Structural: `upsilon = 0` and `omega >= 0`.
    pub stieltjes_predicted: bool,
    /// Smallest `Im m / (1 + |m|)` over the upper grid.
    pub min_im_m: T,
    /// Smallest `Im(z m) / (1 + |z m|)` over the upper grid.
    pub min_im_zm: T,
    /// Largest `|m(conj z) - conj m(z)| / (1 + |m|)`.
    pub max_symmetry_error: T,
    pub tol: T,
    pub grid_points: usize,
}

/// Log-spaced real parts of both signs from `1e-2` to `1e4`, each with
/// imaginary parts `0.01 |re|` and `0.1 |re|`, plus the imaginary axis and a
/// dense sweep just above the negative axis (200 points per decade,
/// `Im z = 1e-3 |re|`), where poles of small mass on `(-inf, 0)` leave
/// only a narrow dip in `Im(z m)`.
pub fn default_grid<T: Real>() -> Vec<Cx<T>> {
    let mut out = Vec::new();
    for k in 0..=24 {
        let a = 10f64.powf(-2.0 + k as f64 / 4.0);
        for sgn in [-1.0, 1.0] {
            for f in [0.01, 0.1] {
                out.push(cx(T::lit(sgn * a), T::lit(f * a)));
            }
        }
        out.push(cx(T::zero(), T::lit(a)));
    }
    for k in 0..=1200 {
        let a = 10f64.powf(-2.0 + k as f64 / 200.0);
        out.push(cx(T::lit(-a), T::lit(1e-3 * a)));
    }
    out
}

/// Samples `m` on the upper-half-plane points of `grid` and their conjugates.
pub fn classify<T: Real>(
    spec: &StringSpec<T>,
    grid: &[Cx<T>],
    tol: T,
) -> Result<Classification<T>> {
    let opts = WeylOptions::default();
    let mut min_im = T::infinity();
    let mut min_zm = T::infinity();
    let mut sym = T::zero();
    let mut count = 0;
    for &z0 in grid {
        if z0.im == T::zero() {
            continue;
        }
        let z = if z0.im > T::zero() { z0 } else { z0.conj() };
        let m = weyl_m_with(spec, z, &opts)?.m;
        let mc = weyl_m_with(spec, z.conj(), &opts)?.m;
        let scale = T::one() + m.norm();
        min_im = min_im.min(m.im / scale);
        let zm = z * m;
        min_zm = min_zm.min(zm.im / (T::one() + zm.norm()));
        sym = sym.max((mc - m.conj()).norm() / scale);
        count += 1;
    }
    let herglotz = count > 0 && min_im >= -tol && sym <= tol;
    let stieltjes = herglotz && min_zm >= -tol;
    Ok(Classification {
        herglotz,
        stieltjes,
        nonneg_spectrum_predicted: spec.predicts_nonnegative_spectrum(),
        stieltjes_predicted: spec.is_krein_string(),
        min_im_m: min_im,
        min_im_zm: min_zm,
        max_symmetry_error: sym,
        tol,
        grid_points: count,
    })
}

/// Nevanlinna kernel `[(m_i - conj m_j) / (z_i - conj z_j)]`.
pub fn nevanlinna_kernel<T: Real>(zs: &[Cx<T>], ms: &[Cx<T>]) -> Vec<Vec<Cx<T>>> {
    zs.iter()
        .zip(ms)
        .map(|(&zi, &mi)| {
            zs.iter()
                .zip(ms)
                .map(|(&zj, &mj)| (mi - mj.conj()) / (zi - zj.conj()))
                .collect()
        })
        .collect()
}

fn det<T: Real>(mut a: Vec<Vec<Cx<T>>>) -> Cx<T> {
    let n = a.len();
    let mut d = cre(T::one());
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].norm().partial_cmp(&a[j][c].norm()).expect("finite"))
            .expect("non-empty");
        if a[p][c].norm() == T::zero() {
            return cre(T::zero());
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d = d * a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                let v = a[c][k];
                a[r][k] = a[r][k] - f * v;
            }
        }
    }
    d
}

/// Hermitian positive semidefiniteness via all principal minors (small matrices only).
pub fn is_psd<T: Real>(a: &[Vec<Cx<T>>], tol: T) -> bool {
    let n = a.len();
    let scale = a
        .iter()
        .flatten()
        .fold(T::zero(), |m, v| m.max(v.norm()))
        .max(T::one());
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let sub: Vec<Vec<Cx<T>>> = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| a[i][j]).collect())
            .collect();
        let k = idx.len() as i32;
        if det(sub).re < -tol * scale.powi(k) {
            return false;
        }
    }
    true
}
