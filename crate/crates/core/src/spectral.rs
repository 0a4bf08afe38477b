//! Spectral measure, eigenvalues, Green's kernel and the transform `f^`.
//!
//! For a finite, purely atomic string `theta(z, L)` and `phi(z, L)` are
//! polynomials in `z`. Eigenvalues are the roots of `phi(., L)` and the
//! point masses of the spectral measure are the residues
//! `theta(l, L) / (l d/dz phi(l, L))` of `m = -theta / (z phi)`.

use num_rational::BigRational;
use num_traits::Zero;

use crate::coeffs::{Length, StringSpec};
use crate::error::{Error, Result};
use crate::poly::{rational_from, rational_to, RationalPoly};
use crate::propagate::{fundamental_system, PropagationOptions};
use crate::quad::integrate;
use crate::scalar::{cre, cx, Cx, Real};
use crate::weyl::{weyl_m, WeylOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralAtom<T> {
    pub lambda: T,
    pub mass: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure<T> {
    pub atoms: Vec<SpectralAtom<T>>,
    /// `(lambda, Im m(lambda + i eps) / pi)` at the smallest `eps`, emitted
    /// only when mass is left over after the atoms.
    pub continuous_samples: Vec<(T, T)>,
    pub epsilon_used: Vec<T>,
}

impl<T: Real> SpectralMeasure<T> {
    pub fn total_atomic_mass(&self) -> T {
        self.atoms.iter().fold(T::zero(), |s, a| s + a.mass)
    }
}

/// Largest number of atoms accepted by the polynomial route.
pub const MAX_ATOMS: usize = 64;

fn require_discrete<T: Real>(spec: &StringSpec<T>) -> Result<T> {
    let l = match spec.length() {
        Length::Finite(l) => l,
        Length::Infinite => return Err(Error::NotFiniteLength),
    };
    if !spec.is_purely_atomic() {
        return Err(Error::NotAtomic);
    }
    let n = spec.omega().atoms.len() + spec.upsilon().atoms.len();
    if n > MAX_ATOMS {
        return Err(Error::InvalidValue(format!(
            "{n} atoms exceed the limit of {MAX_ATOMS}"
        )));
    }
    Ok(l)
}

/// Exact `(theta(z, L), phi(z, L))` for a finite, purely atomic string.
pub fn boundary_polynomials<T: Real>(spec: &StringSpec<T>) -> Result<(RationalPoly, RationalPoly)> {
    let l = require_discrete(spec)?;
    let zero = RationalPoly::integer(0);
    let one = RationalPoly::integer(1);
    // columns (f, f') for theta and phi
    let mut cols = [[one.clone(), zero.clone()], [zero, one]];
    let segs = spec.segments();
    for (k, seg) in segs.iter().enumerate() {
        let alpha = rational_from(seg.omega_atom)?;
        let beta = rational_from(seg.upsilon_atom)?;
        if !alpha.is_zero() || !beta.is_zero() {
            let jump = RationalPoly::new(vec![BigRational::zero(), alpha, beta]);
            for c in cols.iter_mut() {
                c[1] = &c[1] - &(&jump * &c[0]);
            }
        }
        let end = segs.get(k + 1).map_or(l, |s| s.start);
        let h = RationalPoly::constant(rational_from(end)? - rational_from(seg.start)?);
        for c in cols.iter_mut() {
            c[0] = &c[0] + &(&h * &c[1]);
        }
    }
    let [t, p] = cols;
    Ok((t[0].clone(), p[0].clone()))
}

/// `(theta, phi, d theta/dz, d phi/dz)` at `x = L` for a discrete string,
/// evaluated by forward-mode differentiation of the transfer product.
fn boundary_values<T: Real>(spec: &StringSpec<T>, l: T, z: Cx<T>) -> [Cx<T>; 4] {
    let (o, n) = (cre(T::one()), cre(T::zero()));
    // per column: f, f', df, df'
    let mut cols = [[o, n, n, n], [n, o, n, n]];
    let segs = spec.segments();
    for (k, seg) in segs.iter().enumerate() {
        let (a, b) = (seg.omega_atom, seg.upsilon_atom);
        let jump = z * a + z * z * b;
        let djump = cre(a) + z * (b + b);
        for c in cols.iter_mut() {
            c[3] = c[3] - djump * c[0] - jump * c[2];
            c[1] = c[1] - jump * c[0];
        }
        let end = segs.get(k + 1).map_or(l, |s| s.start);
        let h = end - seg.start;
        for c in cols.iter_mut() {
            c[0] = c[0] + c[1] * h;
            c[2] = c[2] + c[3] * h;
        }
    }
    [cols[0][0], cols[1][0], cols[0][2], cols[1][2]]
}

fn polished_roots<T: Real>(spec: &StringSpec<T>, l: T) -> Result<Vec<T>> {
    let (_, phi) = boundary_polynomials(spec)?;
    let roots = phi.to_real::<T>().roots()?;
    let mut out = Vec::with_capacity(roots.len());
    for r in roots {
        let mut z = r;
        for _ in 0..50 {
            let [_, p, _, dp] = boundary_values(spec, l, z);
            if dp.norm() == T::zero() {
                break;
            }
            let step = p / dp;
            z = z - step;
            if step.norm() <= T::epsilon() * (T::one() + z.norm()) {
                break;
            }
        }
        let scale = T::one() + z.re.abs();
        if z.im.abs() > T::lit(1e-8) * scale {
            return Err(Error::RootFinding(format!("non-real eigenvalue {z}")));
        }
        if z.re.abs() <= T::lit(1e-12) {
            return Err(Error::RootFinding("eigenvalue at zero".into()));
        }
        out.push(z.re);
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    for w in out.windows(2) {
        if (w[1] - w[0]).abs() <= T::lit(1e-9) * (T::one() + w[1].abs()) {
            return Err(Error::RootFinding(format!(
                "multiple eigenvalue near {}",
                w[0]
            )));
        }
    }
    Ok(out)
}

/// Real roots of `phi(., L)` inside `[window.0, window.1]`.
pub fn discrete_eigenvalues<T: Real>(spec: &StringSpec<T>, window: (T, T)) -> Result<Vec<T>> {
    let l = require_discrete(spec)?;
    Ok(polished_roots(spec, l)?
        .into_iter()
        .filter(|&r| r >= window.0 && r <= window.1)
        .collect())
}

/// All eigenvalues with their residue masses.
pub fn spectral_measure_discrete<T: Real>(spec: &StringSpec<T>) -> Result<SpectralMeasure<T>> {
    let l = require_discrete(spec)?;
    let (th, ph) = boundary_polynomials(spec)?;
    let (dth, dph) = (th.derivative(), ph.derivative());
    let ddph = dph.derivative();
    let mut atoms = Vec::new();
    for lambda in polished_roots(spec, l)? {
        // exact values at the floating-point root, moved to the true root
        // to first order; avoids cancellation in theta for tiny masses
        let q = rational_from(lambda)?;
        let [t, p, dt, dp, ddp] =
            [&th, &ph, &dth, &dph, &ddph].map(|poly| rational_to::<T>(&poly.eval_exact(&q)));
        let delta = p / dp;
        let mass = (t - dt * delta) / ((lambda - delta) * (dp - ddp * delta));
        atoms.push(SpectralAtom { lambda, mass });
    }
    Ok(SpectralMeasure {
        atoms,
        continuous_samples: Vec::new(),
        epsilon_used: Vec::new(),
    })
}

fn golden_max<T: Real>(
    mut a: T,
    mut b: T,
    tol: T,
    f: &mut impl FnMut(T) -> Result<T>,
) -> Result<T> {
    let g = T::lit(0.618_033_988_749_894_8);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok((a + b) * T::lit(0.5))
}

/// Recovers atoms of the spectral measure in `window` from `m(lambda + i eps)`.
///
/// Candidate peaks come from a scan at the largest `eps` with spacing `eps/4`.
/// A peak is declared an atom when `eps Im m` at the refined peak agrees
/// within 5% across all `eps`; its mass is `(1/pi) int Im m` over a window
/// around the peak, extrapolated linearly to `eps = 0` from the two smallest
/// `eps`.
pub fn stieltjes_inversion<T: Real>(
    mut m: impl FnMut(Cx<T>) -> Result<Cx<T>>,
    window: (T, T),
    eps: &[T],
) -> Result<SpectralMeasure<T>> {
    let mut eps: Vec<T> = eps.to_vec();
    eps.sort_by(|a, b| b.partial_cmp(a).expect("finite eps"));
    if eps.is_empty() || eps.iter().any(|e| !(*e > T::zero())) {
        return Err(Error::InvalidValue("eps must be positive".into()));
    }
    let (a, b) = window;
    if !(a < b) {
        return Err(Error::InvalidValue("empty window".into()));
    }
    let e_max = eps[0];
    let margin = T::lit(10.0) * e_max;
    if a <= margin && b >= -margin {
        return Err(Error::WindowTouchesAtomZero);
    }
    let pi = T::PI();
    let mut im_at = |lam: T, e: T| -> Result<T> { Ok(m(cx(lam, e))?.im) };

    // coarse scan
    let spacing = e_max / T::lit(4.0);
    let n = ((b - a) / spacing).ceil().to_usize().unwrap_or(1).max(2);
    let h = (b - a) / T::from_usize(n).expect("scan size");
    let grid: Vec<T> = (0..=n)
        .map(|i| a + h * T::from_usize(i).expect("index"))
        .collect();
    let mut vals = Vec::with_capacity(grid.len());
    for &lam in &grid {
        vals.push(im_at(lam, e_max)?);
    }
    let mut peaks = Vec::new();
    for i in 1..n {
        if vals[i] > vals[i - 1] && vals[i] >= vals[i + 1] && e_max * vals[i] > T::lit(1e-8) {
            peaks.push(grid[i]);
        }
    }

    let mut atoms = Vec::new();
    for (pi_idx, &p0) in peaks.iter().enumerate() {
        let mut center = p0;
        let mut heights = Vec::with_capacity(eps.len());
        let mut prev_e = e_max;
        for &e in &eps {
            let half = T::lit(3.0) * prev_e;
            center = golden_max(center - half, center + half, e * T::lit(1e-3), &mut |x| {
                im_at(x, e)
            })?;
            heights.push(e * im_at(center, e)?);
            prev_e = e;
        }
        let hmax = heights.iter().fold(T::zero(), |s, v| s.max(*v));
        let hmin = heights.iter().fold(T::infinity(), |s, v| s.min(*v));
        if !(hmin > T::zero()) || (hmax - hmin) > T::lit(0.05) * hmax {
            continue;
        }
        // integration radius: half way to the neighbours, away from 0 and the window edges
        let mut r = center.abs() * T::lit(0.5);
        if pi_idx > 0 {
            r = r.min((center - peaks[pi_idx - 1]) * T::lit(0.5));
        }
        if pi_idx + 1 < peaks.len() {
            r = r.min((peaks[pi_idx + 1] - center) * T::lit(0.5));
        }
        r = r
            .min(center - a)
            .min(b - center)
            .max(T::lit(50.0) * eps[eps.len() - 1]);
        let mut masses = Vec::with_capacity(eps.len());
        for &e in &eps {
            let tmax = (r / e).atan();
            let mut err = None;
            let v = integrate(-tmax, tmax, 16, 16, |t| {
                let c = t.cos();
                match im_at(center + e * t.tan(), e) {
                    Ok(v) => v * e / (c * c),
                    Err(x) => {
                        err = Some(x);
                        T::zero()
                    }
                }
            });
            if let Some(x) = err {
                return Err(x);
            }
            masses.push(v / pi);
        }
        let mass = if masses.len() >= 2 {
            let k = masses.len();
            let (e1, e2) = (eps[k - 2], eps[k - 1]);
            let (m1, m2) = (masses[k - 2], masses[k - 1]);
            m2 - e2 * (m1 - m2) / (e1 - e2)
        } else {
            masses[0]
        };
        atoms.push(SpectralAtom {
            lambda: center,
            mass,
        });
    }

    // left-over mass, extrapolated from scans at eps_max and eps_max / 2
    let trap = |v: &[T], h: T| {
        let inner = v[1..v.len() - 1].iter().fold(T::zero(), |s, x| s + *x);
        (inner + (v[0] + v[v.len() - 1]) * T::lit(0.5)) * h / pi
    };
    let total_coarse = trap(&vals, h);
    let e_half = e_max * T::lit(0.5);
    let n2 = 2 * n;
    let h2 = (b - a) / T::from_usize(n2).expect("scan size");
    let mut vals2 = Vec::with_capacity(n2 + 1);
    for i in 0..=n2 {
        vals2.push(im_at(a + h2 * T::from_usize(i).expect("index"), e_half)?);
    }
    let total_fine = trap(&vals2, h2);
    let total = total_fine + total_fine - total_coarse;
    let atomic = atoms.iter().fold(T::zero(), |s, at| s + at.mass);
    let rest = total - atomic;
    let mut continuous_samples = Vec::new();
    if rest > T::lit(1e-4) * (T::one() + total.abs()) {
        let e_min = eps[eps.len() - 1];
        let k = 200usize;
        for i in 0..=k {
            let lam =
                a + (b - a) * T::from_usize(i).expect("index") / T::from_usize(k).expect("count");
            continuous_samples.push((lam, im_at(lam, e_min)? / pi));
        }
    }
    Ok(SpectralMeasure {
        atoms,
        continuous_samples,
        epsilon_used: eps,
    })
}

/// [`stieltjes_inversion`] driven by [`weyl_m`] of a string.
pub fn stieltjes_inversion_spec<T: Real>(
    spec: &StringSpec<T>,
    window: (T, T),
    eps: &[T],
) -> Result<SpectralMeasure<T>> {
    let tol = WeylOptions::<T>::default().tol;
    stieltjes_inversion(|z| Ok(weyl_m(spec, z, tol)?.m), window, eps)
}

/// `G(x, t) = (1, z) psi(max(x, t)) phi(min(x, t)) / W(psi, phi)`.
pub fn green_kernel<T: Real>(spec: &StringSpec<T>, z: Cx<T>, x: T, t: T) -> Result<[Cx<T>; 2]> {
    let (lo, hi) = if x <= t { (x, t) } else { (t, x) };
    let tol = WeylOptions::<T>::default().tol;
    let m = weyl_m(spec, z, tol)?.m;
    let fs = fundamental_system(spec, z, &[T::zero(), lo, hi], PropagationOptions::default())?;
    let psi = |i: usize| fs.theta[i].f + m * z * fs.phi[i].f;
    // W(psi, phi) = psi(0) phi'(0-) - psi'(0-) phi(0) = psi(0)
    let w = psi(0);
    let g = psi(2) * fs.phi[1].f / w;
    Ok([g, g * z])
}

/// Element `(f1, f2)` of the string's Hilbert space with `f1` piecewise
/// linear through `nodes` (starting at `(0, 0)`) and `f2` given on atoms
/// of `upsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertElement<T> {
    pub nodes: Vec<(T, Cx<T>)>,
    pub f2: Vec<(T, Cx<T>)>,
}

impl<T: Real> HilbertElement<T> {
    /// Point evaluation functional `delta_x`, supported in `[0, L]`.
    pub fn delta(spec: &StringSpec<T>, x: T) -> Result<Self> {
        let l = match spec.length() {
            Length::Finite(l) => l,
            Length::Infinite => {
                return Err(Error::UnsupportedShape(
                    "delta_x has no compact support on a half-line".into(),
                ))
            }
        };
        if !(x > T::zero() && x < l) {
            return Err(Error::PositionOutOfRange { x: x.as_f64() });
        }
        Ok(HilbertElement {
            nodes: vec![
                (T::zero(), cre(T::zero())),
                (x, cre(x * (T::one() - x / l))),
                (l, cre(T::zero())),
            ],
            f2: Vec::new(),
        })
    }

    /// Hat function with peak `1` at `c` and support `[a, b]`.
    pub fn hat(a: T, c: T, b: T) -> Self {
        let mut nodes = vec![(T::zero(), cre(T::zero()))];
        if a > T::zero() {
            nodes.push((a, cre(T::zero())));
        }
        nodes.push((c, cre(T::one())));
        nodes.push((b, cre(T::zero())));
        HilbertElement {
            nodes,
            f2: Vec::new(),
        }
    }

    pub fn f1(&self, x: T) -> Cx<T> {
        for w in self.nodes.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if x >= x0 && x <= x1 {
                if x1 == x0 {
                    return y1;
                }
                return y0 + (y1 - y0) * ((x - x0) / (x1 - x0));
            }
        }
        self.nodes.last().map_or(cre(T::zero()), |n| n.1)
    }

    fn validate(&self, spec: &StringSpec<T>) -> Result<()> {
        let first = self
            .nodes
            .first()
            .ok_or_else(|| Error::UnsupportedShape("no nodes".into()))?;
        if first.0 != T::zero() || first.1 != cre(T::zero()) {
            return Err(Error::UnsupportedShape("f1 must start at (0, 0)".into()));
        }
        if self.nodes.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::UnsupportedShape(
                "nodes must be strictly increasing".into(),
            ));
        }
        let last = self.nodes[self.nodes.len() - 1];
        if last.1 != cre(T::zero()) {
            return Err(Error::UnsupportedShape(
                "f1 must have compact support".into(),
            ));
        }
        spec.check_position(last.0)?;
        for (x, _) in &self.f2 {
            if spec.upsilon().atom_at(*x) == T::zero() {
                return Err(Error::UnsupportedShape(format!(
                    "second component at {x} is not on an atom of upsilon"
                )));
            }
        }
        Ok(())
    }

    fn slopes(&self) -> impl Iterator<Item = (T, T, Cx<T>)> + '_ {
        self.nodes.windows(2).map(|w| {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            (x0, x1, (y1 - y0) / (x1 - x0))
        })
    }
}

/// `<f, g> = int f1' conj(g1') + sum over upsilon atoms of beta f2 conj(g2)`.
pub fn inner_product<T: Real>(
    spec: &StringSpec<T>,
    f: &HilbertElement<T>,
    g: &HilbertElement<T>,
) -> Result<Cx<T>> {
    f.validate(spec)?;
    g.validate(spec)?;
    let mut cuts: Vec<T> = f.nodes.iter().chain(&g.nodes).map(|n| n.0).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite nodes"));
    cuts.dedup();
    let slope = |e: &HilbertElement<T>, x: T| {
        e.slopes()
            .find(|(a, b, _)| x > *a && x < *b)
            .map_or(cre(T::zero()), |s| s.2)
    };
    let mut acc = cre(T::zero());
    for w in cuts.windows(2) {
        let mid = (w[0] + w[1]) * T::lit(0.5);
        acc = acc + slope(f, mid) * slope(g, mid).conj() * (w[1] - w[0]);
    }
    for (x, v) in &f.f2 {
        if let Some((_, u)) = g.f2.iter().find(|(y, _)| y == x) {
            acc = acc + *v * u.conj() * spec.upsilon().atom_at(*x);
        }
    }
    Ok(acc)
}

/// `f^(z) = int phi'(z, x) f1'(x) dx + int z phi(z, x) f2(x) dupsilon(x)`.
pub fn transform_hat<T: Real>(
    spec: &StringSpec<T>,
    f: &HilbertElement<T>,
    lambdas: &[T],
) -> Result<Vec<Cx<T>>> {
    f.validate(spec)?;
    let mut xs: Vec<T> = f
        .nodes
        .iter()
        .map(|n| n.0)
        .chain(f.f2.iter().map(|a| a.0))
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite nodes"));
    xs.dedup();
    let mut out = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let z = cre(lam);
        let fs = fundamental_system(spec, z, &xs, PropagationOptions::default())?;
        let phi = |x: T| {
            let i = xs.iter().position(|y| *y == x).expect("sampled node");
            fs.phi[i].f
        };
        let mut acc = cre(T::zero());
        for (x0, x1, s) in f.slopes() {
            acc = acc + s * (phi(x1) - phi(x0));
        }
        for (x, v) in &f.f2 {
            acc = acc + z * phi(*x) * *v * spec.upsilon().atom_at(*x);
        }
        out.push(acc);
    }
    Ok(out)
}

/// `||P f||^2` for a finite discrete string, with `P` the orthogonal
/// projection onto the closure of the domain: the span of `delta_p` over
/// atom positions `p` in `(0, L)`, times `f2` on atoms of `upsilon` in `(0, L)`.
pub fn projected_norm_sq<T: Real>(spec: &StringSpec<T>, f: &HilbertElement<T>) -> Result<T> {
    let l = require_discrete(spec)?;
    f.validate(spec)?;
    let mut ps: Vec<T> = spec
        .omega()
        .atoms
        .iter()
        .chain(&spec.upsilon().atoms)
        .map(|a| a.x)
        .filter(|x| *x > T::zero())
        .collect();
    ps.sort_by(|a, b| a.partial_cmp(b).expect("finite positions"));
    ps.dedup();
    let n = ps.len();
    // Gram matrix of delta_p: <delta_p, delta_q> = min(p, q) (1 - max(p, q) / L)
    let mut g = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            g[i][j] = ps[i].min(ps[j]) * (T::one() - ps[i].max(ps[j]) / l);
        }
    }
    let rhs: Vec<Cx<T>> = ps.iter().map(|p| f.f1(*p)).collect();
    let sol = solve_spd(g, rhs.clone())?;
    let mut acc = rhs
        .iter()
        .zip(&sol)
        .fold(cre(T::zero()), |s, (r, c)| s + r.conj() * *c)
        .re;
    for (x, v) in &f.f2 {
        if *x > T::zero() {
            acc = acc + v.norm_sqr() * spec.upsilon().atom_at(*x);
        }
    }
    Ok(acc)
}

fn solve_spd<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<Cx<T>>) -> Result<Vec<Cx<T>>> {
    let n = a.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).expect("finite"))
            .expect("non-empty");
        if a[p][c] == T::zero() {
            return Err(Error::InvalidValue("singular Gram matrix".into()));
        }
        a.swap(p, c);
        b.swap(p, c);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] = a[r][k] - f * a[c][k];
            }
            b[r] = b[r] - b[c] * f;
        }
    }
    let mut x = vec![cre(T::zero()); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for k in r + 1..n {
            s = s - x[k] * a[r][k];
        }
        x[r] = s / a[r][r];
    }
    Ok(x)
}

/// Sum of `mass |f^(lambda)|^2` over the atoms of `mu`.
pub fn transform_norm_sq<T: Real>(
    spec: &StringSpec<T>,
    f: &HilbertElement<T>,
    mu: &SpectralMeasure<T>,
) -> Result<T> {
    let lambdas: Vec<T> = mu.atoms.iter().map(|a| a.lambda).collect();
    let vals = transform_hat(spec, f, &lambdas)?;
    Ok(vals
        .iter()
        .zip(&mu.atoms)
        .fold(T::zero(), |s, (v, a)| s + v.norm_sqr() * a.mass))
}
