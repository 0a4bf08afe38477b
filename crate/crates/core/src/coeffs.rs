//! String coefficients `(L, omega, upsilon)` and the travel coordinates.
//!
//! Both measures are finite sums of point masses and piecewise-constant
//! densities. The normalized anti-derivative `w(x) = omega([0, x))` and the
//! distribution function `Upsilon(x) = upsilon([0, x))` are then piecewise
//! linear and left-continuous, and the travel coordinate
//!
//! ```text
//! sigma(x) = x + int_0^x w(t)^2 dt + upsilon([0, x))
//! ```
//!
//! is a piecewise cubic with upward jumps at the atoms of `upsilon`. Its
//! generalized inverse `xi(s) = sup { x : sigma(x) <= s }` is evaluated in
//! closed form on every piece.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Length of the interval `[0, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Length<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> Length<T> {
    pub fn from_value(l: T) -> Self {
        if l.is_infinite() && l > T::zero() {
            Length::Infinite
        } else {
            Length::Finite(l)
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Length::Finite(_))
    }

    /// `L` as a scalar, `+inf` for an infinite length.
    pub fn value(&self) -> T {
        match *self {
            Length::Finite(l) => l,
            Length::Infinite => T::infinity(),
        }
    }

    /// `1/L`, read as zero when `L` is infinite.
    pub fn recip(&self) -> T {
        match *self {
            Length::Finite(l) => l.recip(),
            Length::Infinite => T::zero(),
        }
    }
}

/// Point mass `mass * delta_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<T> {
    pub x: T,
    pub mass: T,
}

/// Constant density `value` on `[a, b)`; `b` may be `+inf` on a half-line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPiece<T> {
    pub a: T,
    pub b: T,
    pub value: T,
}

/// Atoms plus piecewise-constant density.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure<T> {
    pub atoms: Vec<Atom<T>>,
    pub density: Vec<DensityPiece<T>>,
}

impl<T> Default for Measure<T> {
    fn default() -> Self {
        Measure {
            atoms: Vec::new(),
            density: Vec::new(),
        }
    }
}

impl<T: Real> Measure<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn with_atom(mut self, x: T, mass: T) -> Self {
        self.atoms.push(Atom { x, mass });
        self
    }

    pub fn with_density(mut self, a: T, b: T, value: T) -> Self {
        self.density.push(DensityPiece { a, b, value });
        self
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.density.is_empty()
    }

    /// Mass of `[0, x)`.
    pub fn distribution(&self, x: T) -> T {
        let mut acc = T::zero();
        for a in &self.atoms {
            if a.x < x {
                acc = acc + a.mass;
            }
        }
        for p in &self.density {
            if p.a < x {
                acc = acc + p.value * (x.min(p.b) - p.a);
            }
        }
        acc
    }

    /// Mass of the atom sitting exactly at `x` (zero if none).
    pub fn atom_at(&self, x: T) -> T {
        self.atoms
            .iter()
            .filter(|a| a.x == x)
            .fold(T::zero(), |s, a| s + a.mass)
    }

    /// Density value on the piece containing `x` (right-open pieces).
    pub fn rate_at(&self, x: T) -> T {
        self.density
            .iter()
            .filter(|p| p.a <= x && x < p.b)
            .fold(T::zero(), |s, p| s + p.value)
    }

    /// Validates and normalizes: atoms sorted, merged and non-zero; density
    /// pieces sorted, non-overlapping and non-zero.
    pub(crate) fn normalized(&self, length: Length<T>, non_negative: bool) -> Result<Self> {
        let l = length.value();
        let mut atoms: Vec<Atom<T>> = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            if !a.x.is_finite() || a.x < T::zero() || a.x >= l {
                return Err(Error::PositionOutOfRange { x: a.x.as_f64() });
            }
            if !a.mass.is_finite() {
                return Err(Error::InvalidValue(format!("atom mass {}", a.mass)));
            }
            if non_negative && a.mass < T::zero() {
                return Err(Error::NegativeUpsilon {
                    x: a.x.as_f64(),
                    value: a.mass.as_f64(),
                });
            }
            atoms.push(*a);
        }
        atoms.sort_by(|p, q| p.x.partial_cmp(&q.x).expect("finite positions"));
        let mut merged: Vec<Atom<T>> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.x == a.x => last.mass = last.mass + a.mass,
                _ => merged.push(a),
            }
        }
        merged.retain(|a| a.mass != T::zero());

        let mut density: Vec<DensityPiece<T>> = Vec::with_capacity(self.density.len());
        for p in &self.density {
            if p.a.is_nan() || p.b.is_nan() || p.a < T::zero() || !p.a.is_finite() {
                return Err(Error::PositionOutOfRange { x: p.a.as_f64() });
            }
            if p.b > l || (p.b.is_infinite() && length.is_finite()) {
                return Err(Error::PositionOutOfRange { x: p.b.as_f64() });
            }
            if p.b <= p.a {
                return Err(Error::InvalidValue(format!(
                    "empty density interval [{}, {})",
                    p.a, p.b
                )));
            }
            if !p.value.is_finite() {
                return Err(Error::InvalidValue(format!("density value {}", p.value)));
            }
            if non_negative && p.value < T::zero() {
                return Err(Error::NegativeUpsilon {
                    x: p.a.as_f64(),
                    value: p.value.as_f64(),
                });
            }
            density.push(*p);
        }
        density.sort_by(|p, q| p.a.partial_cmp(&q.a).expect("finite endpoints"));
        for w in density.windows(2) {
            if w[1].a < w[0].b {
                return Err(Error::OverlappingDensityIntervals {
                    at: w[1].a.as_f64(),
                });
            }
        }
        density.retain(|p| p.value != T::zero());
        Ok(Measure {
            atoms: merged,
            density,
        })
    }
}

/// Unvalidated string coefficients, as read from input.
#[derive(Debug, Clone, PartialEq)]
pub struct RawString<T> {
    pub length: Length<T>,
    pub omega: Measure<T>,
    pub upsilon: Measure<T>,
}

/// One piece `[start, end)` between consecutive breakpoints.
///
/// On the open piece `w` and `Upsilon` are linear; the atoms sitting at
/// `start` are already included in the `*_start` values (right limits).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub start: T,
    pub end: T,
    pub omega_atom: T,
    pub upsilon_atom: T,
    pub omega_rate: T,
    pub upsilon_rate: T,
    /// `w(start+)`
    pub w_start: T,
    /// `Upsilon(start+)`
    pub ups_start: T,
    /// `sigma(start+)`
    pub sigma_start: T,
    /// `int_0^start w`
    pub w_int_start: T,
    /// `int_0^start sigma`
    pub sigma_int_start: T,
}

impl<T: Real> Segment<T> {
    pub fn len(&self) -> T {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn w_at(&self, tau: T) -> T {
        self.w_start + self.omega_rate * tau
    }

    pub fn ups_at(&self, tau: T) -> T {
        self.ups_start + self.upsilon_rate * tau
    }

    /// `sigma(start + tau)` for `tau > 0`.
    pub fn sigma_at(&self, tau: T) -> T {
        let w0 = self.w_start;
        let d = self.omega_rate;
        let three = T::lit(3.0);
        self.sigma_start
            + (T::one() + self.upsilon_rate + w0 * w0) * tau
            + w0 * d * tau * tau
            + d * d * tau * tau * tau / three
    }

    /// `sigma(start)`, the left limit before the jump of an upsilon atom.
    pub fn sigma_left(&self) -> T {
        self.sigma_start - self.upsilon_atom
    }

    pub fn w_int_at(&self, tau: T) -> T {
        self.w_int_start + self.w_start * tau + self.omega_rate * tau * tau * T::lit(0.5)
    }

    pub fn sigma_int_at(&self, tau: T) -> T {
        let w0 = self.w_start;
        let d = self.omega_rate;
        let t2 = tau * tau;
        self.sigma_int_start
            + self.sigma_start * tau
            + (T::one() + self.upsilon_rate + w0 * w0) * t2 * T::lit(0.5)
            + w0 * d * t2 * tau / T::lit(3.0)
            + d * d * t2 * t2 / T::lit(12.0)
    }

    /// Solves `sigma(start + tau) - sigma(start+) = delta` for `tau >= 0`.
    pub fn travel_inverse(&self, delta: T) -> T {
        if delta <= T::zero() {
            return T::zero();
        }
        let w0 = self.w_start;
        let d = self.omega_rate;
        let lin = T::one() + self.upsilon_rate + w0 * w0;
        let mut tau = if d == T::zero() {
            delta / lin
        } else {
            // u = w0 + d tau solves u^3 + p u = q with p > 0 (one real root)
            let three = T::lit(3.0);
            let p = three * (T::one() + self.upsilon_rate);
            let q = three * d * delta + w0 * w0 * w0 + p * w0;
            let disc = (q * q / T::lit(4.0) + p * p * p / T::lit(27.0)).sqrt();
            let t1 = (q.abs() / T::lit(2.0) + disc).cbrt();
            let u = q.signum() * (t1 - p / (three * t1));
            (u - w0) / d
        };
        if d != T::zero() {
            // polish against cancellation in (u - w0) / d
            for _ in 0..3 {
                let g = self.sigma_at(tau) - self.sigma_start - delta;
                let wt = self.w_at(tau);
                let dg = T::one() + self.upsilon_rate + wt * wt;
                tau = tau - g / dg;
            }
        }
        let len = self.len();
        tau.max(T::zero()).min(len)
    }
}

/// Validated string coefficients together with their piecewise description.
#[derive(Debug, Clone, PartialEq)]
pub struct StringSpec<T> {
    length: Length<T>,
    omega: Measure<T>,
    upsilon: Measure<T>,
    segments: Vec<Segment<T>>,
}

/// Validates raw coefficients, returning the normalized spec.
pub fn validate_spec<T: Real>(raw: RawString<T>) -> Result<StringSpec<T>> {
    StringSpec::new(raw)
}

impl<T: Real> StringSpec<T> {
    pub fn new(raw: RawString<T>) -> Result<Self> {
        if let Length::Finite(l) = raw.length {
            if l.is_nan() || l <= T::zero() {
                return Err(Error::NonPositiveLength);
            }
        }
        let omega = raw.omega.normalized(raw.length, false)?;
        let upsilon = raw.upsilon.normalized(raw.length, true)?;
        let segments = build_segments(raw.length, &omega, &upsilon);
        Ok(StringSpec {
            length: raw.length,
            omega,
            upsilon,
            segments,
        })
    }

    /// String with vanishing coefficients on `[0, L)`.
    pub fn empty(length: Length<T>) -> Result<Self> {
        Self::new(RawString {
            length,
            omega: Measure::zero(),
            upsilon: Measure::zero(),
        })
    }

    pub fn from_parts(length: Length<T>, omega: Measure<T>, upsilon: Measure<T>) -> Result<Self> {
        Self::new(RawString {
            length,
            omega,
            upsilon,
        })
    }

    pub fn length(&self) -> Length<T> {
        self.length
    }

    pub fn omega(&self) -> &Measure<T> {
        &self.omega
    }

    pub fn upsilon(&self) -> &Measure<T> {
        &self.upsilon
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    pub fn raw(&self) -> RawString<T> {
        RawString {
            length: self.length,
            omega: self.omega.clone(),
            upsilon: self.upsilon.clone(),
        }
    }

    pub fn coefficients(&self) -> CoefficientView<'_, T> {
        CoefficientView { spec: self }
    }

    pub fn travel(&self) -> TravelCoords<'_, T> {
        TravelCoords { spec: self }
    }

    pub fn is_purely_atomic(&self) -> bool {
        self.omega.density.is_empty() && self.upsilon.density.is_empty()
    }

    /// `omega({0})`
    pub fn omega_at_zero(&self) -> T {
        self.omega.atom_at(T::zero())
    }

    /// `upsilon({0})`
    pub fn upsilon_at_zero(&self) -> T {
        self.upsilon.atom_at(T::zero())
    }

    /// Spectrum sign law: `upsilon` vanishes on `(0, L)` and `w` is non-decreasing.
    pub fn predicts_nonnegative_spectrum(&self) -> bool {
        let ups_inside =
            self.upsilon.atoms.iter().any(|a| a.x > T::zero()) || !self.upsilon.density.is_empty();
        let w_monotone = self
            .omega
            .atoms
            .iter()
            .filter(|a| a.x > T::zero())
            .all(|a| a.mass >= T::zero())
            && self.omega.density.iter().all(|p| p.value >= T::zero());
        !ups_inside && w_monotone
    }

    /// Krein class: `upsilon` identically zero and `omega` a non-negative measure.
    pub fn is_krein_string(&self) -> bool {
        self.upsilon.is_zero()
            && self.omega.atoms.iter().all(|a| a.mass >= T::zero())
            && self.omega.density.iter().all(|p| p.value >= T::zero())
    }

    pub(crate) fn check_position(&self, x: T) -> Result<()> {
        let ok = x >= T::zero()
            && x.is_finite()
            && match self.length {
                Length::Finite(l) => x <= l,
                Length::Infinite => true,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::PositionOutOfRange { x: x.as_f64() })
        }
    }

    /// Index of the segment whose half-open interior `(start, end]` holds `x > 0`.
    pub(crate) fn segment_index(&self, x: T) -> Option<usize> {
        let k = self.segments.partition_point(|s| s.start < x);
        if k == 0 {
            None
        } else {
            Some(k - 1)
        }
    }
}

fn build_segments<T: Real>(
    length: Length<T>,
    omega: &Measure<T>,
    upsilon: &Measure<T>,
) -> Vec<Segment<T>> {
    let l = length.value();
    let mut bps: Vec<T> = vec![T::zero()];
    for m in [omega, upsilon] {
        bps.extend(m.atoms.iter().map(|a| a.x));
        for p in &m.density {
            bps.push(p.a);
            if p.b < l {
                bps.push(p.b);
            }
        }
    }
    bps.retain(|x| *x < l);
    bps.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    bps.dedup();

    let mut out: Vec<Segment<T>> = Vec::with_capacity(bps.len());
    let (mut w, mut ups, mut sig, mut wint, mut sint) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for (k, &start) in bps.iter().enumerate() {
        let end = bps.get(k + 1).copied().unwrap_or(l);
        let oa = omega.atom_at(start);
        let ua = upsilon.atom_at(start);
        let seg = Segment {
            start,
            end,
            omega_atom: oa,
            upsilon_atom: ua,
            omega_rate: omega.rate_at(start),
            upsilon_rate: upsilon.rate_at(start),
            w_start: w + oa,
            ups_start: ups + ua,
            sigma_start: sig + ua,
            w_int_start: wint,
            sigma_int_start: sint,
        };
        if end.is_finite() {
            let tau = seg.len();
            w = seg.w_at(tau);
            ups = seg.ups_at(tau);
            sig = seg.sigma_at(tau);
            wint = seg.w_int_at(tau);
            sint = seg.sigma_int_at(tau);
        }
        out.push(seg);
    }
    out
}

/// Read access to `w`, `Upsilon` and the breakpoint set.
#[derive(Debug, Clone, Copy)]
pub struct CoefficientView<'a, T> {
    spec: &'a StringSpec<T>,
}

impl<'a, T: Real> CoefficientView<'a, T> {
    /// `w(x) = omega([0, x))`
    pub fn w(&self, x: T) -> T {
        match self.spec.segment_index(x) {
            None => T::zero(),
            Some(k) => {
                let s = &self.spec.segments[k];
                s.w_at(x - s.start)
            }
        }
    }

    /// `Upsilon(x) = upsilon([0, x))`
    pub fn upsilon(&self, x: T) -> T {
        match self.spec.segment_index(x) {
            None => T::zero(),
            Some(k) => {
                let s = &self.spec.segments[k];
                s.ups_at(x - s.start)
            }
        }
    }

    /// `int_0^x w(t) dt`
    pub fn w_integral(&self, x: T) -> T {
        match self.spec.segment_index(x) {
            None => T::zero(),
            Some(k) => {
                let s = &self.spec.segments[k];
                s.w_int_at(x - s.start)
            }
        }
    }

    /// Sorted breakpoints: `0`, atom positions and density endpoints below `L`.
    pub fn breakpoints(&self) -> Vec<T> {
        self.spec.segments.iter().map(|s| s.start).collect()
    }
}

/// The travel coordinate `sigma` and its generalized inverse `xi`.
#[derive(Debug, Clone, Copy)]
pub struct TravelCoords<'a, T> {
    spec: &'a StringSpec<T>,
}

impl<'a, T: Real> TravelCoords<'a, T> {
    pub fn sigma(&self, x: T) -> T {
        match self.spec.segment_index(x) {
            None => T::zero(),
            Some(k) => {
                let s = &self.spec.segments[k];
                s.sigma_at(x - s.start)
            }
        }
    }

    /// `int_0^x sigma(t) dt`
    pub fn sigma_integral(&self, x: T) -> T {
        match self.spec.segment_index(x) {
            None => T::zero(),
            Some(k) => {
                let s = &self.spec.segments[k];
                s.sigma_int_at(x - s.start)
            }
        }
    }

    /// `sigma(L)`; infinite for an infinite length.
    pub fn sigma_length(&self) -> T {
        match self.spec.length {
            Length::Infinite => T::infinity(),
            Length::Finite(l) => self.sigma(l),
        }
    }

    pub fn xi(&self, s: T) -> T {
        let segs = &self.spec.segments;
        if s <= T::zero() {
            // an upsilon atom at 0 keeps xi at 0 up to its mass
            return T::zero();
        }
        let k = segs.partition_point(|g| g.sigma_left() <= s).max(1) - 1;
        let g = &segs[k];
        if s <= g.sigma_start {
            return g.start;
        }
        let delta = s - g.sigma_start;
        if g.end.is_finite() && s >= g.sigma_at(g.len()) {
            return g.end;
        }
        g.start + g.travel_inverse(delta)
    }
}

/// Returns `(w(x), Upsilon(x), sigma(x))`.
pub fn eval_coefficients<T: Real>(spec: &StringSpec<T>, x: T) -> Result<(T, T, T)> {
    spec.check_position(x)?;
    let c = spec.coefficients();
    Ok((c.w(x), c.upsilon(x), spec.travel().sigma(x)))
}

/// Generalized inverse of the travel coordinate.
pub fn xi_eval<T: Real>(spec: &StringSpec<T>, s: T) -> Result<T> {
    if s.is_nan() || s < T::zero() {
        return Err(Error::InvalidValue(format!("travel coordinate {s}")));
    }
    Ok(spec.travel().xi(s))
}
