//! Dense univariate polynomials and real-arithmetic root finding.
//!
//! Coefficients are stored lowest degree first. Exact arithmetic is
//! available through [`RationalPoly`]; roots are computed in floating point
//! from the companion matrix with a Francis double-shift QR iteration.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::{cx, Cx, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Poly<S> {
    coeffs: Vec<S>,
}

pub type RationalPoly = Poly<BigRational>;

impl<S: Clone + Zero + One + PartialEq> Poly<S> {
    pub fn new(mut coeffs: Vec<S>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn constant(c: S) -> Self {
        Poly::new(vec![c])
    }

    /// `a + b z + c z^2`
    pub fn quadratic(a: S, b: S, c: S) -> Self {
        Poly::new(vec![a, b, c])
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: usize) -> S {
        self.coeffs.get(k).cloned().unwrap_or_else(S::zero)
    }

    pub fn scale(&self, s: &S) -> Self
    where
        S: Mul<Output = S>,
    {
        Poly::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    pub fn derivative(&self) -> Self
    where
        S: Mul<Output = S> + Add<Output = S>,
    {
        let mut out = Vec::with_capacity(self.coeffs.len().saturating_sub(1));
        let mut k = S::one();
        for c in self.coeffs.iter().skip(1) {
            out.push(c.clone() * k.clone());
            k = k + S::one();
        }
        Poly::new(out)
    }
}

impl<S: Clone + Zero + One + PartialEq + Add<Output = S>> Add for &Poly<S> {
    type Output = Poly<S>;
    fn add(self, o: &Poly<S>) -> Poly<S> {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }
}

impl<S: Clone + Zero + One + PartialEq + Sub<Output = S>> Sub for &Poly<S> {
    type Output = Poly<S>;
    fn sub(self, o: &Poly<S>) -> Poly<S> {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }
}

impl<S: Clone + Zero + One + PartialEq + Neg<Output = S>> Neg for &Poly<S> {
    type Output = Poly<S>;
    fn neg(self) -> Poly<S> {
        Poly::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

impl<S: Clone + Zero + One + PartialEq + Add<Output = S> + Mul<Output = S>> Mul for &Poly<S> {
    type Output = Poly<S>;
    fn mul(self, o: &Poly<S>) -> Poly<S> {
        if self.is_zero() || o.is_zero() {
            return Poly::new(Vec::new());
        }
        let mut out = vec![S::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Poly::new(out)
    }
}

/// Exact rational image of a finite float.
pub fn rational_from<T: Real>(x: T) -> Result<BigRational> {
    BigRational::from_float(x.as_f64())
        .ok_or_else(|| Error::InvalidValue(format!("non-finite value {x}")))
}

/// Nearest float to a rational, robust to huge numerators and denominators.
pub fn rational_to<T: Real>(q: &BigRational) -> T {
    if let Some(v) = q.to_f64() {
        if v.is_finite() && (v != 0.0 || q.is_zero()) {
            return T::lit(v);
        }
    }
    // fall back to scaling by a power of two
    let (n, d) = (q.numer(), q.denom());
    let shift = n.bits() as i64 - d.bits() as i64;
    let scaled = if shift >= 0 {
        BigRational::new(n.clone(), d.clone() << (shift as usize))
    } else {
        BigRational::new(n.clone() << ((-shift) as usize), d.clone())
    };
    let m = scaled.to_f64().unwrap_or(0.0);
    let v = m * 2f64.powi(shift.clamp(-2000, 2000) as i32);
    T::from_f64(v).unwrap_or_else(|| {
        if q.is_negative() {
            T::neg_infinity()
        } else {
            T::infinity()
        }
    })
}

impl RationalPoly {
    /// Exact Horner evaluation.
    pub fn eval_exact(&self, x: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn to_real<T: Real>(&self) -> Poly<T> {
        Poly::new(self.coeffs.iter().map(rational_to).collect())
    }

    pub fn integer(c: i64) -> Self {
        Poly::constant(BigRational::from_integer(BigInt::from(c)))
    }
}

impl<T: Real> Poly<T> {
    /// Horner evaluation at a complex point.
    pub fn eval(&self, z: Cx<T>) -> Cx<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(cx(T::zero(), T::zero()), |acc, c| acc * z + *c)
    }

    /// All complex roots, from the eigenvalues of the balanced companion matrix.
    pub fn roots(&self) -> Result<Vec<Cx<T>>> {
        let n = match self.degree() {
            None => return Err(Error::RootFinding("zero polynomial".into())),
            Some(0) => return Ok(Vec::new()),
            Some(n) => n,
        };
        let lead = self.coeffs[n];
        let mut a = vec![vec![T::zero(); n]; n];
        for j in 0..n {
            a[0][j] = -self.coeffs[n - 1 - j] / lead;
        }
        for i in 1..n {
            a[i][i - 1] = T::one();
        }
        balance(&mut a);
        hqr(&mut a)
    }
}

/// Diagonal similarity scaling by powers of two so row and column norms match.
fn balance<T: Real>(a: &mut [Vec<T>]) {
    let n = a.len();
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let (mut r, mut c) = (T::zero(), T::zero());
            for j in 0..n {
                if j != i {
                    c = c + a[j][i].abs();
                    r = r + a[i][j].abs();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let s = c + r;
            let mut f = T::one();
            let mut g = r / radix;
            while c < g {
                f = f * radix;
                c = c * sqrdx;
            }
            g = r * radix;
            while c > g {
                f = f / radix;
                c = c / sqrdx;
            }
            if (c + r) / f < T::lit(0.95) * s {
                done = false;
                let gi = f.recip();
                for v in a[i].iter_mut() {
                    *v = *v * gi;
                }
                for row in a.iter_mut() {
                    row[i] = row[i] * f;
                }
            }
        }
    }
}

fn sign<T: Real>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix (destroys `a`).
fn hqr<T: Real>(a: &mut [Vec<T>]) -> Result<Vec<Cx<T>>> {
    let n = a.len();
    let mut out = vec![cx(T::zero(), T::zero()); n];
    let mut anorm = T::zero();
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm = anorm + a[i][j].abs();
        }
    }
    let half = T::lit(0.5);
    let mut nn = n as isize - 1;
    let mut t = T::zero();
    while nn >= 0 {
        let nu = nn as usize;
        let mut its = 0;
        loop {
            let mut l = nu;
            while l >= 1 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == T::zero() {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = T::zero();
                    break;
                }
                l -= 1;
            }
            let mut x = a[nu][nu];
            if l == nu {
                out[nu] = cx(x + t, T::zero());
                nn -= 1;
                break;
            }
            let mut y = a[nu - 1][nu - 1];
            let mut w = a[nu][nu - 1] * a[nu - 1][nu];
            if l == nu - 1 {
                let p = half * (y - x);
                let q = p * p + w;
                let zz = q.abs().sqrt();
                x = x + t;
                if q >= T::zero() {
                    let zz = p + sign(zz, p);
                    let mut lo = x + zz;
                    let hi = x + zz;
                    if zz != T::zero() {
                        lo = x - w / zz;
                    }
                    out[nu - 1] = cx(hi, T::zero());
                    out[nu] = cx(lo, T::zero());
                } else {
                    out[nu - 1] = cx(x + p, -zz);
                    out[nu] = cx(x + p, zz);
                }
                nn -= 2;
                break;
            }
            if its == 60 {
                return Err(Error::RootFinding("QR iteration did not converge".into()));
            }
            if its == 10 || its == 20 || its == 40 {
                t = t + x;
                for i in 0..=nu {
                    a[i][i] = a[i][i] - x;
                }
                let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            its += 1;
            let (mut p, mut q, mut r);
            let mut m = nu - 2;
            loop {
                let zz = a[m][m];
                let r0 = x - zz;
                let s0 = y - zz;
                p = (r0 * s0 - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - zz - r0 - s0;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p = p / s;
                q = q / s;
                r = r / s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + zz.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                a[i][i - 2] = T::zero();
                if i != m + 2 {
                    a[i][i - 3] = T::zero();
                }
            }
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k != nu - 1 {
                        a[k + 2][k - 1]
                    } else {
                        T::zero()
                    };
                    x = p.abs() + q.abs() + r.abs();
                    if x != T::zero() {
                        p = p / x;
                        q = q / x;
                        r = r / x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != T::zero() {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p = p + s;
                    x = p / s;
                    y = q / s;
                    let zz = r / s;
                    q = q / p;
                    r = r / p;
                    for j in k..=nu {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != nu - 1 {
                            pp = pp + r * a[k + 2][j];
                            a[k + 2][j] = a[k + 2][j] - pp * zz;
                        }
                        a[k + 1][j] = a[k + 1][j] - pp * y;
                        a[k][j] = a[k][j] - pp * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for row in a.iter_mut().take(mmin + 1).skip(l) {
                        let mut pp = x * row[k] + y * row[k + 1];
                        if k != nu - 1 {
                            pp = pp + zz * row[k + 2];
                            row[k + 2] = row[k + 2] - pp * r;
                        }
                        row[k + 1] = row[k + 1] - pp * q;
                        row[k] = row[k] - pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(out)
}
