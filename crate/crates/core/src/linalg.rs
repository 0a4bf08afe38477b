//! Small fixed-size complex linear algebra.

use std::ops::Mul;

use crate::scalar::{Cx, Real};

/// 2x2 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T> {
    pub m: [[Cx<T>; 2]; 2],
}

impl<T: Real> Mat2<T> {
    pub fn new(a: Cx<T>, b: Cx<T>, c: Cx<T>, d: Cx<T>) -> Self {
        Mat2 {
            m: [[a, b], [c, d]],
        }
    }

    pub fn identity() -> Self {
        let o = Cx::new(T::one(), T::zero());
        let z = Cx::new(T::zero(), T::zero());
        Mat2::new(o, z, z, o)
    }

    pub fn det(&self) -> Cx<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> Cx<T> {
        self.m[0][0] + self.m[1][1]
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        Mat2::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    pub fn add(&self, o: &Self) -> Self {
        Mat2::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }

    pub fn apply(&self, v: [Cx<T>; 2]) -> [Cx<T>; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Inverse of a unimodular matrix (det = 1), i.e. the adjugate.
    pub fn unimodular_inverse(&self) -> Self {
        Mat2::new(self.m[1][1], -self.m[0][1], -self.m[1][0], self.m[0][0])
    }

    pub fn max_abs(&self) -> T {
        let mut r = T::zero();
        for row in &self.m {
            for e in row {
                r = r.max(e.norm());
            }
        }
        r
    }

    pub fn is_finite(&self) -> bool {
        self.m
            .iter()
            .flatten()
            .all(|e| e.re.is_finite() && e.im.is_finite())
    }

    /// `exp(M)` for trace-free `M`, via `M^2 = -det(M) I`.
    pub fn exp_traceless(&self) -> Self {
        let q2 = -self.det();
        let (c, s) = cosh_sinhc(q2);
        Mat2::identity().scale(c).add(&self.scale(s))
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Mat2<T>;
    fn mul(self, o: Mat2<T>) -> Mat2<T> {
        let a = &self.m;
        let b = &o.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Returns `(cosh q, sinh(q)/q)` as functions of `q^2`; both are entire in `q^2`.
pub fn cosh_sinhc<T: Real>(q2: Cx<T>) -> (Cx<T>, Cx<T>) {
    let one = Cx::new(T::one(), T::zero());
    if q2.norm() < T::lit(1e-6) {
        let c = one + q2 * T::lit(0.5) + q2 * q2 * T::lit(1.0 / 24.0);
        let s = one + q2 * T::lit(1.0 / 6.0) + q2 * q2 * T::lit(1.0 / 120.0);
        return (c, s);
    }
    let q = q2.sqrt();
    (q.cosh(), q.sinh() / q)
}

/// Returns `(cos(k^(1/2) t), sin(k^(1/2) t)/k^(1/2), (1 - cos(k^(1/2) t))/k)` for the
/// constant-coefficient equation `-f'' = k f`. Exact at `k = 0`.
pub fn wave_kernels<T: Real>(k: Cx<T>, t: T) -> (Cx<T>, Cx<T>, Cx<T>) {
    let one = Cx::new(T::one(), T::zero());
    let tc = Cx::new(t, T::zero());
    if k.re == T::zero() && k.im == T::zero() {
        return (one, tc, Cx::new(t * t * T::lit(0.5), T::zero()));
    }
    let x2 = k * (t * t);
    if x2.norm() < T::lit(1e-4) {
        // series in x2 = k t^2
        let c = one - x2 * T::lit(0.5) + x2 * x2 * T::lit(1.0 / 24.0)
            - x2 * x2 * x2 * T::lit(1.0 / 720.0);
        let s = (one - x2 * T::lit(1.0 / 6.0) + x2 * x2 * T::lit(1.0 / 120.0)
            - x2 * x2 * x2 * T::lit(1.0 / 5040.0))
            * t;
        let q = (one * T::lit(0.5) - x2 * T::lit(1.0 / 24.0) + x2 * x2 * T::lit(1.0 / 720.0)
            - x2 * x2 * x2 * T::lit(1.0 / 40320.0))
            * (t * t);
        return (c, s, q);
    }
    let r = k.sqrt();
    let arg = r * t;
    let c = arg.cos();
    (c, arg.sin() / r, (one - c) / k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    #[test]
    fn traceless_exponential_matches_series() {
        let m = Mat2::new(c(0.3, 0.1), c(-0.7, 0.2), c(0.4, -0.5), c(-0.3, -0.1));
        let e = m.exp_traceless();
        // brute force Taylor series
        let mut term = Mat2::identity();
        let mut sum = Mat2::identity();
        for k in 1..40 {
            term = (term * m).scale(c(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
        }
        for i in 0..2 {
            for j in 0..2 {
                assert!((e.m[i][j] - sum.m[i][j]).norm() < 1e-14);
            }
        }
        assert!((e.det() - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn wave_kernels_continuous_across_series_switch() {
        let t = 0.37;
        for k in [c(1e-5, 2e-5), c(1e-3, -2e-3), c(0.8, 0.1)] {
            let (cc, s, q) = wave_kernels(k, t);
            let r = k.sqrt();
            assert!((cc - (r * t).cos()).norm() < 1e-13);
            assert!((s - (r * t).sin() / r).norm() < 1e-13);
            assert!((q - (c(1.0, 0.0) - (r * t).cos()) / k).norm() < 1e-10);
        }
    }
}
