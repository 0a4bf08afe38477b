//! Gauss–Legendre quadrature.

use crate::scalar::Real;

/// Nodes and weights of the `n`-point rule on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut x = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Newton on P_n from the Chebyshev-like initial guess
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = T::lit(-z);
        x[n - 1 - i] = T::lit(z);
        w[i] = T::lit(wi);
        w[n - 1 - i] = T::lit(wi);
    }
    (x, w)
}

/// Composite rule: `panels` equal panels of an `n`-point rule on `[a, b]`.
pub fn integrate<T: Real>(a: T, b: T, panels: usize, n: usize, mut f: impl FnMut(T) -> T) -> T {
    let (xs, ws) = gauss_legendre::<T>(n);
    let h = (b - a) / T::from_usize(panels).expect("panel count");
    let half = T::lit(0.5);
    let mut acc = T::zero();
    for p in 0..panels {
        let lo = a + h * T::from_usize(p).expect("index");
        let mid = lo + h * half;
        for (x, w) in xs.iter().zip(&ws) {
            acc = acc + *w * f(mid + *x * h * half) * h * half;
        }
    }
    acc
}
