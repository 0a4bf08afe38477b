//! Scalar abstraction shared by every module.
//!
//! All numerics are written against [`Real`], so the same code runs in `f32`
//! and `f64`. Exact rational arithmetic is used separately where polynomial
//! coefficients are built (see [`crate::poly`]).

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold at all.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over a [`Real`].
pub type Cx<T> = Complex<T>;

#[inline]
pub(crate) fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn cre<T: Real>(re: T) -> Cx<T> {
    Complex::new(re, T::zero())
}

/// Square root with non-negative imaginary part (the branch that makes
/// `exp(i * r * x)` decay for `x -> +inf`).
pub fn sqrt_upper<T: Real>(k: Cx<T>) -> Cx<T> {
    let r = k.sqrt();
    if r.im < T::zero() {
        -r
    } else {
        r
    }
}

/// Relative/absolute closeness helper used by convergence loops.
#[inline]
pub(crate) fn close<T: Real>(a: Cx<T>, b: Cx<T>, tol: T) -> bool {
    (a - b).norm() <= tol * (T::one() + a.norm().max(b.norm()))
}
