//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! Linear algebra and elementary functions come from [`nalgebra::RealField`];
//! literal conversion and constants come from `num-traits`. Both `f32` and
//! `f64` implement [`Real`]; tolerances scale with the machine epsilon of the
//! chosen type.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::{Complex, RealField};
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar used throughout the crate.
pub trait Real:
    RealField + Copy + FloatConst + FromPrimitive + ToPrimitive + LowerExp + Display + Debug
{
    /// Converts an `f64` literal. Never fails for the implemented types.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal fits the scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Default absolute tolerance for adaptive quadrature.
    fn quad_tol() -> Self;

    /// Default tolerance on minimum eigenvalues in positivity checks.
    fn eig_tol() -> Self;

    /// Relative tolerance for symmetry tests on user input.
    fn sym_tol() -> Self;
}

impl Real for f64 {
    fn quad_tol() -> Self {
        1e-10
    }
    fn eig_tol() -> Self {
        1e-10
    }
    fn sym_tol() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn quad_tol() -> Self {
        1e-5
    }
    fn eig_tol() -> Self {
        1e-5
    }
    fn sym_tol() -> Self {
        1e-6
    }
}

/// `e^{i x}`.
#[inline]
pub fn cis<T: Real>(x: T) -> Complex<T> {
    Complex::new(x.cos(), x.sin())
}

#[inline]
pub fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    let m = z.re.exp();
    Complex::new(m * z.im.cos(), m * z.im.sin())
}

#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

#[inline]
pub fn c0<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn c1<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

#[inline]
pub fn creal<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}
