//! Scalar abstractions.
//!
//! Everything that evaluates a transcendental function is generic over [`Real`]
//! (`f32` or `f64`). The Fourier-mode algebra only needs field operations and is
//! generic over [`Field`], which also admits exact rational coefficients.

use std::fmt::{Debug, Display, LowerExp};
use std::ops::Neg;
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Floating point scalar used by the integrators, stencils and series evaluation.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Coefficient field for Fourier-mode algebra.
pub trait Field: Num + Neg<Output = Self> + Clone + FromPrimitive + Debug {}

impl<S: Num + Neg<Output = S> + Clone + FromPrimitive + Debug> Field for S {}

/// Converts an `f64` literal into the working precision.
#[inline]
pub fn cst<T: FromPrimitive>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in the working precision")
}

/// Converts an integer into a coefficient-field element.
#[inline]
pub fn int<S: FromPrimitive>(k: i64) -> S {
    S::from_i64(k).expect("integer representable in the coefficient field")
}

/// `e^{i theta}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Multiplication by the imaginary unit, exact in any field.
#[inline]
pub fn times_i<S: Num + Clone + Neg<Output = S>>(z: &Complex<S>) -> Complex<S> {
    Complex::new(-z.im.clone(), z.re.clone())
}

pub(crate) fn is_finite<T: Real>(z: Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
