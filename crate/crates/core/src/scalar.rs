//! Scalar abstractions.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, Num};

/// Floating point type the numerical code is written against (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Arithmetic-only scalar: enough for bookkeeping that never needs
/// transcendental functions, so exact rationals qualify.
pub trait Scalar: Num + PartialOrd + Clone + Debug {}

impl<T: Num + PartialOrd + Clone + Debug> Scalar for T {}

/// Converts an `f64` literal into `T`.
///
/// Every `Real` can represent every finite `f64` approximately, so this never fails.
#[inline]
pub fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("finite literal")
}
