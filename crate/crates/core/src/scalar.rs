//! Floating-point abstraction shared by the simulation and the regression code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used for conservatism values, observables and regression
/// arithmetic. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Display + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal or parameter into this scalar type.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;

    fn from_count(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Scalar for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}
