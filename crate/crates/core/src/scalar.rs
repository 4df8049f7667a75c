//! Scalar abstraction shared by every probability computation in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar: `f32` or `f64`.
///
/// Tolerances in the crate are stated for `f64`; `f32` instantiations are
/// usable but only meet looser tolerances.
pub trait Scalar:
    Float + FromPrimitive + NumCast + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for finite inputs.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Tolerance used for sum-to-one checks on a single distribution.
    fn sum_tolerance() -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn sum_tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    #[inline]
    fn sum_tolerance() -> Self {
        1e-5
    }
}
