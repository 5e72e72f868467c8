//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Real floating-point scalar usable by the FFT, the dense eigensolvers and
/// the solver loops. Implemented for `f32` and `f64`.
pub trait Real:
    RealField + FftNum + Copy + FromPrimitive + ToPrimitive + Default + Display + LowerExp + Debug
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("representable literal")
    }

    #[inline]
    fn from_usize_exact(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("representable count")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the scalar type.
    fn eps() -> Self;

    fn infinity() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
    fn infinity() -> Self {
        f32::INFINITY
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
    fn infinity() -> Self {
        f64::INFINITY
    }
}
