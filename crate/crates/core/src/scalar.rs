//! Floating-point scalar abstraction: f32 or f64.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, Signed, ToPrimitive};

/// Scalar type the numeric kernels are generic over.
///
/// The bounds are a superset of what `rustfft`'s blanket `FftNum` impl
/// needs, so any `T: Scalar` can drive the FFT planners directly.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Signed
    + Sum<Self>
    + Send
    + Sync
    + Debug
    + Display
    + 'static
{
    /// Lossy conversion from `f64`, for constants in generic code.
    fn of(v: f64) -> Self;

    /// Widen to `f64` for accumulation and reporting.
    fn to_f64_lossy(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}
