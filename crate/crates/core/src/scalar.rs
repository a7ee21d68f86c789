//! The real scalar abstraction shared by every numerical routine.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};

/// Floating-point scalar the solvers are generic over: `f32` or `f64`.
///
/// Dense factorizations come from `nalgebra`, so the bound is its
/// `RealField` plus the `num-traits` conversions used to bring in literals
/// and to hand values to `f64`-only special functions.
pub trait Scalar:
    RealField + Copy + Default + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("index representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Unit roundoff of the type.
    fn epsilon() -> Self;
}

impl Scalar for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }
}

impl Scalar for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

/// Max-norm of a slice; zero for an empty slice.
pub fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}
