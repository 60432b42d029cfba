//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating point scalar (`f32` or `f64`).
///
/// The linear algebra is delegated to nalgebra, so the scalar has to be a
/// [`RealField`]; conversions to and from `f64` go through num-traits so that
/// tolerances can be written as plain literals.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::Display + fmt::LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Lossy conversion used for reports and error messages.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the scalar type.
    #[inline]
    fn eps() -> Self {
        Self::default_epsilon()
    }

    /// `max(tol, 64 eps)`: keeps fixed tolerances meaningful for `f32`.
    #[inline]
    fn floor_tol(tol: f64) -> Self {
        let t = Self::lit(tol);
        let e = Self::eps() * Self::lit(64.0);
        if t > e {
            t
        } else {
            e
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[inline]
pub(crate) fn max_abs<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    values
        .into_iter()
        .fold(T::zero(), |acc, v| if v.abs() > acc { v.abs() } else { acc })
}

#[inline]
pub(crate) fn tmax<T: Real>(a: T, b: T) -> T {
    if a > b {
        a
    } else {
        b
    }
}

#[inline]
pub(crate) fn tmin<T: Real>(a: T, b: T) -> T {
    if a < b {
        a
    } else {
        b
    }
}
