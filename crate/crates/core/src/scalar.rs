//! Numeric abstraction shared by every algorithm in the crate.
//!
//! The pipeline only needs field arithmetic, ordering and an absolute value,
//! so it runs unchanged over `f32`, `f64` and exact rationals.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Field element usable as a matrix entry.
pub trait Scalar:
    Num + Signed + PartialOrd + Copy + Debug + Display + Send + Sync + 'static
{
    /// Unit roundoff of the representation; zero for exact types.
    fn epsilon() -> Self;

    /// Lossy conversion from `f64`, used for thresholds and parsed weights.
    ///
    /// Panics on non-finite input.
    fn from_f64(x: f64) -> Self;

    fn to_f64(self) -> f64;

    fn from_usize(n: usize) -> Self;

    /// Larger of two values under `PartialOrd`.
    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn epsilon() -> Self {
                <$t>::EPSILON
            }

            fn from_f64(x: f64) -> Self {
                assert!(x.is_finite(), "non-finite value {x}");
                x as $t
            }

            fn to_f64(self) -> f64 {
                self as f64
            }

            fn from_usize(n: usize) -> Self {
                n as $t
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

macro_rules! impl_ratio_scalar {
    ($i:ty) => {
        impl Scalar for Ratio<$i> {
            fn epsilon() -> Self {
                Ratio::from_integer(0)
            }

            fn from_f64(x: f64) -> Self {
                <Ratio<$i> as FromPrimitive>::from_f64(x)
                    .unwrap_or_else(|| panic!("{x} has no rational approximation"))
            }

            fn to_f64(self) -> f64 {
                ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
            }

            fn from_usize(n: usize) -> Self {
                Ratio::from_integer(n as $i)
            }
        }
    };
}

impl_ratio_scalar!(i64);
impl_ratio_scalar!(i128);
