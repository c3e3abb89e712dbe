//! Scalar abstraction shared by the regression and testing code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real field the estimators are generic over.
///
/// Implemented for `f32` and `f64`. Special functions (erfc, incomplete gamma)
/// are always evaluated in `f64` and converted back.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Round to `decimals` decimal places, half away from zero.
    fn round_to(self, decimals: u32) -> Self {
        let factor = Self::lit(10f64.powi(decimals as i32));
        (self * factor).round() / factor
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
