use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the curve math is written against: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every value passed here is representable.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal converts to scalar")
    }

    /// Converts a count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count converts to scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
