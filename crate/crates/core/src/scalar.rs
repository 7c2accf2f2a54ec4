use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar used by every numeric routine in the crate.
///
/// Implemented for `f32` and `f64`. Probabilities, log-likelihoods and
/// regression weights are all carried in this type.
pub trait Float:
    num_traits::Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal or computed value.
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    /// Conversion from a count.
    fn of_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count is representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Float for f32 {}
impl Float for f64 {}
