//! Floating-point scalar abstraction shared by the estimator, tree metrics and models.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used for probabilities, bracket bounds and tree weights: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Values outside the target range saturate to infinity.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }

    /// Tolerance for fixed-point iterations: `1e-12`, or a few hundred ulps when the
    /// type cannot resolve that.
    fn iteration_tolerance() -> Self {
        let floor = Self::epsilon() * Self::lit(256.0);
        let target = Self::lit(1e-12);
        if target > floor {
            target
        } else {
            floor
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
