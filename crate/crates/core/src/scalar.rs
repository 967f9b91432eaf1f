//! Scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive};

/// Floating point type the distance, clustering and inconsistency code is
/// generic over. Implemented for `f32` and `f64`.
pub trait Scalar: Float + FromPrimitive + Debug + Display + FromStr + Sum + Send + Sync + 'static {
    /// Converts a literal, panicking only for values the type cannot hold.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("count representable in scalar type")
    }
}

impl<T> Scalar for T where T: Float + FromPrimitive + Debug + Display + FromStr + Sum + Send + Sync + 'static {}
