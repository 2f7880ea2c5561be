//! Scalar abstraction shared by every real-valued computation in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type used for averages, confidence bounds and AUC values.
///
/// Implemented for `f32` and `f64`. Counts (pulls, rewards, module totals)
/// stay integral; only derived quantities are carried in a `Scalar`.
pub trait Scalar:
    Float + FromPrimitive + Debug + Display + Default + Send + Sync + Serialize + DeserializeOwned + 'static
{
    /// Exact conversion for counts; panics only if the count cannot be represented at all.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as float")
    }

    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer representable as float")
    }

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 representable")
    }

    fn half() -> Self {
        Self::from_f64_lossy(0.5)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
