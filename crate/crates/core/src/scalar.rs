//! Floating-point abstraction for the numeric pipeline.
//!
//! Everything that touches data values (regression, diagnostics, thresholds)
//! is generic over [`Scalar`] so the same code runs at `f32` or `f64`
//! precision. Concrete `f64` aliases for the common types live at the crate
//! root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Requirements on the scalar type used for data values and statistics.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + serde::Serialize
    + serde::de::DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into the scalar type.
    fn cast(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant must be representable")
    }

    /// Converts a count into the scalar type.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count must be representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Mean of a slice; zero for an empty slice.
pub(crate) fn mean<F: Scalar>(xs: &[F]) -> F {
    if xs.is_empty() {
        return F::zero();
    }
    xs.iter().copied().sum::<F>() / F::from_count(xs.len())
}
