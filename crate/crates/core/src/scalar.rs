//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
///
/// The associated tolerances scale with the precision of the type so that
/// simplex and normalization checks stay meaningful in single precision.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + FromStr + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Allowed deviation of a weight vector's total from 1.
    const SIMPLEX_TOL: f64;
    /// Allowed deviation of a normalized pmf's total from 1.
    const UNIT_TOL: f64;
    /// Totals closer to 1 than this are left untouched by normalization.
    const EXACT_TOL: f64;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// Ordering that places NaN last; all crate values are finite in practice.
    #[inline]
    fn cmp_total(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).unwrap_or_else(|| self.is_nan().cmp(&other.is_nan()))
    }
}

impl Real for f32 {
    const SIMPLEX_TOL: f64 = 1e-5;
    const UNIT_TOL: f64 = 1e-5;
    const EXACT_TOL: f64 = 1e-6;
}

impl Real for f64 {
    const SIMPLEX_TOL: f64 = 1e-9;
    const UNIT_TOL: f64 = 1e-6;
    const EXACT_TOL: f64 = 1e-12;
}
