//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All estimators are written against [`Scalar`] so the same code runs in
//! `f64` (the default, see the aliases in the crate root) or `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real floating-point type usable by the estimators.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + serde::Serialize
    + 'static
{
    /// Converts an `f64` literal or computed value into `Self`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 value representable in scalar type")
    }

    /// Converts a count into `Self`.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + LinalgScalar
        + ScalarOperand
        + Debug
        + Display
        + Default
        + Sum
        + Send
        + Sync
        + serde::Serialize
        + 'static
{
}

/// Machine tolerance used when matching probability levels supplied by
/// different callers (`0.15` from a parsed range vs `3.0 / 20.0`); widened
/// to a few ulps for `f32`.
pub(crate) const LEVEL_TOLERANCE: f64 = 1e-12;

pub(crate) fn same_level<F: Scalar>(a: F, b: F) -> bool {
    let tol = (4.0 * F::epsilon().as_f64()).max(LEVEL_TOLERANCE);
    (a - b).abs().as_f64() <= tol
}
