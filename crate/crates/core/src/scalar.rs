//! Numeric scalar abstraction for money and effort.
//!
//! Most work happens in `f64`. Instances whose rewards and efforts are huge
//! but whose differences are small (the scaling family with `1/δ^n` terms)
//! lose every significant digit in `f64`, so the instance, allocation and
//! metrics layers are generic over [`Real`] and also run in double-double
//! precision via [`TwoFloat`].

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};
pub use twofloat::TwoFloat;

pub trait Real: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Exact embedding of an `f64` literal.
    fn of(x: f64) -> Self;

    /// Nearest `f64`.
    fn as_f64(self) -> f64;

    /// Absolute tolerance under which two utilities count as tied.
    fn utility_tie() -> Self;

    /// Absolute tolerance under which two envelope crossings are merged.
    fn cost_merge() -> Self;

    fn of_usize(n: usize) -> Self {
        Self::of(n as f64)
    }
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }

    fn as_f64(self) -> f64 {
        self
    }

    fn utility_tie() -> Self {
        1e-9
    }

    fn cost_merge() -> Self {
        1e-9
    }
}

impl Real for TwoFloat {
    fn of(x: f64) -> Self {
        TwoFloat::from(x)
    }

    fn as_f64(self) -> f64 {
        f64::from(self)
    }

    fn utility_tie() -> Self {
        TwoFloat::from(1e-9)
    }

    // Breakpoints of the scaling family sit within 1e-20 of each other.
    fn cost_merge() -> Self {
        TwoFloat::from(1e-30)
    }
}
