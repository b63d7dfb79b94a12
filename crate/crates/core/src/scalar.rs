//! Scalar abstraction for the numeric parts of the harness.
//!
//! Counting metrics, Fleiss' kappa and the aggregation folds only need field
//! arithmetic, so they are generic over [`Scalar`] and can be evaluated with
//! exact rationals. Interval arithmetic needs square roots and normal
//! quantiles and is generic over [`RealScalar`] (`f32` / `f64`).

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, Num};

/// Field-like number type usable for counting statistics.
pub trait Scalar: Num + Copy + PartialOrd + Debug + Send + Sync + 'static {
    /// Exact conversion of a count.
    fn from_count(n: usize) -> Self;
    /// Lossy conversion for display and serialization.
    fn to_f64(self) -> f64;
}

/// Floating point scalar: f32 or f64.
pub trait RealScalar: Scalar + Float {
    fn from_f64(v: f64) -> Self;
}

impl Scalar for f64 {
    fn from_count(n: usize) -> Self {
        n as f64
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn from_count(n: usize) -> Self {
        n as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl RealScalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
}

impl RealScalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for Ratio<i64> {
    fn from_count(n: usize) -> Self {
        Ratio::from_integer(n as i64)
    }
    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

impl Scalar for Ratio<i128> {
    fn from_count(n: usize) -> Self {
        Ratio::from_integer(n as i128)
    }
    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// `num / den`, or zero when the denominator is zero.
pub(crate) fn ratio_or_zero<T: Scalar>(num: usize, den: usize) -> T {
    if den == 0 {
        T::zero()
    } else {
        T::from_count(num) / T::from_count(den)
    }
}

/// Harmonic mean of two non-negative values; zero when both are zero.
pub(crate) fn harmonic_mean<T: Scalar>(a: T, b: T) -> T {
    let sum = a + b;
    if sum == T::zero() {
        T::zero()
    } else {
        let two = T::one() + T::one();
        two * a * b / sum
    }
}
