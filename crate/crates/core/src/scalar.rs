//! Scalar abstraction for the numeric kernels.
//!
//! Similarity, entropy and agreement statistics are written once against
//! [`Scalar`] and instantiated for `f32` and `f64`. The crate root exposes
//! `f64` aliases for everyday use.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating-point scalar usable by the analysis kernels.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumCast + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from a count or index.
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize always converts to a float")
    }

    /// Lossy conversion from `f64`.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 always converts to a float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("float always converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<S: Scalar>(values: &[S]) -> Option<S> {
    if values.is_empty() {
        return None;
    }
    let total: S = values.iter().copied().sum();
    Some(total / S::from_usize_lossy(values.len()))
}

/// Population standard deviation (divides by N) around a precomputed mean.
pub fn population_stddev<S: Scalar>(values: &[S], mean: S) -> S {
    if values.is_empty() {
        return S::zero();
    }
    let ss: S = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
    (ss / S::from_usize_lossy(values.len())).sqrt()
}

/// Median of a slice. NaN values are ordered last.
pub fn median<S: Scalar>(values: &[S]) -> Option<S> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Greater));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        Some(sorted[mid])
    } else {
        let two = S::one() + S::one();
        Some((sorted[mid - 1] + sorted[mid]) / two)
    }
}
