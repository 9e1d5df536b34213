//! Floating-point scalar abstraction used by the probabilistic half of the crate.
//!
//! Everything that touches transition probabilities, stationary masses or
//! entropies is generic over [`Probability`]. The combinatorial half
//! (adjacency, partitions, SFS checks, enumeration) does not carry a scalar at
//! all.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A floating-point type usable as a probability.
///
/// The associated tolerances are precision dependent; `f64` uses the values
/// the library is specified against, `f32` uses looser ones.
pub trait Probability:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Largest accepted deviation of a row sum from one before a row is rejected.
    const ROW_SUM_TOLERANCE: f64;
    /// Target for `max_j |(mu P)_j - mu_j|` in the stationary solver.
    const STATIONARY_TOLERANCE: f64;

    /// Converts an `f64` constant, panicking only for non-representable input.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Probability for f64 {
    const ROW_SUM_TOLERANCE: f64 = 1e-9;
    const STATIONARY_TOLERANCE: f64 = 1e-13;
}

impl Probability for f32 {
    const ROW_SUM_TOLERANCE: f64 = 1e-5;
    const STATIONARY_TOLERANCE: f64 = 1e-6;
}

/// `x * log2(x)` with the convention `0 log 0 = 0`.
pub(crate) fn xlog2x<T: Probability>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        x * x.log2()
    }
}
