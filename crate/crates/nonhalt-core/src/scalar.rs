//! Scalar abstraction for the numeric pipeline.
//!
//! Everything that touches logits or probabilities is generic over the
//! floating-point type; symbol and cycle machinery is scalar-free. Concrete
//! aliases for the common instantiations live at the crate root.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the sampler and simulator math runs on.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static {
    /// Absolute tolerance used when validating that probabilities sum to 1.
    fn prob_sum_tolerance() -> Self;
}

impl Scalar for f64 {
    fn prob_sum_tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    // 1e-9 sits below f32 resolution for sums near 1; use a tolerance the
    // type can actually represent.
    fn prob_sum_tolerance() -> Self {
        1e-4
    }
}
