use std::fmt::{Debug, Display};

use num_traits::Float;

/// Floating-point scalar the loss and divergence math is generic over: f32 or f64.
pub trait Real: Float + Debug + Display + Send + Sync + 'static {
    /// Conversion from `f64` for constants and tolerances.
    fn from_f64(v: f64) -> Self;
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
}
