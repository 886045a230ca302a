//! Scalar abstraction so the grid, energy, and solver code can run at
//! f32 or f64 precision.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar used by all grid and energy computations.
///
/// Implemented for `f32` and `f64` via the blanket impl below.
pub trait Scalar:
    Float
    + FromPrimitive
    + Default
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + std::iter::Sum
    + Send
    + Sync
    + 'static
{
    fn from_f64_c(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }

    fn from_usize_c(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Sensible linear-solver / energy-tie tolerance floor for this precision.
    fn default_tol() -> Self {
        let eps = Self::epsilon();
        let floor = Self::from_f64_c(1e-10);
        if eps > floor {
            eps * Self::from_f64_c(50.0)
        } else {
            floor
        }
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + Default
        + std::fmt::Debug
        + std::fmt::Display
        + std::fmt::LowerExp
        + std::iter::Sum
        + Send
        + Sync
        + 'static
{
}
