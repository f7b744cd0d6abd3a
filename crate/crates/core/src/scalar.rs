//! Scalar abstraction shared by the math layers.

use nalgebra as na;
use num_traits as nt;

/// Floating point scalar usable by the geometry, optimizer and filter code (f32 or f64).
pub trait Real: Copy + nt::FloatConst + nt::FromPrimitive + nt::ToPrimitive + na::RealField {
    /// Converts an `f64` literal into this scalar type.
    fn lit(value: f64) -> Self;

    /// Lossy conversion back to `f64`, used at I/O boundaries.
    fn to_f64_lossy(self) -> f64;
}

macro_rules! impl_real {
    ($f:ty) => {
        impl Real for $f {
            #[inline]
            fn lit(value: f64) -> Self {
                value as $f
            }

            #[inline]
            fn to_f64_lossy(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
