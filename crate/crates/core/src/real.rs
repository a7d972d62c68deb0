//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar the dynamics are generic over (`f32` or `f64`).
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Lossy conversion used for error reporting and output.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle<T: Real>(angle: T) -> T {
    let tau = T::two_pi();
    let wrapped = angle - tau * (angle / tau).floor();
    // floor can leave exactly tau after rounding
    if wrapped >= tau {
        T::zero()
    } else {
        wrapped
    }
}

/// Removes 2π jumps from a sampled phase so consecutive values differ by less than π.
pub fn unwrap_phase<T: Real>(phases: &[T]) -> Vec<T> {
    let tau = T::two_pi();
    let pi = T::PI();
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = T::zero();
    for (k, &phase) in phases.iter().enumerate() {
        if k > 0 {
            let prev = phases[k - 1];
            let jump = phase - prev;
            if jump > pi {
                offset = offset - tau;
            } else if jump < -pi {
                offset = offset + tau;
            }
        }
        out.push(phase + offset);
    }
    out
}
