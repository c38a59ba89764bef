//! The scalar abstraction shared by the numeric modules.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the geometry, loss and metric code.
///
/// Implemented for `f32` and `f64`. The registration pipeline itself runs on
/// `f64`; `f32` is what goes over the wire and into `.pmap` files.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// Tolerance for structural checks (orthonormality, degeneracy):
    /// `1e-9` for `f64`, scaled by machine epsilon for coarser types.
    #[inline]
    fn structural_tol() -> Self {
        let eps = Self::default_epsilon() * Self::lit(1000.0);
        eps.max(Self::lit(1e-9))
    }
}

impl Real for f32 {}
impl Real for f64 {}
