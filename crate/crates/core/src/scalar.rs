//! Real scalar abstraction shared by every numeric module.

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point type the numerics are generic over (`f32` or `f64`).
///
/// Complex quantities are always `Complex<T>` for a `T: Scalar`.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + std::fmt::Display + Send + Sync + 'static
{
    /// Converts an `f64` constant, rounding to the target precision.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Entrywise tolerance for `U^*U = I` on freshly sampled unitaries.
    fn unitarity_tol() -> Self;

    /// Tolerance for the Hermitian / trace / positivity checks on density matrices.
    fn density_tol() -> Self;
}

impl Scalar for f64 {
    fn unitarity_tol() -> Self {
        1e-12
    }
    fn density_tol() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    fn unitarity_tol() -> Self {
        2e-5
    }
    fn density_tol() -> Self {
        1e-4
    }
}

pub(crate) fn c<T: Scalar>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

pub(crate) fn cr<T: Scalar>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}
