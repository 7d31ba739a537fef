use nalgebra::ComplexField;

use crate::channels::DensityMatrix;
use crate::error::{Error, Result};
use crate::scalar::{cr, Scalar};

/// Eigenvalues at or below this contribute nothing to the entropy.
pub const ENTROPY_EIGEN_FLOOR: f64 = 1e-14;

/// Eigenvalues below `-NEGATIVE_EIGEN_TOL` make a matrix an invalid density.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-8;

/// `-Σ λ log λ` in nats with `0 log 0 = 0`; eigenvalues are clamped to `[0, 1]`.
pub fn spectrum_entropy<T: Scalar>(eigenvalues: &[T]) -> T {
    let floor = T::lit(ENTROPY_EIGEN_FLOOR);
    eigenvalues
        .iter()
        .map(|&l| l.max(T::zero()).min(T::one()))
        .filter(|&l| l > floor)
        .fold(T::zero(), |acc, l| acc - l * l.ln())
}

/// Von Neumann entropy `H(X) = -Tr X log X` in nats.
pub fn von_neumann_entropy<T: Scalar>(x: &DensityMatrix<T>) -> Result<T> {
    let eig = x.eigenvalues();
    if let Some(&low) = eig.first() {
        if low < -T::lit(NEGATIVE_EIGEN_TOL) {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {low}")));
        }
    }
    Ok(spectrum_entropy(&eig))
}

/// `k Tr((X - I/k)^2)`, the right-hand side of `log k - H(X) <= k Tr((X - I/k)^2)`.
pub fn entropy_deficit_rhs<T: Scalar>(x: &DensityMatrix<T>) -> T {
    let k = x.dim();
    let kf = T::lit(k as f64);
    let mut centered = x.matrix().clone();
    for i in 0..k {
        centered[(i, i)] -= cr(T::one() / kf);
    }
    // Hermitian, so Tr(D^2) = ‖D‖_F^2
    kf * centered
        .iter()
        .fold(T::zero(), |acc, z| acc + z.modulus_squared())
}
