//! Objectives on the unit sphere of `C^n` built from a random channel.
//!
//! Gradients are Wirtinger gradients with respect to `conj(ψ)`: for a real
//! function `F`, `d/dt F(ψ + tξ) = 2 Re <g, ξ>`. Every gradient returned here
//! is projected onto the tangent space `{ξ : Re <ψ, ξ> = 0}` at a unit `ψ`.

use nalgebra::ComplexField;

use crate::channels::{PureState, RandomChannel};
use crate::error::Result;
use crate::linalg::{hermitian_eigen, CMatrix, CVector};
use crate::scalar::{c, cr, Scalar};

use super::entropy::{spectrum_entropy, ENTROPY_EIGEN_FLOOR};

/// Eigenvalue gap below which the top eigenvector is treated as undefined.
pub const SUP_NORM_GAP: f64 = 1e-6;

/// Step of the central finite differences used as gradient fallback.
pub const FD_STEP: f64 = 1e-5;

pub trait SphereObjective<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    /// Objective at `ψ/‖ψ‖`.
    fn value(&self, psi: &CVector<T>) -> T;

    /// Tangent Wirtinger gradient at a unit vector.
    fn gradient(&self, psi: &CVector<T>) -> CVector<T>;

    /// A linear image `Lψ` from which the objective can be evaluated.
    fn lift(&self, psi: &CVector<T>) -> CVector<T> {
        psi.clone()
    }

    /// [`SphereObjective::value`] given `lifted = Lψ`.
    fn value_lifted(&self, psi: &CVector<T>, lifted: &CVector<T>) -> T {
        let _ = lifted;
        self.value(psi)
    }

    /// [`SphereObjective::gradient`] given `lifted = Lψ`.
    fn gradient_lifted(&self, psi: &CVector<T>, lifted: &CVector<T>) -> CVector<T> {
        let _ = lifted;
        self.gradient(psi)
    }
}

/// `Φ(ψψ^*)/‖ψ‖²` from the stacked images `v` of `ψ`.
fn output_from<T: Scalar>(ch: &RandomChannel<T>, psi: &CVector<T>, v: &CVector<T>) -> CMatrix<T> {
    ch.gram_of_blocks(v).unscale(psi.norm_squared())
}

pub(crate) fn project_tangent<T: Scalar>(psi: &CVector<T>, g: CVector<T>) -> CVector<T> {
    let radial = psi.dotc(&g).real();
    g - psi.scale(radial)
}

/// `H(Φ(ψψ^*))`.
pub struct OutputEntropy<'a, T: Scalar> {
    pub channel: &'a RandomChannel<T>,
}

impl<T: Scalar> SphereObjective<T> for OutputEntropy<'_, T> {
    fn dim(&self) -> usize {
        self.channel.n()
    }

    fn value(&self, psi: &CVector<T>) -> T {
        self.value_lifted(psi, &self.lift(psi))
    }

    /// `-Φ^*(log ρ + I) ψ`, with `log` floored at `log(1e-14)`.
    fn gradient(&self, psi: &CVector<T>) -> CVector<T> {
        self.gradient_lifted(psi, &self.lift(psi))
    }

    fn lift(&self, psi: &CVector<T>) -> CVector<T> {
        self.channel.stack(psi)
    }

    fn value_lifted(&self, psi: &CVector<T>, lifted: &CVector<T>) -> T {
        let (eig, _) = hermitian_eigen(&output_from(self.channel, psi, lifted));
        spectrum_entropy(&eig)
    }

    fn gradient_lifted(&self, psi: &CVector<T>, lifted: &CVector<T>) -> CVector<T> {
        let (eig, vecs) = hermitian_eigen(&output_from(self.channel, psi, lifted));
        let floor = T::lit(ENTROPY_EIGEN_FLOOR);
        let weights: Vec<T> = eig
            .iter()
            .map(|&l| -(l.max(floor).ln() + T::one()))
            .collect();
        let b = spectral_combination(&vecs, &weights);
        project_tangent(psi, self.channel.adjoint_apply_stacked(&b, lifted))
    }
}

/// `‖Φ(ψψ^*) - I/k‖_2^2`.
pub struct L2Distance<'a, T: Scalar> {
    pub channel: &'a RandomChannel<T>,
}

impl<T: Scalar> L2Distance<'_, T> {
    fn centered(&self, psi: &CVector<T>, v: &CVector<T>) -> CMatrix<T> {
        let k = self.channel.k();
        let mut d = output_from(self.channel, psi, v);
        let inv_k = T::one() / T::lit(k as f64);
        for i in 0..k {
            d[(i, i)] -= cr(inv_k);
        }
        d
    }
}

impl<T: Scalar> SphereObjective<T> for L2Distance<'_, T> {
    fn dim(&self) -> usize {
        self.channel.n()
    }

    fn value(&self, psi: &CVector<T>) -> T {
        self.value_lifted(psi, &self.lift(psi))
    }

    /// `2 Φ^*(Φ(ψψ^*) - I/k) ψ`.
    fn gradient(&self, psi: &CVector<T>) -> CVector<T> {
        self.gradient_lifted(psi, &self.lift(psi))
    }

    fn lift(&self, psi: &CVector<T>) -> CVector<T> {
        self.channel.stack(psi)
    }

    fn value_lifted(&self, psi: &CVector<T>, lifted: &CVector<T>) -> T {
        self.centered(psi, lifted).norm_squared()
    }

    fn gradient_lifted(&self, psi: &CVector<T>, lifted: &CVector<T>) -> CVector<T> {
        let d = self.centered(psi, lifted).scale(T::lit(2.0));
        project_tangent(psi, self.channel.adjoint_apply_stacked(&d, lifted))
    }
}

/// Largest eigenvalue of the complementary output `k^{-1} Σ U_i ψψ^* U_i^*`.
///
/// Evaluated on the `k x k` output `Φ(ψψ^*)`, which has the same nonzero
/// spectrum for pure inputs.
pub struct OutputSupNorm<'a, T: Scalar> {
    pub channel: &'a RandomChannel<T>,
}

impl<T: Scalar> SphereObjective<T> for OutputSupNorm<'_, T> {
    fn dim(&self) -> usize {
        self.channel.n()
    }

    fn value(&self, psi: &CVector<T>) -> T {
        self.value_lifted(psi, &self.lift(psi))
    }

    /// `Φ^*(vv^*) ψ` for the top eigenvector `v`; central finite differences
    /// when the top eigenvalue is (nearly) degenerate.
    fn gradient(&self, psi: &CVector<T>) -> CVector<T> {
        self.gradient_lifted(psi, &self.lift(psi))
    }

    fn lift(&self, psi: &CVector<T>) -> CVector<T> {
        self.channel.stack(psi)
    }

    fn value_lifted(&self, psi: &CVector<T>, lifted: &CVector<T>) -> T {
        let (eig, _) = hermitian_eigen(&output_from(self.channel, psi, lifted));
        *eig.last().expect("k >= 1")
    }

    fn gradient_lifted(&self, psi: &CVector<T>, lifted: &CVector<T>) -> CVector<T> {
        let (eig, vecs) = hermitian_eigen(&output_from(self.channel, psi, lifted));
        let k = eig.len();
        if k >= 2 && eig[k - 1] - eig[k - 2] < T::lit(SUP_NORM_GAP) {
            return project_tangent(psi, finite_difference_gradient(self, psi, T::lit(FD_STEP)));
        }
        let v = vecs.column(k - 1);
        let b = v * v.adjoint();
        project_tangent(psi, self.channel.adjoint_apply_stacked(&b, lifted))
    }
}

/// `V diag(w) V^*`.
fn spectral_combination<T: Scalar>(vecs: &CMatrix<T>, weights: &[T]) -> CMatrix<T> {
    let mut scaled = vecs.clone();
    for (j, &w) in weights.iter().enumerate() {
        scaled
            .column_mut(j)
            .iter_mut()
            .for_each(|z| *z = z.scale(w));
    }
    scaled * vecs.adjoint()
}

/// Wirtinger gradient by central differences along every real coordinate:
/// `g_a = (∂F/∂x_a + i ∂F/∂y_a) / 2`.
pub fn finite_difference_gradient<T: Scalar, O: SphereObjective<T> + ?Sized>(
    objective: &O,
    psi: &CVector<T>,
    h: T,
) -> CVector<T> {
    let two_h = h + h;
    let half = T::lit(0.5);
    CVector::from_fn(psi.len(), |a, _| {
        let mut plus = psi.clone();
        let mut minus = psi.clone();
        plus[a] += cr(h);
        minus[a] -= cr(h);
        let dx = (objective.value(&plus) - objective.value(&minus)) / two_h;
        plus[a] = psi[a] + c(T::zero(), h);
        minus[a] = psi[a] - c(T::zero(), h);
        let dy = (objective.value(&plus) - objective.value(&minus)) / two_h;
        c(dx * half, dy * half)
    })
}

/// Tangent gradient of `ψ -> H(Φ(ψψ^*))`.
pub fn moe_gradient<T: Scalar>(ch: &RandomChannel<T>, psi: &PureState<T>) -> Result<CVector<T>> {
    check_dim(ch, psi)?;
    Ok(OutputEntropy { channel: ch }.gradient(psi.vector()))
}

/// Tangent gradient of `ψ -> ‖Φ(ψψ^*) - I/k‖_2^2`.
pub fn l2_distance_gradient<T: Scalar>(
    ch: &RandomChannel<T>,
    psi: &PureState<T>,
) -> Result<CVector<T>> {
    check_dim(ch, psi)?;
    Ok(L2Distance { channel: ch }.gradient(psi.vector()))
}

fn check_dim<T: Scalar>(ch: &RandomChannel<T>, psi: &PureState<T>) -> Result<()> {
    if psi.dim() != ch.n() {
        return Err(crate::error::Error::DimensionMismatch {
            expected: ch.n(),
            found: psi.dim(),
        });
    }
    Ok(())
}
