//! The random channel `Φ_{k,n}`, its complementary mixed-unitary channel and
//! the Bell-state output of `Φ ⊗ Φ̄`.
//!
//! Conventions: for unitaries `U_1..U_k` of size `n`,
//!
//! * `Φ(X)_{ij} = k^{-1} Tr(U_i X U_j^*)`, a `k x k` density matrix;
//! * `Φ^*(A) = k^{-1} Σ_{ij} a_ij U_i^* U_j`, so `Tr(Φ(X) A) = Tr(X Φ^*(A))`;
//! * complement `X -> k^{-1} Σ U_i X U_i^*` and its entrywise conjugate
//!   `X -> k^{-1} Σ conj(U_i) X U_i^T`.
//!
//! The Stinespring isometry `x -> k^{-1/2}(U_1 x ⊕ ... ⊕ U_k x)` is never
//! formed; only the stacked `kn x n` matrix of the unitaries is kept.

use std::sync::OnceLock;

use nalgebra::{Complex, ComplexField};
use rand::Rng;

use crate::error::{Error, Result};
use crate::haar::{sample_ginibre, Seed, UnitaryTuple};
use crate::linalg::{
    dense_spectral_norm, gaussian_vector, hermitian_defect, hermitian_eigenvalues,
    power_spectral_norm, trace, trace_of_product, CMatrix, CVector, LinearOperator,
    SpectralNormMethod, SplitMatrix,
};
use crate::scalar::{cr, Scalar};

/// A positive semidefinite matrix of unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Scalar> {
    matrix: CMatrix<T>,
}

impl<T: Scalar> DensityMatrix<T> {
    /// Validates Hermiticity, unit trace and positivity to [`Scalar::density_tol`].
    pub fn new(matrix: CMatrix<T>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidDimension(format!(
                "density matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let tol = T::density_tol();
        let defect = hermitian_defect(&matrix);
        if defect > tol {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (defect {defect})"
            )));
        }
        let tr = trace(&matrix);
        if (tr - cr(T::one())).modulus() > tol {
            return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
        }
        let lowest = hermitian_eigenvalues(&matrix)[0];
        if lowest < -tol {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {lowest}"
            )));
        }
        Ok(Self { matrix })
    }

    pub(crate) fn new_unchecked(matrix: CMatrix<T>) -> Self {
        Self { matrix }
    }

    /// `I_d / d`.
    pub fn maximally_mixed(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(
                "dimension must be at least 1".into(),
            ));
        }
        Ok(Self {
            matrix: CMatrix::identity(d, d).unscale(T::lit(d as f64)),
        })
    }

    /// `ψψ^*`.
    pub fn pure(state: &PureState<T>) -> Self {
        Self {
            matrix: state.vector() * state.vector().adjoint(),
        }
    }

    /// Normalised complex Wishart matrix `GG^*/Tr(GG^*)` of full rank.
    pub fn random(dim: usize, seed: Seed) -> Result<Self> {
        let g: CMatrix<T> = sample_ginibre(dim, seed)?;
        let w = &g * g.adjoint();
        let tr = trace(&w).real();
        Ok(Self {
            matrix: w.unscale(tr),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        hermitian_eigenvalues(&self.matrix)
    }
}

/// A unit vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState<T: Scalar> {
    vector: CVector<T>,
}

impl<T: Scalar> PureState<T> {
    pub fn new(vector: CVector<T>) -> Result<Self> {
        if vector.is_empty() {
            return Err(Error::InvalidDimension(
                "state dimension must be at least 1".into(),
            ));
        }
        let norm = vector.norm();
        if (norm - T::one()).abs() > T::unitarity_tol() {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self { vector })
    }

    pub fn normalized(mut vector: CVector<T>) -> Result<Self> {
        let norm = vector.norm();
        if vector.is_empty() || norm == T::zero() {
            return Err(Error::InvalidState("cannot normalise a zero vector".into()));
        }
        vector.unscale_mut(norm);
        Ok(Self { vector })
    }

    /// Uniform on the unit sphere: a normalised complex Gaussian vector.
    pub fn random(dim: usize, seed: Seed) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(
                "state dimension must be at least 1".into(),
            ));
        }
        Self::normalized(gaussian_vector(dim, &mut seed.rng()))
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidDimension(format!(
                "basis index {index} >= {dim}"
            )));
        }
        let mut v = CVector::zeros(dim);
        v[index] = cr(T::one());
        Ok(Self { vector: v })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn vector(&self) -> &CVector<T> {
        &self.vector
    }
}

/// A `k x k` complex coefficient matrix `A = (a_ij)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffMatrix<T: Scalar> {
    matrix: CMatrix<T>,
}

impl<T: Scalar> CoeffMatrix<T> {
    pub fn new(matrix: CMatrix<T>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidDimension(format!(
                "coefficient matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidParameter(
                "coefficient matrix has non-finite entries".into(),
            ));
        }
        Ok(Self { matrix })
    }

    pub fn zeros(k: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(k, k),
        }
    }

    pub fn identity(k: usize) -> Self {
        Self {
            matrix: CMatrix::identity(k, k),
        }
    }

    /// Entries iid standard complex Gaussian.
    pub fn random<R: Rng>(k: usize, rng: &mut R) -> Self {
        let v: CVector<T> = gaussian_vector(k * k, rng);
        Self {
            matrix: CMatrix::from_column_slice(k, k, v.as_slice()),
        }
    }

    /// A Gaussian matrix with its trace removed from the diagonal.
    pub fn random_traceless<R: Rng>(k: usize, rng: &mut R) -> Self {
        let mut a = Self::random(k, rng);
        let shift = a.trace().unscale(T::lit(k as f64));
        for i in 0..k {
            a.matrix[(i, i)] -= shift;
        }
        a
    }

    pub fn k(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        self.matrix[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex<T>) {
        self.matrix[(i, j)] = value;
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex<T> {
        trace(&self.matrix)
    }

    /// Hilbert–Schmidt norm `sqrt(Σ |a_ij|^2)`.
    pub fn hs_norm(&self) -> T {
        self.matrix.norm()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }
}

/// Which of the two mixed-unitary maps to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComplementKind {
    /// `X -> k^{-1} Σ U_i X U_i^*`.
    MixedUnitary,
    /// `X -> k^{-1} Σ conj(U_i) X U_i^T`.
    Conjugate,
}

/// `Φ_{k,n}` for a fixed tuple of unitaries.
#[derive(Debug)]
pub struct RandomChannel<T: Scalar> {
    tuple: UnitaryTuple<T>,
    stacked: SplitMatrix<T>,
    gram: OnceLock<Vec<CMatrix<T>>>,
}

impl<T: Scalar> Clone for RandomChannel<T> {
    fn clone(&self) -> Self {
        Self::new(self.tuple.clone())
    }
}

impl<T: Scalar> RandomChannel<T> {
    pub fn new(tuple: UnitaryTuple<T>) -> Self {
        let (n, k) = (tuple.dim_n(), tuple.count_k());
        let mut stacked = CMatrix::zeros(k * n, n);
        for (i, u) in tuple.matrices().iter().enumerate() {
            stacked.view_mut((i * n, 0), (n, n)).copy_from(u);
        }
        Self {
            tuple,
            stacked: SplitMatrix::from_matrix(&stacked),
            gram: OnceLock::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.tuple.count_k()
    }

    pub fn n(&self) -> usize {
        self.tuple.dim_n()
    }

    pub fn tuple(&self) -> &UnitaryTuple<T> {
        &self.tuple
    }

    fn unitary(&self, i: usize) -> &CMatrix<T> {
        &self.tuple.matrices()[i]
    }

    fn inv_k(&self) -> T {
        T::one() / T::lit(self.k() as f64)
    }

    fn check_input(&self, dim: usize) -> Result<()> {
        if dim != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: dim,
            });
        }
        Ok(())
    }

    fn check_coeff(&self, k: usize) -> Result<()> {
        if k != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                found: k,
            });
        }
        Ok(())
    }

    /// `Φ(X)`.
    pub fn apply(&self, x: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        self.check_input(x.dim())?;
        let k = self.k();
        let products: Vec<CMatrix<T>> = (0..k).map(|i| self.unitary(i) * x.matrix()).collect();
        let mut out = CMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                // Tr(Y_i U_j^*) = Σ_ab Y_i[a,b] conj(U_j[a,b])
                out[(i, j)] = products[i].dotc(self.unitary(j)).conj();
            }
        }
        Ok(DensityMatrix::new_unchecked(out.scale(self.inv_k())))
    }

    /// `Φ(ψψ^*)` in `O(kn^2 + k^2 n)`.
    pub fn apply_pure(&self, psi: &PureState<T>) -> Result<DensityMatrix<T>> {
        self.check_input(psi.dim())?;
        Ok(DensityMatrix::new_unchecked(self.pure_output(psi.vector())))
    }

    /// `Φ(ψψ^*)` for any vector, `ρ_ij = k^{-1} <U_j ψ, U_i ψ>`.
    pub(crate) fn pure_output(&self, psi: &CVector<T>) -> CMatrix<T> {
        self.gram_of_blocks(&self.stack(psi))
    }

    /// `U_1 ψ ⊕ ... ⊕ U_k ψ`.
    pub(crate) fn stack(&self, psi: &CVector<T>) -> CVector<T> {
        self.stacked.mul_vec(psi)
    }

    /// `Φ(ψψ^*)` from the stacked images of `ψ`.
    pub(crate) fn gram_of_blocks(&self, v: &CVector<T>) -> CMatrix<T> {
        let (k, n) = (self.k(), self.n());
        let inv_k = self.inv_k();
        let mut out = CMatrix::zeros(k, k);
        for i in 0..k {
            let vi = v.rows(i * n, n);
            for j in 0..=i {
                let z = v.rows(j * n, n).dotc(&vi).scale(inv_k);
                out[(i, j)] = z;
                out[(j, i)] = z.conj();
            }
        }
        out
    }

    /// `Φ^*(B) ψ = k^{-1} Σ_{ij} b_ij U_i^* U_j ψ`, without forming `Φ^*(B)`.
    pub(crate) fn adjoint_apply_vec(&self, b: &CMatrix<T>, psi: &CVector<T>) -> CVector<T> {
        self.adjoint_apply_stacked(b, &self.stack(psi))
    }

    /// `Φ^*(B) ψ` from the stacked images `v` of `ψ`.
    pub(crate) fn adjoint_apply_stacked(&self, b: &CMatrix<T>, v: &CVector<T>) -> CVector<T> {
        let (k, n) = (self.k(), self.n());
        let mut w = CVector::zeros(k * n);
        for i in 0..k {
            let mut block = w.rows_mut(i * n, n);
            for j in 0..k {
                let bij = b[(i, j)];
                if bij != cr(T::zero()) {
                    block.axpy(bij, &v.rows(j * n, n), cr(T::one()));
                }
            }
        }
        self.stacked.ad_mul_vec(&w).scale(self.inv_k())
    }

    /// `X -> k^{-1} Σ U_i X U_i^*` or its conjugate variant.
    pub fn apply_complement(
        &self,
        x: &DensityMatrix<T>,
        kind: ComplementKind,
    ) -> Result<DensityMatrix<T>> {
        self.check_input(x.dim())?;
        let n = self.n();
        let mut out = CMatrix::zeros(n, n);
        for u in self.tuple.matrices() {
            match kind {
                ComplementKind::MixedUnitary => out += u * x.matrix() * u.adjoint(),
                ComplementKind::Conjugate => {
                    let ubar = u.map(|z| z.conj());
                    out += &ubar * x.matrix() * u.transpose();
                }
            }
        }
        Ok(DensityMatrix::new_unchecked(out.scale(self.inv_k())))
    }

    /// `Φ^*(A)`, the `n x n` matrix with `Tr(Φ(X) A) = Tr(X Φ^*(A))`.
    pub fn adjoint_apply(&self, a: &CoeffMatrix<T>) -> Result<CMatrix<T>> {
        self.check_coeff(a.k())?;
        let (k, n) = (self.k(), self.n());
        let mut out = CMatrix::zeros(n, n);
        for i in 0..k {
            let mut mix = CMatrix::zeros(n, n);
            for j in 0..k {
                let aij = a.entry(i, j);
                if aij != cr(T::zero()) {
                    mix += self.unitary(j) * aij;
                }
            }
            out += self.unitary(i).ad_mul(&mix);
        }
        Ok(out.scale(self.inv_k()))
    }

    /// `‖Φ^*(A)‖ = k^{-1}‖Σ a_ij U_i^* U_j‖`, the finite-`n` value of `|||A|||`.
    pub fn empirical_triple_norm(&self, a: &CoeffMatrix<T>) -> Result<T> {
        self.empirical_triple_norm_with(a, SpectralNormMethod::default())
    }

    pub fn empirical_triple_norm_with(
        &self,
        a: &CoeffMatrix<T>,
        method: SpectralNormMethod,
    ) -> Result<T> {
        self.check_coeff(a.k())?;
        if self.n() <= method.dense_max_dim {
            Ok(dense_spectral_norm(&self.adjoint_apply(a)?))
        } else {
            let op = AdjointOperator {
                channel: self,
                coeff: a.matrix().clone(),
                coeff_adjoint: a.matrix().adjoint(),
            };
            power_spectral_norm(&op, method.tol, method.max_iters).map(|(s, _)| s)
        }
    }

    /// Gram blocks `G_ab = U_a^* U_b`, row-major in `(a, b)`, built once.
    pub fn gram(&self) -> &[CMatrix<T>] {
        self.gram.get_or_init(|| {
            let k = self.k();
            let mut blocks = Vec::with_capacity(k * k);
            for a in 0..k {
                for b in 0..k {
                    blocks.push(self.unitary(a).ad_mul(self.unitary(b)));
                }
            }
            blocks
        })
    }

    /// `(Φ ⊗ Φ̄)(|Ω_n><Ω_n|)` with entries
    /// `C_{(i,i'),(j,j')} = k^{-2} n^{-1} Tr(G_{i'j'} G_{ji})`,
    /// rows and columns indexed by `i k + i'`.
    pub fn bell_output(&self) -> DensityMatrix<T> {
        let (k, n) = (self.k(), self.n());
        let g = self.gram();
        let scale = T::one() / (T::lit((k * k) as f64) * T::lit(n as f64));
        let mut out = CMatrix::zeros(k * k, k * k);
        for i in 0..k {
            for ip in 0..k {
                let row = i * k + ip;
                for j in 0..k {
                    for jp in 0..k {
                        let col = j * k + jp;
                        if col < row {
                            continue;
                        }
                        let z = trace_of_product(&g[ip * k + jp], &g[j * k + i]).scale(scale);
                        out[(row, col)] = z;
                        out[(col, row)] = z.conj();
                    }
                }
            }
        }
        for d in 0..k * k {
            out[(d, d)] = cr(out[(d, d)].re);
        }
        DensityMatrix::new_unchecked(out)
    }
}

struct AdjointOperator<'a, T: Scalar> {
    channel: &'a RandomChannel<T>,
    coeff: CMatrix<T>,
    coeff_adjoint: CMatrix<T>,
}

impl<T: Scalar> LinearOperator<T> for AdjointOperator<'_, T> {
    fn dim(&self) -> usize {
        self.channel.n()
    }
    fn apply(&self, v: &CVector<T>) -> CVector<T> {
        self.channel.adjoint_apply_vec(&self.coeff, v)
    }
    fn apply_adjoint(&self, v: &CVector<T>) -> CVector<T> {
        self.channel.adjoint_apply_vec(&self.coeff_adjoint, v)
    }
}

/// `I_d / d`.
pub fn maximally_mixed<T: Scalar>(d: usize) -> Result<DensityMatrix<T>> {
    DensityMatrix::maximally_mixed(d)
}
