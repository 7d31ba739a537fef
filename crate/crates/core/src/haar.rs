//! Seeded sampling of Haar-distributed unitary matrices.
//!
//! # Reproducibility
//!
//! A [`Seed`] `(master, stream_index)` selects a ChaCha8 keystream: the key is
//! expanded from `master` with `SeedableRng::seed_from_u64` and the 64-bit
//! ChaCha stream id is set to `stream_index`. Distinct pairs give distinct,
//! independent keystreams, so parallel workers only need disjoint stream indices.
//!
//! Gaussians are drawn with the ziggurat sampler of `rand_distr::StandardNormal`
//! in `f64`, scaled by `1/sqrt(2)` so real and imaginary parts are `N(0, 1/2)`,
//! and filled in column-major order (real part first, then imaginary part).
//!
//! Haar unitaries are obtained from a Ginibre matrix `Z = QR` as `Q Λ` with
//! `Λ = diag(r_jj / |r_jj|)`. This makes the factorisation unique (positive
//! diagonal in `Λ^{-1} R`), and the resulting law is exactly Haar.

use nalgebra::{Complex, ComplexField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{unitarity_defect, CMatrix};
use crate::scalar::{c, Scalar};

/// Identifies one independent random stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub stream_index: u64,
}

impl Seed {
    pub const fn new(master: u64, stream_index: u64) -> Self {
        Self {
            master,
            stream_index,
        }
    }

    /// The seed `offset` streams further along (wrapping).
    pub const fn offset(self, offset: u64) -> Self {
        Self {
            master: self.master,
            stream_index: self.stream_index.wrapping_add(offset),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream_index);
        rng
    }
}

fn ginibre_from<T: Scalar, R: Rng>(n: usize, rng: &mut R) -> CMatrix<T> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(T::lit(re * scale), T::lit(im * scale))
    })
}

/// An `n x n` matrix of iid standard complex Gaussians (`E|z|^2 = 1`).
pub fn sample_ginibre<T: Scalar>(n: usize, seed: Seed) -> Result<CMatrix<T>> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "matrix size must be at least 1".into(),
        ));
    }
    Ok(ginibre_from(n, &mut seed.rng()))
}

/// Haar unitary from the Ginibre sample of `seed`.
///
/// If some `|r_jj|` underflows (a probability-zero event) the next Ginibre
/// matrix of the same stream is used instead.
pub fn sample_haar_unitary<T: Scalar>(n: usize, seed: Seed) -> Result<CMatrix<T>> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "matrix size must be at least 1".into(),
        ));
    }
    let mut rng = seed.rng();
    let floor = T::lit(1e-300);
    loop {
        let z: CMatrix<T> = ginibre_from(n, &mut rng);
        let qr = z.qr();
        let r = qr.r();
        let diag: Vec<Complex<T>> = (0..n).map(|j| r[(j, j)]).collect();
        if diag
            .iter()
            .any(|d| d.modulus() == T::zero() || d.modulus() < floor)
        {
            continue;
        }
        let mut q = qr.q();
        for (j, d) in diag.iter().enumerate() {
            let phase = d.unscale(d.modulus());
            for x in q.column_mut(j).iter_mut() {
                *x *= phase;
            }
        }
        return Ok(q);
    }
}

/// `k` independent Haar unitaries of size `n`.
#[derive(Clone, Debug)]
pub struct UnitaryTuple<T: Scalar> {
    dim_n: usize,
    matrices: Vec<CMatrix<T>>,
    seed: Option<Seed>,
}

impl<T: Scalar> UnitaryTuple<T> {
    /// Wraps explicitly given unitaries (no seed). Any `k >= 1` is accepted here;
    /// each matrix must be square of the same size and unitary to [`Scalar::unitarity_tol`].
    pub fn from_matrices(matrices: Vec<CMatrix<T>>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidParameter("need at least one unitary".into()))?;
        let n = first.nrows();
        if n == 0 {
            return Err(Error::InvalidDimension(
                "matrix size must be at least 1".into(),
            ));
        }
        for m in &matrices {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.nrows().max(m.ncols()),
                });
            }
            let defect = unitarity_defect(m);
            if defect > T::unitarity_tol() * T::lit(10.0) {
                return Err(Error::InvalidParameter(format!(
                    "matrix is not unitary (defect {defect})"
                )));
            }
        }
        Ok(Self {
            dim_n: n,
            matrices,
            seed: None,
        })
    }

    pub fn dim_n(&self) -> usize {
        self.dim_n
    }

    pub fn count_k(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[CMatrix<T>] {
        &self.matrices
    }

    pub fn seed(&self) -> Option<Seed> {
        self.seed
    }

    /// Worst `‖U^*U - I‖_max` over the tuple.
    pub fn unitarity_defect(&self) -> T {
        self.matrices
            .iter()
            .map(unitarity_defect)
            .fold(T::zero(), |a, b| a.max(b))
    }
}

/// Samples `k >= 2` unitaries; matrix `i` uses stream `seed.stream_index + i`.
pub fn sample_tuple<T: Scalar>(n: usize, k: usize, seed: Seed) -> Result<UnitaryTuple<T>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "the channel model needs k >= 2 unitaries, got {k}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidDimension(
            "matrix size must be at least 1".into(),
        ));
    }
    let matrices = (0..k as u64)
        .into_par_iter()
        .map(|i| sample_haar_unitary(n, seed.offset(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(UnitaryTuple {
        dim_n: n,
        matrices,
        seed: Some(seed),
    })
}
