//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{Complex, ComplexField, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{c, cr, Scalar};

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in ascending order.
///
/// Only the lower triangle is read.
pub fn hermitian_eigen<T: Scalar>(m: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, col| {
        eig.eigenvectors[(r, order[col])]
    });
    (values, vectors)
}

pub fn hermitian_eigenvalues<T: Scalar>(m: &CMatrix<T>) -> Vec<T> {
    let mut values: Vec<T> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    values
}

pub fn trace<T: Scalar>(m: &CMatrix<T>) -> Complex<T> {
    m.diagonal().iter().fold(cr(T::zero()), |acc, z| acc + z)
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> Complex<T> {
    let mut acc = cr(T::zero());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn max_abs_entry<T: Scalar>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

/// `max |(A^* - A)_{ij}|`.
pub fn hermitian_defect<T: Scalar>(m: &CMatrix<T>) -> T {
    let mut worst = T::zero();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).modulus());
        }
    }
    worst
}

/// `‖U^*U - I‖_max`.
pub fn unitarity_defect<T: Scalar>(u: &CMatrix<T>) -> T {
    let mut g = u.adjoint() * u;
    for i in 0..g.nrows() {
        g[(i, i)] -= cr(T::one());
    }
    max_abs_entry(&g)
}

pub fn gaussian_vector<T: Scalar, R: Rng>(dim: usize, rng: &mut R) -> CVector<T> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(T::lit(re * scale), T::lit(im * scale))
    })
}

/// Row-major complex matrix with real and imaginary parts stored apart, for
/// repeated matrix-vector products.
#[derive(Clone, Debug)]
pub(crate) struct SplitMatrix<T: Scalar> {
    rows: usize,
    cols: usize,
    re: Vec<T>,
    im: Vec<T>,
}

const LANES: usize = 4;

impl<T: Scalar> SplitMatrix<T> {
    pub(crate) fn from_matrix(m: &CMatrix<T>) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let z = m[(r, c)];
                re.push(z.re);
                im.push(z.im);
            }
        }
        Self { rows, cols, re, im }
    }

    /// `M x`.
    pub(crate) fn mul_vec(&self, x: &CVector<T>) -> CVector<T> {
        assert_eq!(x.len(), self.cols);
        let xr: Vec<T> = x.iter().map(|z| z.re).collect();
        let xi: Vec<T> = x.iter().map(|z| z.im).collect();
        CVector::from_fn(self.rows, |r, _| {
            let span = r * self.cols..(r + 1) * self.cols;
            let (re, im) = split_dot(&self.re[span.clone()], &self.im[span], &xr, &xi);
            c(re, im)
        })
    }

    /// `M^* y`.
    pub(crate) fn ad_mul_vec(&self, y: &CVector<T>) -> CVector<T> {
        assert_eq!(y.len(), self.rows);
        let mut out_re = vec![T::zero(); self.cols];
        let mut out_im = vec![T::zero(); self.cols];
        for (r, w) in y.iter().enumerate() {
            let span = r * self.cols..(r + 1) * self.cols;
            let (ar, ai) = (&self.re[span.clone()], &self.im[span]);
            let (wr, wi) = (w.re, w.im);
            for (((o_re, o_im), &a), &b) in out_re.iter_mut().zip(&mut out_im).zip(ar).zip(ai) {
                *o_re += a * wr + b * wi;
                *o_im += a * wi - b * wr;
            }
        }
        CVector::from_fn(self.cols, |i, _| c(out_re[i], out_im[i]))
    }
}

/// `Σ (ar + i ai)(xr + i xi)` with independent partial sums.
fn split_dot<T: Scalar>(ar: &[T], ai: &[T], xr: &[T], xi: &[T]) -> (T, T) {
    let mut sr = [T::zero(); LANES];
    let mut si = [T::zero(); LANES];
    for (((a, b), x), y) in ar
        .chunks_exact(LANES)
        .zip(ai.chunks_exact(LANES))
        .zip(xr.chunks_exact(LANES))
        .zip(xi.chunks_exact(LANES))
    {
        let a: &[T; LANES] = a.try_into().expect("exact chunk");
        let b: &[T; LANES] = b.try_into().expect("exact chunk");
        let x: &[T; LANES] = x.try_into().expect("exact chunk");
        let y: &[T; LANES] = y.try_into().expect("exact chunk");
        for l in 0..LANES {
            sr[l] += a[l] * x[l] - b[l] * y[l];
            si[l] += a[l] * y[l] + b[l] * x[l];
        }
    }
    let (mut re, mut im) = (T::zero(), T::zero());
    for l in 0..LANES {
        re += sr[l];
        im += si[l];
    }
    let tail = ar.len() / LANES * LANES;
    for j in tail..ar.len() {
        re += ar[j] * xr[j] - ai[j] * xi[j];
        im += ar[j] * xi[j] + ai[j] * xr[j];
    }
    (re, im)
}

/// A linear map on `C^dim` given through its action and the action of its adjoint.
pub trait LinearOperator<T: Scalar> {
    fn dim(&self) -> usize;
    fn apply(&self, v: &CVector<T>) -> CVector<T>;
    fn apply_adjoint(&self, v: &CVector<T>) -> CVector<T>;
}

impl<T: Scalar> LinearOperator<T> for CMatrix<T> {
    fn dim(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, v: &CVector<T>) -> CVector<T> {
        self * v
    }
    fn apply_adjoint(&self, v: &CVector<T>) -> CVector<T> {
        self.ad_mul(v)
    }
}

/// How the largest singular value of an operator is computed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralNormMethod {
    /// Dense SVD at or below this dimension, power iteration on `M^*M` above.
    pub dense_max_dim: usize,
    /// Relative change of the Rayleigh quotient that stops power iteration.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SpectralNormMethod {
    fn default() -> Self {
        Self {
            dense_max_dim: 256,
            tol: 1e-8,
            max_iters: 10_000,
        }
    }
}

impl SpectralNormMethod {
    pub fn dense_only() -> Self {
        Self {
            dense_max_dim: usize::MAX,
            ..Self::default()
        }
    }

    pub fn power_only() -> Self {
        Self {
            dense_max_dim: 0,
            ..Self::default()
        }
    }
}

pub fn dense_spectral_norm<T: Scalar>(m: &CMatrix<T>) -> T {
    m.singular_values()
        .iter()
        .fold(T::zero(), |acc, &s| acc.max(s))
}

/// Largest singular value by power iteration on `M^*M`.
///
/// The start vector is a fixed-seed Gaussian vector so results are reproducible.
/// Returns the estimate and the number of iterations used.
pub fn power_spectral_norm<T: Scalar, Op: LinearOperator<T> + ?Sized>(
    op: &Op,
    tol: f64,
    max_iters: usize,
) -> Result<(T, usize)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x005e_ed0f_9011);
    let mut v: CVector<T> = gaussian_vector(op.dim(), &mut rng);
    v.unscale_mut(v.norm());
    let tol = T::lit(tol);
    let mut prev = T::zero();
    for it in 1..=max_iters {
        let w = op.apply(&v);
        let rayleigh = w.norm_squared();
        let mut next = op.apply_adjoint(&w);
        let norm = next.norm();
        if norm == T::zero() {
            return Ok((T::zero(), it));
        }
        next.unscale_mut(norm);
        v = next;
        if it > 1 && (rayleigh - prev).abs() <= tol * rayleigh {
            return Ok((rayleigh.sqrt(), it));
        }
        prev = rayleigh;
    }
    Err(Error::NonConvergence {
        iterations: max_iters,
    })
}

pub fn spectral_norm<T: Scalar>(m: &CMatrix<T>, method: SpectralNormMethod) -> Result<T> {
    if m.ncols().max(m.nrows()) <= method.dense_max_dim {
        Ok(dense_spectral_norm(m))
    } else {
        power_spectral_norm(m, method.tol, method.max_iters).map(|(s, _)| s)
    }
}
