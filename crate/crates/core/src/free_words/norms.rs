//! Norm brackets for elements of the free group algebra.
//!
//! Upper side: Haagerup's inequality applied length by length,
//! `‖f‖ <= Σ_ℓ (ℓ+1) ‖f_ℓ‖_2`.
//!
//! Lower side: moments `M_j = τ((ff^*)^j)` of the positive element `ff^*`.
//! Its spectral measure is supported in `[0, ‖f‖^2]` and its moments are
//! log-convex, so `M_j / M_{j-1}` is nondecreasing in `j`, bounded by
//! `‖f‖^2`, and dominates `M_j^{1/j}`.

use nalgebra::{Complex, ComplexField};

use super::{GroupAlgebraElement, Word, DEFAULT_SUPPORT_CAP};
use crate::channels::CoeffMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

impl<T: Scalar> GroupAlgebraElement<T> {
    /// `[M_0, ..., M_max_order]` with `M_j = τ((ff^*)^j)`, computed exactly.
    ///
    /// Only powers of `ff^*` up to `ceil(max_order / 2)` are formed;
    /// `M_{a+b} = Σ_w h^a(w) conj(h^b(w))` because `h^b` is self-adjoint.
    pub fn moments(&self, max_order: usize, cap: usize) -> Result<Vec<T>> {
        let (moments, _) = self.moment_sequence(max_order, cap, true)?;
        Ok(moments)
    }

    /// Like [`Self::moments`] but stops at the largest order whose powers fit
    /// under `cap`. Always returns at least `[M_0]`.
    pub fn moments_within(&self, max_order: usize, cap: usize) -> Vec<T> {
        self.moment_sequence(max_order, cap, false)
            .map(|(m, _)| m)
            .unwrap_or_else(|_| vec![T::one()])
    }

    fn moment_sequence(
        &self,
        max_order: usize,
        cap: usize,
        strict: bool,
    ) -> Result<(Vec<T>, usize)> {
        let half = max_order.div_ceil(2);
        let mut powers = vec![GroupAlgebraElement::identity(self.k)];
        if half > 0 {
            let h = match self.multiply_capped(&self.star(), cap) {
                Ok(h) => h,
                Err(e) if strict => return Err(e),
                Err(_) => return Ok((vec![T::one()], 0)),
            };
            powers.push(h.clone());
            while powers.len() <= half {
                match powers.last().unwrap().multiply_capped(&h, cap) {
                    Ok(next) => powers.push(next),
                    Err(e) if strict => return Err(e),
                    Err(_) => break,
                }
            }
        }
        let top = (2 * (powers.len() - 1)).min(max_order);
        let moments = (0..=top)
            .map(|j| {
                let a = j.div_ceil(2);
                pairing(&powers[a], &powers[j - a])
            })
            .collect();
        Ok((moments, top))
    }

    /// `‖f‖_q = τ((ff^*)^{q/2})^{1/q}` for even `q >= 2`.
    pub fn q_norm(&self, q: u32) -> Result<T> {
        if q < 2 || q % 2 == 1 {
            return Err(Error::UnsupportedExponent(q));
        }
        let m = self.moments(q as usize / 2, DEFAULT_SUPPORT_CAP)?;
        Ok(m[q as usize / 2]
            .max(T::zero())
            .powf(T::lit(1.0 / q as f64)))
    }

    /// `sqrt(M_m / M_{m-1})`, a lower bound on the operator norm that increases
    /// to it as `m -> ∞`.
    pub fn norm_lower_bound(&self, m: usize) -> Result<T> {
        self.norm_lower_bound_capped(m, DEFAULT_SUPPORT_CAP)
    }

    pub fn norm_lower_bound_capped(&self, m: usize, cap: usize) -> Result<T> {
        if m == 0 {
            return Err(Error::InvalidParameter("moment order must be >= 1".into()));
        }
        Ok(ratio_bound(&self.moments(m, cap)?, m))
    }

    /// The best moment lower bound reachable with order `<= max_m` under `cap`,
    /// together with the order actually used.
    pub fn norm_lower_bound_within(&self, max_m: usize, cap: usize) -> (T, usize) {
        let moments = self.moments_within(max_m, cap);
        let m = moments.len() - 1;
        if m == 0 {
            return (T::zero(), 0);
        }
        (ratio_bound(&moments, m), m)
    }

    /// `Σ_ℓ (ℓ+1) ‖f_ℓ‖_2` over the word-length decomposition of `f`.
    pub fn haagerup_bound(&self) -> T {
        self.length_profile()
            .into_iter()
            .fold(T::zero(), |acc, (len, norm)| {
                acc + T::lit((len + 1) as f64) * norm
            })
    }
}

fn ratio_bound<T: Scalar>(moments: &[T], m: usize) -> T {
    let prev = moments[m - 1];
    if prev <= T::zero() {
        return T::zero();
    }
    (moments[m].max(T::zero()) / prev).sqrt()
}

/// `Re Σ_w a(w) conj(b(w))`, iterating over the smaller support.
fn pairing<T: Scalar>(a: &GroupAlgebraElement<T>, b: &GroupAlgebraElement<T>) -> T {
    let (small, large, conj_small) = if a.support_len() <= b.support_len() {
        (a, b, false)
    } else {
        (b, a, true)
    };
    let mut acc = T::zero();
    for (w, c) in small.terms() {
        let other = large.coefficient(w);
        let term = if conj_small {
            other * c.conj()
        } else {
            *c * other.conj()
        };
        acc += term.real();
    }
    acc
}

/// `k^{-1} Σ_{ij} a_ij u_i u_j^{-1}` in the group algebra of `F_k`.
pub fn coefficient_element<T: Scalar>(a: &CoeffMatrix<T>) -> GroupAlgebraElement<T> {
    let k = a.k();
    let inv_k = T::one() / T::lit(k as f64);
    let terms = (0..k).flat_map(|i| {
        (0..k).map(move |j| {
            let word = if i == j {
                Word::identity()
            } else {
                Word(vec![i as i32 + 1, -(j as i32 + 1)])
            };
            (word, a.entry(i, j).scale(inv_k))
        })
    });
    GroupAlgebraElement::from_terms(k, terms).expect("generator indices are within 1..=k")
}

fn check_k<T: Scalar>(a: &CoeffMatrix<T>, k: usize) -> Result<()> {
    if a.k() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: a.k(),
        });
    }
    Ok(())
}

/// `k^{-1}|Tr A| + (3/k) sqrt(Σ_{i≠j} |a_ij|^2)`: the Haagerup bound on
/// `|||A||| = k^{-1}‖Σ a_ij u_i u_j^*‖`.
pub fn triple_norm_bound<T: Scalar>(a: &CoeffMatrix<T>, k: usize) -> Result<T> {
    check_k(a, k)?;
    let kf = T::lit(k as f64);
    let mut trace = Complex::new(T::zero(), T::zero());
    let mut off = T::zero();
    for i in 0..k {
        for j in 0..k {
            if i == j {
                trace += a.entry(i, i);
            } else {
                off += a.entry(i, j).modulus_squared();
            }
        }
    }
    Ok(trace.modulus() / kf + T::lit(3.0) / kf * off.sqrt())
}

/// `(moment lower bound of order m, Haagerup upper bound)` for `|||A|||`.
pub fn triple_norm_bracket<T: Scalar>(a: &CoeffMatrix<T>, k: usize, m: usize) -> Result<(T, T)> {
    check_k(a, k)?;
    let lower = coefficient_element(a).norm_lower_bound(m)?;
    Ok((lower, triple_norm_bound(a, k)?))
}
