//! Exact arithmetic in the group algebra of the free group `F_k`.
//!
//! Letters are signed integers: `+i` is the generator `u_i`, `-i` its inverse,
//! for `i` in `1..=k`. Words are kept reduced and ordered shortlex (length
//! first, then lexicographically on the letter values), which fixes the
//! iteration order of every element.
//!
//! Elements are finitely supported maps `Word -> Complex<T>`. Coefficients with
//! modulus below [`PRUNE_THRESHOLD`] are dropped after every product, and a
//! product whose support would exceed the configured cap fails with
//! [`Error::ResourceLimit`] instead of being truncated.

mod norms;

pub use norms::{coefficient_element, triple_norm_bound, triple_norm_bracket};

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use nalgebra::{Complex, ComplexField};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{cr, Scalar};

/// Default cap on the number of words in any intermediate support.
pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

/// Coefficients below this modulus are discarded after multiplication.
pub const PRUNE_THRESHOLD: f64 = 1e-30;

/// A reduced word in the free generators.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<i32>);

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Word {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    /// Freely reduces a letter sequence over `k` generators.
    pub fn reduce(letters: &[i32], k: usize) -> Result<Self> {
        let mut out: Vec<i32> = Vec::with_capacity(letters.len());
        for &letter in letters {
            if letter == 0 || letter.unsigned_abs() as usize > k {
                return Err(Error::InvalidIndex { index: letter, k });
            }
            if out.last() == Some(&-letter) {
                out.pop();
            } else {
                out.push(letter);
            }
        }
        Ok(Self(out))
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().rev().map(|l| -l).collect())
    }

    /// Reduced form of the concatenation `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        let (a, b) = (&self.0, &other.0);
        let mut cancel = 0;
        while cancel < a.len() && cancel < b.len() && a[a.len() - 1 - cancel] == -b[cancel] {
            cancel += 1;
        }
        let mut out = Vec::with_capacity(a.len() + b.len() - 2 * cancel);
        out.extend_from_slice(&a[..a.len() - cancel]);
        out.extend_from_slice(&b[cancel..]);
        Word(out)
    }

    fn max_generator(&self) -> usize {
        self.0
            .iter()
            .map(|l| l.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != -w[1]) && !self.0.contains(&0)
    }
}

/// A finitely supported function on `F_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupAlgebraElement<T: Scalar> {
    k: usize,
    terms: BTreeMap<Word, Complex<T>>,
}

impl<T: Scalar> GroupAlgebraElement<T> {
    pub fn zero(k: usize) -> Self {
        Self {
            k,
            terms: BTreeMap::new(),
        }
    }

    /// `δ_e`, the unit.
    pub fn identity(k: usize) -> Self {
        Self::delta(k, Word::identity()).expect("identity word is valid")
    }

    pub fn delta(k: usize, word: Word) -> Result<Self> {
        Self::from_terms(k, [(word, cr(T::one()))])
    }

    /// `δ_{u_i}` for a generator `i` in `1..=k`.
    pub fn generator(k: usize, i: usize) -> Result<Self> {
        Self::delta(k, Word::reduce(&[i as i32], k)?)
    }

    /// Sums the given terms. Words must be reduced and use generators `1..=k`.
    pub fn from_terms<I>(k: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Word, Complex<T>)>,
    {
        let mut map: BTreeMap<Word, Complex<T>> = BTreeMap::new();
        for (word, coeff) in terms {
            if !word.is_reduced() {
                return Err(Error::InvalidParameter(format!(
                    "word {:?} is not reduced",
                    word.letters()
                )));
            }
            if word.max_generator() > k {
                return Err(Error::InvalidIndex {
                    index: word.max_generator() as i32,
                    k,
                });
            }
            *map.entry(word).or_insert_with(|| cr(T::zero())) += coeff;
        }
        map.retain(|_, c| *c != cr(T::zero()));
        Ok(Self { k, terms: map })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Complex<T>)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, word: &Word) -> Complex<T> {
        self.terms
            .get(word)
            .copied()
            .unwrap_or_else(|| cr(T::zero()))
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|c| *c *= factor);
        out.terms.retain(|_, c| *c != cr(T::zero()));
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_algebra(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            *out.terms.entry(w.clone()).or_insert_with(|| cr(T::zero())) += *c;
        }
        out.terms.retain(|_, c| *c != cr(T::zero()));
        Ok(out)
    }

    /// Convolution product with the default support cap.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.multiply_capped(other, DEFAULT_SUPPORT_CAP)
    }

    pub fn multiply_capped(&self, other: &Self, cap: usize) -> Result<Self> {
        self.check_same_algebra(other)?;
        let mut acc: HashMap<Word, Complex<T>> = HashMap::new();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                *acc.entry(w1.concat(w2)).or_insert_with(|| cr(T::zero())) += *c1 * *c2;
                if acc.len() > cap {
                    return Err(Error::ResourceLimit {
                        support: acc.len(),
                        cap,
                    });
                }
            }
        }
        let floor = T::lit(PRUNE_THRESHOLD);
        Ok(Self {
            k: self.k,
            terms: acc
                .into_iter()
                .filter(|(_, c)| c.modulus() >= floor && *c != cr(T::zero()))
                .collect(),
        })
    }

    /// `f^*(w) = conj(f(w^{-1}))`.
    pub fn star(&self) -> Self {
        Self {
            k: self.k,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (w.inverse(), c.conj()))
                .collect(),
        }
    }

    /// The canonical trace: the coefficient of the identity word.
    pub fn tau(&self) -> Complex<T> {
        self.coefficient(&Word::identity())
    }

    /// `sqrt(Σ |f(w)|^2)`.
    pub fn l2_norm(&self) -> T {
        self.terms
            .values()
            .fold(T::zero(), |acc, c| acc + c.modulus_squared())
            .sqrt()
    }

    /// ℓ²-norm of the restriction to each word length present in the support.
    pub fn length_profile(&self) -> BTreeMap<usize, T> {
        let mut sq: BTreeMap<usize, T> = BTreeMap::new();
        for (w, c) in &self.terms {
            *sq.entry(w.len()).or_insert_with(T::zero) += c.modulus_squared();
        }
        sq.into_iter().map(|(len, s)| (len, s.sqrt())).collect()
    }

    fn check_same_algebra(&self, other: &Self) -> Result<()> {
        if self.k != other.k {
            return Err(Error::IncompatibleAlgebra {
                left: self.k,
                right: other.k,
            });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    word: Vec<i32>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    k: usize,
    terms: Vec<TermRepr>,
}

impl<T: Scalar> Serialize for GroupAlgebraElement<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ElementRepr {
            k: self.k,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| TermRepr {
                    word: w.0.clone(),
                    re: c.re.as_f64(),
                    im: c.im.as_f64(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for GroupAlgebraElement<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = ElementRepr::deserialize(deserializer)?;
        let terms = repr
            .terms
            .into_iter()
            .map(|t| (Word(t.word), Complex::new(T::lit(t.re), T::lit(t.im))));
        Self::from_terms(repr.k, terms).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type E = GroupAlgebraElement<f64>;

    fn w(letters: &[i32]) -> Word {
        Word::reduce(letters, 3).unwrap()
    }

    fn one(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn reduction_examples() {
        assert!(w(&[1, -1]).is_identity());
        assert_eq!(w(&[1, 2, -2, 1]).letters(), &[1, 1]);
        assert_eq!(w(&[1, -2]).letters(), &[1, -2]);
        assert_eq!(w(&[2, 1, -1, -2, 3]).letters(), &[3]);
    }

    #[test]
    fn reduction_rejects_bad_letters() {
        assert!(matches!(
            Word::reduce(&[1, 4], 3),
            Err(Error::InvalidIndex { index: 4, k: 3 })
        ));
        assert!(Word::reduce(&[0], 3).is_err());
    }

    #[test]
    fn shortlex_order() {
        let mut words = [w(&[2]), w(&[1, 1]), Word::identity(), w(&[-1])];
        words.sort();
        let as_vecs: Vec<&[i32]> = words.iter().map(|x| x.letters()).collect();
        assert_eq!(as_vecs, vec![&[][..], &[-1][..], &[2][..], &[1, 1][..]]);
    }

    #[test]
    fn exhaustive_reduction_is_idempotent() {
        // every letter sequence of length <= 6 over k = 2 (4 letters), plus
        // longer ones sampled by the proptest below
        let alphabet = [1, -1, 2, -2];
        let mut seqs: Vec<Vec<i32>> = vec![vec![]];
        for _ in 0..6 {
            let mut next = Vec::new();
            for s in &seqs {
                for &l in &alphabet {
                    let mut t = s.clone();
                    t.push(l);
                    next.push(t);
                }
            }
            for s in &next {
                let once = Word::reduce(s, 2).unwrap();
                let twice = Word::reduce(once.letters(), 2).unwrap();
                assert_eq!(once, twice);
                assert!(once.is_reduced());
            }
            seqs = next;
        }
    }

    proptest! {
        #[test]
        fn reduction_idempotent_up_to_length_12(
            letters in proptest::collection::vec(
                prop_oneof![Just(1), Just(-1), Just(2), Just(-2), Just(3), Just(-3)], 0..=12)
        ) {
            let once = Word::reduce(&letters, 3).unwrap();
            prop_assert_eq!(Word::reduce(once.letters(), 3).unwrap(), once.clone());
            // the reduced word is the product of its letters in the group
            let mut prod = Word::identity();
            for &l in &letters {
                prod = prod.concat(&Word::reduce(&[l], 3).unwrap());
            }
            prop_assert_eq!(prod, once);
        }
    }

    #[test]
    fn unit_and_inverse() {
        let f = E::from_terms(
            2,
            [(w(&[1, 2]), Complex::new(0.5, -1.0)), (w(&[-2]), one(3.0))],
        )
        .unwrap();
        assert_eq!(E::identity(2).multiply(&f).unwrap(), f);
        assert_eq!(f.multiply(&E::identity(2)).unwrap(), f);
        let u1 = E::generator(2, 1).unwrap();
        let u1inv = E::delta(2, w(&[-1])).unwrap();
        assert_eq!(u1.multiply(&u1inv).unwrap(), E::identity(2));
    }

    #[test]
    fn hand_convolution() {
        let g = E::generator(2, 1)
            .unwrap()
            .add(&E::generator(2, 2).unwrap())
            .unwrap();
        let prod = g.multiply(&g.star()).unwrap();
        let expected = E::from_terms(
            2,
            [
                (Word::identity(), one(2.0)),
                (w(&[1, -2]), one(1.0)),
                (w(&[2, -1]), one(1.0)),
            ],
        )
        .unwrap();
        assert_eq!(prod, expected);
        assert_eq!(prod.tau(), one(2.0));
    }

    #[test]
    fn mismatched_algebras() {
        let a = E::identity(2);
        let b = E::identity(3);
        assert!(matches!(
            a.multiply(&b),
            Err(Error::IncompatibleAlgebra { left: 2, right: 3 })
        ));
    }

    #[test]
    fn star_examples() {
        let u1 = E::generator(2, 1).unwrap();
        assert_eq!(u1.star(), E::delta(2, w(&[-1])).unwrap());
        let alpha = Complex::new(1.5, 2.0);
        assert_eq!(
            E::identity(2).scale(alpha).star(),
            E::identity(2).scale(alpha.conj())
        );
    }

    #[test]
    fn tau_examples() {
        assert_eq!(E::identity(2).tau(), one(1.0));
        assert_eq!(E::delta(2, w(&[1, -2])).unwrap().tau(), one(0.0));
    }

    #[test]
    fn support_cap_is_enforced() {
        let g = E::generator(2, 1)
            .unwrap()
            .add(&E::generator(2, 2).unwrap())
            .unwrap();
        let err = g.multiply_capped(&g, 3).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { cap: 3, .. }));
    }

    #[test]
    fn from_terms_rejects_unreduced_and_out_of_range() {
        assert!(E::from_terms(2, [(Word(vec![1, -1]), one(1.0))]).is_err());
        assert!(E::from_terms(2, [(w(&[3]), one(1.0))]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = E::from_terms(
            3,
            [
                (w(&[1, -3]), Complex::new(0.25, -0.5)),
                (Word::identity(), one(2.0)),
            ],
        )
        .unwrap();
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.contains("\"word\":[1,-3]"));
        let back: E = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert!(
            serde_json::from_str::<E>(r#"{"k":2,"terms":[{"word":[1,-1],"re":1,"im":0}]}"#)
                .is_err()
        );
    }

    pub(crate) fn random_element(
        k: usize,
        max_len: usize,
        support: usize,
        rng: &mut impl rand::Rng,
    ) -> E {
        let terms: Vec<(Word, Complex<f64>)> = (0..support)
            .map(|_| {
                let len = rng.random_range(0..=max_len);
                let mut letters = Vec::new();
                while letters.len() < len {
                    let g = rng.random_range(1..=k as i32);
                    let l = if rng.random_bool(0.5) { g } else { -g };
                    if letters.last() != Some(&-l) {
                        letters.push(l);
                    }
                }
                (
                    Word(letters),
                    Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                )
            })
            .collect();
        E::from_terms(k, terms).unwrap()
    }

    #[test]
    fn trace_property_and_parseval() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let k = rng.random_range(2..=3);
            let f = random_element(k, 3, rng.random_range(1..=20), &mut rng);
            let g = random_element(k, 3, rng.random_range(1..=20), &mut rng);
            let fg = f.multiply(&g).unwrap().tau();
            let gf = g.multiply(&f).unwrap().tau();
            assert!((fg - gf).norm() <= 1e-12);
            let pos = f.multiply(&f.star()).unwrap().tau();
            assert!(pos.im.abs() <= 1e-12);
            assert!((pos.re - f.l2_norm().powi(2)).abs() <= 1e-12);
            // antilinearity of the involution
            let alpha = Complex::new(0.3, -1.2);
            let lhs = f.scale(alpha).add(&g).unwrap().star();
            let rhs = f.star().scale(alpha.conj()).add(&g.star()).unwrap();
            for (word, c) in lhs.terms() {
                assert!((c - rhs.coefficient(word)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn multiplication_is_associative() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let f = random_element(2, 3, 6, &mut rng);
            let g = random_element(2, 3, 6, &mut rng);
            let h = random_element(2, 3, 6, &mut rng);
            let left = f.multiply(&g).unwrap().multiply(&h).unwrap();
            let right = f.multiply(&g.multiply(&h).unwrap()).unwrap();
            assert_eq!(left.support_len(), right.support_len());
            for (word, c) in left.terms() {
                assert!((c - right.coefficient(word)).norm() < 1e-12);
            }
        }
    }
}
