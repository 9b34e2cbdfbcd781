//! Exact b-adic combinatorics: words over `{0, …, b-1}`, the half-open
//! intervals they code, and the grids `T_n`.
//!
//! Endpoints are exact rationals with denominator `b^n`; conversion to `f64`
//! happens only at the simulation boundary.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};

pub type Rational = Ratio<u128>;

/// `b^n` as an exact integer, or an error when it overflows `u128`.
pub fn checked_power(base: u32, depth: u32) -> Result<u128> {
    if base < 2 {
        return Err(CascadeError::InvalidBase(base));
    }
    (base as u128)
        .checked_pow(depth)
        .ok_or(CascadeError::DepthTooLarge { depth, base })
}

/// `b^n` for sizes that must also index memory.
pub fn cell_count(base: u32, depth: u32) -> Result<usize> {
    let p = checked_power(base, depth)?;
    usize::try_from(p).map_err(|_| CascadeError::DepthTooLarge { depth, base })
}

/// A finite word over the alphabet `{0, …, b-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    base: u32,
    digits: Vec<u32>,
}

impl Word {
    pub fn new(base: u32, digits: Vec<u32>) -> Result<Self> {
        if base < 2 {
            return Err(CascadeError::InvalidBase(base));
        }
        if let Some(&digit) = digits.iter().find(|&&d| d >= base) {
            return Err(CascadeError::InvalidDigit { digit, base });
        }
        Ok(Self { base, digits })
    }

    pub fn empty(base: u32) -> Result<Self> {
        Self::new(base, Vec::new())
    }

    /// The word of length `len` whose digits spell `index` in base `b`
    /// (most significant digit first).
    pub fn from_index(base: u32, len: u32, index: u128) -> Result<Self> {
        let count = checked_power(base, len)?;
        if index >= count {
            return Err(CascadeError::InvalidParameter(format!(
                "index {index} out of range for words of length {len} in base {base}"
            )));
        }
        let mut digits = vec![0; len as usize];
        let mut rest = index;
        for slot in digits.iter_mut().rev() {
            *slot = (rest % base as u128) as u32;
            rest /= base as u128;
        }
        Ok(Self { base, digits })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Position of the word among all words of the same length, in
    /// lexicographic (= left-to-right) order.
    pub fn index(&self) -> u128 {
        self.digits
            .iter()
            .fold(0u128, |acc, &d| acc * self.base as u128 + d as u128)
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word { base: self.base, digits: self.digits[..len.min(self.len())].to_vec() }
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        self.base == other.base && other.digits.starts_with(&self.digits)
    }

    pub fn child(&self, digit: u32) -> Result<Word> {
        if digit >= self.base {
            return Err(CascadeError::InvalidDigit { digit, base: self.base });
        }
        let mut digits = self.digits.clone();
        digits.push(digit);
        Ok(Word { base: self.base, digits })
    }

    /// `t_w = Σ w_i b^{-i}`, exactly.
    pub fn left_endpoint(&self) -> Rational {
        let den = (self.base as u128).pow(self.len() as u32);
        Rational::new(self.index(), den)
    }
}

/// All words of length `n`, in left-to-right order.
pub fn words(base: u32, n: u32) -> Result<impl Iterator<Item = Word>> {
    let count = checked_power(base, n)?;
    Ok((0..count).map(move |i| Word::from_index(base, n, i).expect("index in range")))
}

/// The half-open interval `I_w = [t_w, t_w + b^{-|w|})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadicInterval {
    pub left: Rational,
    pub width: Rational,
}

impl BadicInterval {
    pub fn right(&self) -> Rational {
        self.left + self.width
    }

    pub fn contains(&self, t: &Rational) -> bool {
        *t >= self.left && *t < self.right()
    }

    pub fn left_f64(&self) -> f64 {
        ratio_to_f64(&self.left)
    }

    pub fn width_f64(&self) -> f64 {
        ratio_to_f64(&self.width)
    }
}

pub fn ratio_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn word_to_interval(w: &Word) -> BadicInterval {
    let den = (w.base as u128).pow(w.len() as u32);
    BadicInterval { left: w.left_endpoint(), width: Rational::new(1, den) }
}

/// `t|n`: the unique word of length `n` with `t ∈ I_{t|n}`.
///
/// The returned word satisfies `k / b^n <= t < (k+1) / b^n` when both sides
/// are rounded to `f64` the same way as [`ratio_to_f64`], so that
/// `locate(t_w, n) == w` for every word.
pub fn locate(t: f64, n: u32, base: u32) -> Result<Word> {
    if base < 2 {
        return Err(CascadeError::InvalidBase(base));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(CascadeError::OutOfRange(t));
    }
    let count = checked_power(base, n)?;
    if count > 1u128 << 53 {
        return Err(CascadeError::DepthTooLarge { depth: n, base });
    }
    Word::from_index(base, n, locate_index(t, count as u64) as u128)
}

/// Index `k` of the cell of `[0,1)` split into `count` equal parts that
/// contains `t`. Requires `count <= 2^53`.
pub(crate) fn locate_index(t: f64, count: u64) -> u64 {
    let c = count as f64;
    let mut k = ((t * c).floor() as u64).min(count - 1);
    while k > 0 && k as f64 / c > t {
        k -= 1;
    }
    while k + 1 < count && (k + 1) as f64 / c <= t {
        k += 1;
    }
    k
}

/// Exact variant of [`locate`] for rational points.
pub fn locate_rational(t: &Rational, n: u32, base: u32) -> Result<Word> {
    if *t >= Rational::from_integer(1) {
        return Err(CascadeError::OutOfRange(ratio_to_f64(t)));
    }
    let count = checked_power(base, n)?;
    let scaled = t * Rational::from_integer(count);
    Word::from_index(base, n, scaled.to_integer())
}

/// The grid `T_n = {t_w : w ∈ A^n} ∪ {1}`, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub base: u32,
    pub generation: u32,
    pub points: Vec<Rational>,
}

impl Grid {
    pub fn new(n: u32, base: u32) -> Result<Self> {
        if n < 1 {
            return Err(CascadeError::InvalidParameter("grid generation must be >= 1".into()));
        }
        let count = cell_count(base, n)?;
        let den = count as u128;
        let points = (0..=den).map(|k| Rational::new(k, den)).collect();
        Ok(Self { base, generation: n, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.points.iter().map(ratio_to_f64).collect()
    }
}

pub fn grid(n: u32, base: u32) -> Result<Grid> {
    Grid::new(n, base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: u128, d: u128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn intervals_of_small_words() {
        let i = word_to_interval(&Word::empty(2).unwrap());
        assert_eq!((i.left, i.right()), (r(0, 1), r(1, 1)));

        let i = word_to_interval(&Word::new(2, vec![0, 1]).unwrap());
        assert_eq!((i.left, i.right()), (r(1, 4), r(1, 2)));

        let i = word_to_interval(&Word::new(3, vec![2, 2]).unwrap());
        assert_eq!((i.left, i.right()), (r(8, 9), r(1, 1)));
    }

    #[test]
    fn locate_examples() {
        assert_eq!(locate(1.0 / 3.0, 2, 2).unwrap().digits(), &[0, 1]);
        assert_eq!(locate(0.0, 5, 2).unwrap().digits(), &[0, 0, 0, 0, 0]);
        assert_eq!(locate(0.7, 1, 3).unwrap().digits(), &[2]);
        assert!(locate(0.3, 0, 2).unwrap().is_empty());
    }

    #[test]
    fn locate_rejects_one() {
        assert_eq!(locate(1.0, 3, 2), Err(CascadeError::OutOfRange(1.0)));
        assert!(locate(-0.1, 3, 2).is_err());
        assert!(locate_rational(&r(1, 1), 2, 2).is_err());
    }

    #[test]
    fn invalid_words() {
        assert!(Word::new(1, vec![]).is_err());
        assert_eq!(
            Word::new(3, vec![0, 3]),
            Err(CascadeError::InvalidDigit { digit: 3, base: 3 })
        );
    }

    #[test]
    fn grids() {
        assert_eq!(grid(1, 2).unwrap().points, vec![r(0, 1), r(1, 2), r(1, 1)]);
        assert_eq!(
            grid(2, 2).unwrap().points,
            vec![r(0, 1), r(1, 4), r(1, 2), r(3, 4), r(1, 1)]
        );
        assert_eq!(grid(1, 3).unwrap().points, vec![r(0, 1), r(1, 3), r(2, 3), r(1, 1)]);
        assert!(grid(0, 2).is_err());
    }

    #[test]
    fn grid_size_and_gaps() {
        for (n, b) in [(1, 2), (4, 3), (3, 5), (10, 2)] {
            let g = grid(n, b).unwrap();
            assert_eq!(g.len() as u128, (b as u128).pow(n) + 1);
            let gap = r(1, (b as u128).pow(n));
            assert!(g.points.windows(2).all(|w| w[1] - w[0] == gap));
        }
    }

    #[test]
    fn grids_are_nested() {
        for b in 2..5 {
            for n in 1..5 {
                let fine = grid(n + 1, b).unwrap().points;
                assert!(grid(n, b).unwrap().points.iter().all(|p| fine.contains(p)));
            }
        }
    }

    #[test]
    fn partition_is_exact() {
        for (b, n) in [(2, 6), (3, 4), (7, 2)] {
            let mut total = r(0, 1);
            let mut prev_right = r(0, 1);
            for w in words(b, n).unwrap() {
                let i = word_to_interval(&w);
                assert_eq!(i.left, prev_right);
                prev_right = i.right();
                total += i.width;
            }
            assert_eq!(total, r(1, 1));
            assert_eq!(prev_right, r(1, 1));
        }
    }

    proptest! {
        #[test]
        fn locate_nests(t in 0.0f64..1.0, n in 0u32..20, b in 2u32..7) {
            let w = locate(t, n, b).unwrap();
            let w1 = locate(t, n + 1, b).unwrap();
            prop_assert!(w.is_prefix_of(&w1));
            let i = word_to_interval(&w);
            prop_assert!(i.left_f64() <= t);
            prop_assert!(t < ratio_to_f64(&i.right()) || i.right() == r(1, 1));
        }

        #[test]
        fn locate_round_trips(b in 2u32..9, n in 0u32..12, seed in any::<u64>()) {
            let count = (b as u128).pow(n);
            let w = Word::from_index(b, n, seed as u128 % count).unwrap();
            let t = ratio_to_f64(&w.left_endpoint());
            prop_assert_eq!(locate(t, n, b).unwrap(), w.clone());
            prop_assert_eq!(locate_rational(&w.left_endpoint(), n, b).unwrap(), w);
        }
    }
}
