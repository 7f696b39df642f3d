//! Index algebra for the finite power set of the nonnegative integers:
//! single-word bitset indices, level truncations, and the multiplicative
//! weight grading the norm ladder.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Largest coordinate an index may contain, so that an index fits one
/// machine word. Every verified truncation stays far below this.
pub const MAX_COORDINATE: u32 = 63;

/// A finite subset of `{0, ..., 63}`, stored as a bitset: bit `k` is set
/// iff coordinate `k` belongs to the set.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GammaIndex(u64);

impl GammaIndex {
    /// The empty index (the unique index of weight 1).
    pub const EMPTY: Self = Self(0);

    pub const fn from_bits(bits: u64) -> Self {
        Self(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(k: u32) -> Result<Self> {
        if k > MAX_COORDINATE {
            return Err(Error::CoordinateOutOfRange(k));
        }
        Ok(Self(1 << k))
    }

    pub fn from_coordinates<I: IntoIterator<Item = u32>>(coords: I) -> Result<Self> {
        let mut bits = 0u64;
        for k in coords {
            if k > MAX_COORDINATE {
                return Err(Error::CoordinateOutOfRange(k));
            }
            bits |= 1 << k;
        }
        Ok(Self(bits))
    }

    pub const fn contains(self, k: u32) -> bool {
        k <= MAX_COORDINATE && (self.0 >> k) & 1 == 1
    }

    /// Number of coordinates in the set.
    pub const fn cardinality(self) -> u32 {
        self.0.count_ones()
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn max_coordinate(self) -> Option<u32> {
        if self.0 == 0 {
            None
        } else {
            Some(MAX_COORDINATE - self.0.leading_zeros())
        }
    }

    /// Coordinates in ascending order.
    pub fn coordinates(self) -> Coordinates {
        Coordinates(self.0)
    }

    pub const fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub const fn intersect(self, other: Self) -> Self {
        Self(self.0 & other.0)
    }

    pub const fn set_minus(self, other: Self) -> Self {
        Self(self.0 & !other.0)
    }

    /// Symmetric difference `(self \ other) ∪ (other \ self)`.
    pub const fn sym_diff(self, other: Self) -> Self {
        Self(self.0 ^ other.0)
    }

    pub const fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub const fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    /// All `2^cardinality` subsets, in ascending bit-pattern order.
    pub fn subsets(self) -> Subsets {
        Subsets {
            mask: self.0,
            next: Some(0),
        }
    }
}

impl fmt::Display for GammaIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, k) in self.coordinates().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for GammaIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Ascending iterator over the coordinates of an index.
pub struct Coordinates(u64);

impl Iterator for Coordinates {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        if self.0 == 0 {
            None
        } else {
            let k = self.0.trailing_zeros();
            self.0 &= self.0 - 1;
            Some(k)
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Coordinates {}

/// Iterator over all submasks of a fixed index, ascending.
pub struct Subsets {
    mask: u64,
    next: Option<u64>,
}

impl Iterator for Subsets {
    type Item = GammaIndex;

    fn next(&mut self) -> Option<GammaIndex> {
        let cur = self.next?;
        self.next = if cur == self.mask {
            None
        } else {
            Some(cur.wrapping_sub(self.mask) & self.mask)
        };
        Some(GammaIndex(cur))
    }
}

/// Natural logarithm of the multiplicative weight of an index, the product
/// of `1 + k` over its coordinates. Weights are carried in log space so
/// that arbitrary powers stay finite.
#[derive(Clone, Copy, PartialEq, PartialOrd, Debug)]
pub struct LogWeight(f64);

impl LogWeight {
    pub const ZERO: Self = Self(0.0);

    pub fn new(log_lambda: f64) -> Self {
        Self(log_lambda)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The weight itself; exact for small indices, may round for large ones.
    pub fn lambda(self) -> f64 {
        self.0.exp()
    }

    /// `lambda^p` computed as `exp(p * log lambda)`.
    pub fn pow(self, p: f64) -> f64 {
        (p * self.0).exp()
    }
}

/// `log lambda` of an index: the sum of `ln(1 + k)` over its coordinates.
pub fn lambda_log(sigma: GammaIndex) -> LogWeight {
    LogWeight(sigma.coordinates().map(|k| (1.0 + f64::from(k)).ln()).sum())
}

/// A truncation of the index set to subsets of `{0, ..., n}`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TruncationLevel(u8);

impl TruncationLevel {
    pub fn new(n: u32) -> Result<Self> {
        if n > MAX_COORDINATE {
            return Err(Error::LevelOutOfRange(n));
        }
        Ok(Self(n as u8))
    }

    pub const fn n(self) -> u32 {
        self.0 as u32
    }

    /// Number of indices in the truncation: `2^(n+1)`.
    pub const fn cardinality(self) -> u128 {
        1u128 << (self.0 + 1)
    }

    /// Cardinality as a materializable dimension. Rejected above 2^26
    /// indices, which is already far past every verified configuration.
    pub fn dim(self) -> Result<usize> {
        if self.n() >= 26 {
            return Err(Error::TruncationTooLarge(self.n(), self.cardinality()));
        }
        Ok(1usize << (self.0 + 1))
    }

    /// Bit pattern of the largest index in the truncation.
    pub const fn bit_mask(self) -> u64 {
        if self.0 == 63 {
            u64::MAX
        } else {
            (1u64 << (self.0 + 1)) - 1
        }
    }

    pub fn contains(self, sigma: GammaIndex) -> bool {
        sigma.bits() & !self.bit_mask() == 0
    }

    /// Rejects an index whose support escapes the truncation.
    pub fn check_support(self, sigma: GammaIndex) -> Result<()> {
        if self.contains(sigma) {
            Ok(())
        } else {
            Err(Error::SupportEscape {
                coordinate: sigma.max_coordinate().unwrap_or(0),
                level: self.n(),
            })
        }
    }
}

/// All indices of the truncation in the canonical (ascending bit-pattern)
/// order. The order is the library-wide convention for matrix indexing.
pub fn enumerate_gamma_n(level: TruncationLevel) -> impl Iterator<Item = GammaIndex> {
    (0..=level.bit_mask()).map(GammaIndex::from_bits)
}

fn ln_table() -> [f64; 64] {
    let mut t = [0.0; 64];
    for (k, slot) in t.iter_mut().enumerate() {
        *slot = (1.0 + k as f64).ln();
    }
    t
}

/// Log-weights of every index of the truncation, indexed by bit pattern.
pub fn log_weight_table(level: TruncationLevel) -> Result<Vec<f64>> {
    let dim = level.dim()?;
    let lns = ln_table();
    let mut table = vec![0.0f64; dim];
    for m in 1..dim {
        let high = usize::BITS - 1 - m.leading_zeros();
        table[m] = table[m ^ (1usize << high)] + lns[high as usize];
    }
    Ok(table)
}

// negated comparison so NaN exponents are rejected too
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn require_convergent_exponent(r: f64) -> Result<()> {
    if !(r > 1.0) {
        return Err(Error::SeriesExponent(r));
    }
    Ok(())
}

/// Truncated weight series: the sum of `lambda^(-r)` over the truncation,
/// accumulated with compensation in ascending-weight order.
pub fn weight_series_sum(r: f64, level: TruncationLevel) -> Result<f64> {
    require_convergent_exponent(r)?;
    let mut logs = log_weight_table(level)?;
    logs.sort_unstable_by(f64::total_cmp);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for lw in logs {
        let term = (-r * lw).exp();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(sum)
}

/// Closed form of the truncated weight series by coordinate factorization:
/// the product of `1 + (1+k)^(-r)` over the coordinates of the truncation.
pub fn weight_series_product(r: f64, level: TruncationLevel) -> Result<f64> {
    require_convergent_exponent(r)?;
    Ok((0..=level.n())
        .map(|k| 1.0 + (1.0 + f64::from(k)).powf(-r))
        .product())
}

/// Certified upper envelope of the full (untruncated) weight series:
/// `exp` of a partial zeta sum plus an integral tail bound.
pub fn weight_series_envelope(r: f64) -> Result<f64> {
    require_convergent_exponent(r)?;
    const CUTOFF: u32 = 200;
    let partial: f64 = (1..=CUTOFF).map(|m| f64::from(m).powf(-r)).sum();
    let tail = f64::from(CUTOFF).powf(1.0 - r) / (r - 1.0);
    Ok((partial + tail).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerances::WEIGHT_FACTORIZATION_REL;
    use proptest::prelude::*;

    fn idx(coords: &[u32]) -> GammaIndex {
        GammaIndex::from_coordinates(coords.iter().copied()).unwrap()
    }

    #[test]
    fn lambda_log_empty_is_zero() {
        assert_eq!(lambda_log(GammaIndex::EMPTY).value(), 0.0);
    }

    #[test]
    fn lambda_log_singleton_zero_is_zero() {
        // the factor (1 + 0) is the identity
        assert_eq!(lambda_log(idx(&[0])).value(), 0.0);
    }

    #[test]
    fn lambda_log_one_two() {
        let lw = lambda_log(idx(&[1, 2]));
        assert!((lw.value() - 6.0f64.ln()).abs() < 1e-15);
        assert!((lw.lambda() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn enumerate_level_zero() {
        let level = TruncationLevel::new(0).unwrap();
        let all: Vec<_> = enumerate_gamma_n(level).collect();
        assert_eq!(all, vec![GammaIndex::EMPTY, idx(&[0])]);
    }

    #[test]
    fn enumerate_level_one_contains_pair() {
        let level = TruncationLevel::new(1).unwrap();
        let all: Vec<_> = enumerate_gamma_n(level).collect();
        assert_eq!(all.len(), 4);
        assert!(all.contains(&idx(&[0, 1])));
    }

    #[test]
    fn enumeration_nested_in_next_level() {
        let small = TruncationLevel::new(3).unwrap();
        let big = TruncationLevel::new(4).unwrap();
        let bigger: Vec<_> = enumerate_gamma_n(big).collect();
        for sigma in enumerate_gamma_n(small) {
            assert!(bigger.contains(&sigma));
        }
    }

    #[test]
    fn level_out_of_range_rejected() {
        assert_eq!(
            TruncationLevel::new(64).unwrap_err(),
            Error::LevelOutOfRange(64)
        );
    }

    #[test]
    fn coordinate_out_of_range_rejected() {
        assert!(matches!(
            GammaIndex::singleton(64),
            Err(Error::CoordinateOutOfRange(64))
        ));
    }

    #[test]
    fn sym_diff_examples() {
        assert_eq!(idx(&[0, 1]).sym_diff(idx(&[1, 2])), idx(&[0, 2]));
        let s = idx(&[3, 5, 7]);
        assert_eq!(s.sym_diff(s), GammaIndex::EMPTY);
    }

    #[test]
    fn subsets_of_pair() {
        let subs: Vec<_> = idx(&[1, 3]).subsets().collect();
        assert_eq!(
            subs,
            vec![GammaIndex::EMPTY, idx(&[1]), idx(&[3]), idx(&[1, 3])]
        );
    }

    #[test]
    fn weight_sum_level_zero() {
        let level = TruncationLevel::new(0).unwrap();
        assert_eq!(weight_series_sum(2.0, level).unwrap(), 2.0);
    }

    #[test]
    fn weight_sum_matches_product_at_level_20() {
        let level = TruncationLevel::new(20).unwrap();
        let sum = weight_series_sum(2.0, level).unwrap();
        // independent oracle: direct product evaluation
        let product: f64 = (1..=21).map(|m| 1.0 + (m as f64).powi(-2)).product();
        assert!((sum - product).abs() <= WEIGHT_FACTORIZATION_REL * product);
        // the full series tends to sinh(pi)/pi
        let limit = std::f64::consts::PI.sinh() / std::f64::consts::PI;
        assert!(sum < limit);
        assert!((limit - sum) / limit < 1e-1);
    }

    #[test]
    fn weight_sum_below_envelope() {
        let envelope = weight_series_envelope(2.0).unwrap();
        // envelope is exp(zeta(2)) up to the certified tail
        let exact = (std::f64::consts::PI.powi(2) / 6.0).exp();
        assert!(envelope >= exact);
        assert!(envelope < exact * 1.01);
        for n in [0u32, 5, 10, 20] {
            let level = TruncationLevel::new(n).unwrap();
            assert!(weight_series_sum(2.0, level).unwrap() <= envelope);
        }
    }

    #[test]
    fn factorization_identity_every_level_to_twenty() {
        for n in 0..=20u32 {
            let level = TruncationLevel::new(n).unwrap();
            for r in [1.5, 2.0, 3.0] {
                let sum = weight_series_sum(r, level).unwrap();
                let product: f64 = (0..=n).map(|k| 1.0 + (1.0 + k as f64).powf(-r)).product();
                assert!(
                    (sum - product).abs() <= WEIGHT_FACTORIZATION_REL * product,
                    "n={n} r={r}"
                );
            }
        }
    }

    #[test]
    fn weight_sum_rejects_small_exponent() {
        let level = TruncationLevel::new(3).unwrap();
        assert!(matches!(
            weight_series_sum(1.0, level),
            Err(Error::SeriesExponent(_))
        ));
        assert!(matches!(
            weight_series_sum(0.5, level),
            Err(Error::SeriesExponent(_))
        ));
    }

    #[test]
    fn log_weight_table_matches_direct() {
        let level = TruncationLevel::new(6).unwrap();
        let table = log_weight_table(level).unwrap();
        for sigma in enumerate_gamma_n(level) {
            let direct = lambda_log(sigma).value();
            assert!((table[sigma.bits() as usize] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn display_form() {
        assert_eq!(idx(&[0, 2, 5]).to_string(), "{0,2,5}");
        assert_eq!(GammaIndex::EMPTY.to_string(), "{}");
    }

    proptest! {
        #[test]
        fn enumeration_is_a_bijection(n in 0u32..10) {
            let level = TruncationLevel::new(n).unwrap();
            let all: Vec<_> = enumerate_gamma_n(level).collect();
            prop_assert_eq!(all.len() as u128, level.cardinality());
            let mut sorted = all.clone();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), all.len());
            for sigma in all {
                prop_assert!(level.contains(sigma));
            }
        }

        #[test]
        fn log_weight_additive_on_disjoint(a in 0u64..(1 << 16), b in 0u64..(1 << 16)) {
            let sigma = GammaIndex::from_bits(a);
            let tau = GammaIndex::from_bits(b & !a);
            prop_assert!(sigma.is_disjoint(tau));
            let both = lambda_log(sigma.union(tau)).value();
            let split = lambda_log(sigma).value() + lambda_log(tau).value();
            prop_assert!((both - split).abs() <= 1e-12 * (1.0 + split.abs()));
        }

        #[test]
        fn log_weight_subadditive_on_sym_diff(a in 0u64..(1 << 16), b in 0u64..(1 << 16)) {
            let sigma = GammaIndex::from_bits(a);
            let tau = GammaIndex::from_bits(b);
            let lhs = lambda_log(sigma.sym_diff(tau)).value();
            let rhs = lambda_log(sigma).value() + lambda_log(tau).value();
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn subsets_count_and_containment(bits in 0u64..(1 << 12)) {
            let sigma = GammaIndex::from_bits(bits);
            let subs: Vec<_> = sigma.subsets().collect();
            prop_assert_eq!(subs.len(), 1usize << sigma.cardinality());
            for s in subs {
                prop_assert!(s.is_subset_of(sigma));
            }
        }

        #[test]
        fn factorization_identity_small_levels(n in 0u32..12, ridx in 0usize..3) {
            let r = [1.5, 2.0, 3.0][ridx];
            let level = TruncationLevel::new(n).unwrap();
            let sum = weight_series_sum(r, level).unwrap();
            let product = weight_series_product(r, level).unwrap();
            prop_assert!((sum - product).abs() <= WEIGHT_FACTORIZATION_REL * product);
        }
    }
}
