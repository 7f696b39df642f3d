//! The two-point product probability space at finite level: parameter
//! sequences, atoms, cylinder events, exact integration by enumeration,
//! and a seeded Monte Carlo sampler that cross-checks the enumeration.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Deserializer, Visitor};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::chaos::ChaosVector;
use crate::error::Error;
use crate::gamma::{GammaIndex, MAX_COORDINATE};
use crate::Result;

/// Cylinder masks above this level are not materialized.
pub const MAX_CYLINDER_LEVEL: u32 = 25;

/// The coordinate distribution parameters. Either the symmetric sequence
/// (every parameter is 1/2) or an explicit prefix of values in (0, 1).
#[derive(Clone, Debug, PartialEq)]
pub enum ThetaSequence {
    Symmetric,
    Explicit(Vec<f64>),
}

impl ThetaSequence {
    pub fn symmetric() -> Self {
        Self::Symmetric
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::ThetaRange { index, value });
            }
        }
        Ok(Self::Explicit(values))
    }

    /// True iff every parameter equals 1/2.
    pub fn is_symmetric(&self) -> bool {
        match self {
            Self::Symmetric => true,
            Self::Explicit(v) => v.iter().all(|&t| t == 0.5),
        }
    }

    pub fn require_symmetric(&self) -> Result<()> {
        if self.is_symmetric() {
            Ok(())
        } else {
            Err(Error::NonSymmetricTheta)
        }
    }

    pub fn value(&self, n: u32) -> Result<f64> {
        match self {
            Self::Symmetric => Ok(0.5),
            Self::Explicit(v) => v.get(n as usize).copied().ok_or(Error::ThetaCoverage(n)),
        }
    }

    /// Parameters for coordinates `0..=level`, validated once.
    pub fn prefix(&self, level: u32) -> Result<Vec<f64>> {
        (0..=level).map(|k| self.value(k)).collect()
    }
}

impl Serialize for ThetaSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Symmetric => serializer.serialize_str("symmetric"),
            Self::Explicit(v) => v.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for ThetaSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ThetaVisitor;

        impl<'de> Visitor<'de> for ThetaVisitor {
            type Value = ThetaSequence;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"symmetric\" or a list of parameters in (0,1)")
            }

            fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<ThetaSequence, E> {
                if s == "symmetric" {
                    Ok(ThetaSequence::Symmetric)
                } else {
                    Err(E::custom(format!("unknown theta mode: {s}")))
                }
            }

            fn visit_seq<A: de::SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<ThetaSequence, A::Error> {
                let mut values = Vec::new();
                while let Some(v) = seq.next_element::<f64>()? {
                    values.push(v);
                }
                ThetaSequence::explicit(values).map_err(de::Error::custom)
            }
        }

        deserializer.deserialize_any(ThetaVisitor)
    }
}

/// A coordinate sign.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Self::Plus
        } else {
            Self::Minus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }
}

/// Value of the normalized coordinate variable at coordinate `n` under the
/// given parameters. The two values have mean 0 and variance 1 under the
/// coordinate distribution.
pub fn z_value(n: u32, sign: Sign, theta: &ThetaSequence) -> Result<f64> {
    let t = theta.value(n)?;
    Ok(match sign {
        Sign::Plus => ((1.0 - t) / t).sqrt(),
        Sign::Minus => -(t / (1.0 - t)).sqrt(),
    })
}

/// A full sign assignment on coordinates `0..=level`, with its probability
/// under the product law. Bit `k` of the pattern set means coordinate `k`
/// carries the sign +1; the pattern doubles as the canonical atom index.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Atom {
    level: u32,
    pattern: u64,
    prob: f64,
}

impl Atom {
    pub fn from_index(level: u32, index: u64, theta: &ThetaSequence) -> Result<Self> {
        if level > MAX_COORDINATE {
            return Err(Error::LevelOutOfRange(level));
        }
        if level < 63 && index >> (level + 1) != 0 {
            return Err(Error::AtomIndex { level, index });
        }
        let mut prob = 1.0;
        for k in 0..=level {
            let t = theta.value(k)?;
            prob *= if (index >> k) & 1 == 1 { t } else { 1.0 - t };
        }
        Ok(Self {
            level,
            pattern: index,
            prob,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> u64 {
        self.pattern
    }

    pub fn prob(&self) -> f64 {
        self.prob
    }

    pub fn sign(&self, k: u32) -> Result<Sign> {
        if k > self.level {
            return Err(Error::LevelEscape {
                coordinate: k,
                level: self.level,
            });
        }
        Ok(Sign::from_bit((self.pattern >> k) & 1 == 1))
    }
}

/// All atoms of a level, in ascending index order.
pub fn enumerate_atoms<'a>(
    level: u32,
    theta: &'a ThetaSequence,
) -> Result<impl Iterator<Item = Atom> + 'a> {
    if level > MAX_CYLINDER_LEVEL {
        return Err(Error::TruncationTooLarge(level, 1u128 << (level + 1)));
    }
    theta.prefix(level)?;
    let count = 1u64 << (level + 1);
    Ok((0..count).map(move |i| Atom::from_index(level, i, theta).expect("validated prefix")))
}

/// Value of the product basis functional indexed by `sigma` at an atom.
pub fn eval_z_sigma(sigma: GammaIndex, atom: &Atom, theta: &ThetaSequence) -> Result<f64> {
    if let Some(m) = sigma.max_coordinate() {
        if m > atom.level {
            return Err(Error::LevelEscape {
                coordinate: m,
                level: atom.level,
            });
        }
    }
    let mut out = 1.0;
    for k in sigma.coordinates() {
        out *= z_value(k, atom.sign(k)?, theta)?;
    }
    Ok(out)
}

/// Per-coordinate values of the normalized variable, cached for a level.
struct ZCache {
    plus: Vec<f64>,
    minus: Vec<f64>,
    symmetric: bool,
}

impl ZCache {
    fn build(level: u32, theta: &ThetaSequence) -> Result<Self> {
        let prefix = theta.prefix(level)?;
        let plus = prefix.iter().map(|t| ((1.0 - t) / t).sqrt()).collect();
        let minus = prefix.iter().map(|t| -(t / (1.0 - t)).sqrt()).collect();
        Ok(Self {
            plus,
            minus,
            symmetric: theta.is_symmetric(),
        })
    }

    fn eval_sigma(&self, sigma: GammaIndex, pattern: u64) -> f64 {
        if self.symmetric {
            // the product of signs is -1 iff an odd number of the
            // coordinates carry the minus sign (pattern bit unset)
            if (sigma.bits() & !pattern).count_ones() & 1 == 1 {
                -1.0
            } else {
                1.0
            }
        } else {
            let mut out = 1.0;
            for k in sigma.coordinates() {
                out *= if (pattern >> k) & 1 == 1 {
                    self.plus[k as usize]
                } else {
                    self.minus[k as usize]
                };
            }
            out
        }
    }

    fn eval_chaos(&self, f: &ChaosVector, pattern: u64) -> Complex64 {
        f.iter()
            .map(|(sigma, c)| c * self.eval_sigma(sigma, pattern))
            .sum()
    }
}

/// Evaluate a chaos vector at an atom.
pub fn eval_chaos(f: &ChaosVector, atom: &Atom, theta: &ThetaSequence) -> Result<Complex64> {
    check_support_level(f, atom.level)?;
    let cache = ZCache::build(atom.level, theta)?;
    Ok(cache.eval_chaos(f, atom.pattern))
}

fn check_support_level(f: &ChaosVector, level: u32) -> Result<()> {
    if let Some(m) = f.max_coordinate() {
        if m > level {
            return Err(Error::LevelEscape {
                coordinate: m,
                level,
            });
        }
    }
    Ok(())
}

/// A finite-level event: a set of atoms of one level.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CylinderSet {
    level: u32,
    blocks: Vec<u64>,
}

impl CylinderSet {
    fn block_count(level: u32) -> usize {
        let atoms = 1u64 << (level + 1);
        (atoms as usize).div_ceil(64)
    }

    fn check_level(level: u32) -> Result<()> {
        if level > MAX_CYLINDER_LEVEL {
            return Err(Error::TruncationTooLarge(level, 1u128 << (level + 1)));
        }
        Ok(())
    }

    pub fn empty(level: u32) -> Result<Self> {
        Self::check_level(level)?;
        Ok(Self {
            level,
            blocks: vec![0; Self::block_count(level)],
        })
    }

    /// The full event of a level (every atom included).
    pub fn full(level: u32) -> Result<Self> {
        let mut e = Self::empty(level)?;
        let atoms = 1u64 << (level + 1);
        for (i, block) in e.blocks.iter_mut().enumerate() {
            let base = (i as u64) * 64;
            let in_block = atoms.saturating_sub(base).min(64);
            *block = if in_block == 64 {
                u64::MAX
            } else {
                (1u64 << in_block) - 1
            };
        }
        Ok(e)
    }

    pub fn from_atom_indices(level: u32, indices: &[u64]) -> Result<Self> {
        let mut e = Self::empty(level)?;
        for &i in indices {
            e.insert_atom(i)?;
        }
        Ok(e)
    }

    /// The event that coordinate `k` carries the given sign.
    pub fn coordinate_event(level: u32, k: u32, sign: Sign) -> Result<Self> {
        if k > level {
            return Err(Error::LevelEscape {
                coordinate: k,
                level,
            });
        }
        let mut e = Self::empty(level)?;
        let atoms = 1u64 << (level + 1);
        for i in 0..atoms {
            let bit = (i >> k) & 1 == 1;
            if bit == matches!(sign, Sign::Plus) {
                e.set_bit(i);
            }
        }
        Ok(e)
    }

    fn set_bit(&mut self, index: u64) {
        self.blocks[(index / 64) as usize] |= 1u64 << (index % 64);
    }

    pub fn insert_atom(&mut self, index: u64) -> Result<()> {
        if index >> (self.level + 1) != 0 {
            return Err(Error::AtomIndex {
                level: self.level,
                index,
            });
        }
        self.set_bit(index);
        Ok(())
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn contains_atom(&self, index: u64) -> bool {
        index >> (self.level + 1) == 0
            && (self.blocks[(index / 64) as usize] >> (index % 64)) & 1 == 1
    }

    pub fn atom_count(&self) -> u64 {
        self.blocks.iter().map(|b| u64::from(b.count_ones())).sum()
    }

    pub fn total_atoms(&self) -> u64 {
        1u64 << (self.level + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    pub fn is_full(&self) -> bool {
        self.atom_count() == self.total_atoms()
    }

    fn zip_check(&self, other: &Self) -> Result<()> {
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level, other.level));
        }
        Ok(())
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.zip_check(other)?;
        Ok(Self {
            level: self.level,
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a | b)
                .collect(),
        })
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.zip_check(other)?;
        Ok(Self {
            level: self.level,
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a & b)
                .collect(),
        })
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.zip_check(other)?;
        Ok(Self {
            level: self.level,
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a & !b)
                .collect(),
        })
    }

    pub fn complement(&self) -> Self {
        let full = Self::full(self.level).expect("level already validated");
        full.minus(self).expect("same level")
    }

    pub fn is_disjoint(&self, other: &Self) -> Result<bool> {
        self.zip_check(other)?;
        Ok(self
            .blocks
            .iter()
            .zip(&other.blocks)
            .all(|(a, b)| a & b == 0))
    }

    /// Indices of the atoms in the event, ascending.
    pub fn atom_indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.blocks.iter().enumerate().flat_map(|(bi, &block)| {
            let base = (bi as u64) * 64;
            BitIter(block).map(move |b| base + u64::from(b))
        })
    }

    /// The same event expressed at a deeper level: every atom is replaced
    /// by all of its refinements.
    pub fn lift_to(&self, level: u32) -> Result<Self> {
        if level < self.level {
            return Err(Error::InsufficientCylinderLevel {
                needed: self.level,
                got: level,
            });
        }
        let mut lifted = Self::empty(level)?;
        let low_mask = (1u64 << (self.level + 1)) - 1;
        for i in 0..lifted.total_atoms() {
            if self.contains_atom(i & low_mask) {
                lifted.set_bit(i);
            }
        }
        Ok(lifted)
    }

    /// Probability of the event under the product law.
    pub fn measure(&self, theta: &ThetaSequence) -> Result<f64> {
        let mut total = 0.0;
        for a in self.atoms(theta)? {
            total += a.prob();
        }
        Ok(total)
    }

    pub fn atoms<'a>(
        &'a self,
        theta: &'a ThetaSequence,
    ) -> Result<impl Iterator<Item = Atom> + 'a> {
        theta.prefix(self.level)?;
        Ok(self
            .atom_indices()
            .map(move |i| Atom::from_index(self.level, i, theta).expect("validated prefix")))
    }

    /// Hex form of the atom mask, most significant block first.
    pub fn mask_hex(&self) -> String {
        self.blocks
            .iter()
            .rev()
            .map(|b| format!("{b:016x}"))
            .collect()
    }

    pub fn from_mask_hex(level: u32, hex: &str) -> Result<Self> {
        let mut e = Self::empty(level)?;
        let expected = e.blocks.len() * 16;
        if hex.len() != expected {
            return Err(Error::Invalid(format!(
                "atom mask must be {expected} hex digits for level {level}, got {}",
                hex.len()
            )));
        }
        for (i, chunk) in hex.as_bytes().chunks(16).enumerate() {
            let s = std::str::from_utf8(chunk)
                .map_err(|_| Error::Invalid("atom mask is not valid hex".into()))?;
            let block = u64::from_str_radix(s, 16)
                .map_err(|_| Error::Invalid("atom mask is not valid hex".into()))?;
            let slot = e.blocks.len() - 1 - i;
            e.blocks[slot] = block;
        }
        let atoms = e.total_atoms();
        let last = e.blocks.len() - 1;
        let used = atoms - (last as u64) * 64;
        if used < 64 && e.blocks[last] >> used != 0 {
            return Err(Error::Invalid(
                "atom mask has bits beyond the atoms of the level".into(),
            ));
        }
        Ok(e)
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        if self.0 == 0 {
            None
        } else {
            let b = self.0.trailing_zeros();
            self.0 &= self.0 - 1;
            Some(b)
        }
    }
}

impl Serialize for CylinderSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("CylinderSet", 2)?;
        s.serialize_field("level", &self.level)?;
        s.serialize_field("atom_mask", &self.mask_hex())?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for CylinderSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            level: u32,
            atom_mask: String,
        }
        let raw = Raw::deserialize(deserializer)?;
        CylinderSet::from_mask_hex(raw.level, &raw.atom_mask).map_err(de::Error::custom)
    }
}

/// Exact integral of a chaos vector over a cylinder event, by enumerating
/// the atoms of the event.
pub fn integrate_cylinder(
    f: &ChaosVector,
    event: &CylinderSet,
    theta: &ThetaSequence,
) -> Result<Complex64> {
    check_support_level(f, event.level)?;
    let cache = ZCache::build(event.level, theta)?;
    let mut total = Complex64::new(0.0, 0.0);
    for atom in event.atoms(theta)? {
        total += atom.prob() * cache.eval_chaos(f, atom.index());
    }
    Ok(total)
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct McEstimate {
    pub estimate: Complex64,
    pub std_error: f64,
    pub samples: u64,
}

fn sample_pattern<R: Rng>(rng: &mut R, level: u32, thetas: &[f64], symmetric: bool) -> u64 {
    if symmetric {
        rng.gen::<u64>() & bit_mask_for(level)
    } else {
        let mut pattern = 0u64;
        for (k, &t) in thetas.iter().enumerate().take(level as usize + 1) {
            if rng.gen::<f64>() < t {
                pattern |= 1 << k;
            }
        }
        pattern
    }
}

fn bit_mask_for(level: u32) -> u64 {
    if level == 63 {
        u64::MAX
    } else {
        (1u64 << (level + 1)) - 1
    }
}

/// Independent atoms with the product law, reproducible from the seed.
pub fn sample_atoms(level: u32, count: u64, seed: u64, theta: &ThetaSequence) -> Result<Vec<Atom>> {
    let thetas = theta.prefix(level)?;
    let symmetric = theta.is_symmetric();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let pattern = sample_pattern(&mut rng, level, &thetas, symmetric);
            Atom::from_index(level, pattern, theta)
        })
        .collect()
}

/// Monte Carlo estimate of the integral of `f` over the event, drawing from
/// the full product law and weighting by the indicator of the event.
pub fn mc_expectation(
    f: &ChaosVector,
    event: &CylinderSet,
    samples: u64,
    seed: u64,
    theta: &ThetaSequence,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::Invalid("sample count must be at least 1".into()));
    }
    check_support_level(f, event.level)?;
    let thetas = theta.prefix(event.level)?;
    let symmetric = theta.is_symmetric();
    let cache = ZCache::build(event.level, theta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut sum = Complex64::new(0.0, 0.0);
    let mut sum_sq = 0.0f64;
    for _ in 0..samples {
        let pattern = sample_pattern(&mut rng, event.level, &thetas, symmetric);
        let y = if event.contains_atom(pattern) {
            cache.eval_chaos(f, pattern)
        } else {
            Complex64::new(0.0, 0.0)
        };
        sum += y;
        sum_sq += y.norm_sqr();
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - sum.norm_sqr() / n) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::ChaosVector;
    use crate::tolerances::{ATOM_PROB_SUM, MC_SIGMA, PARSEVAL_REL, TOWER};
    use proptest::prelude::*;

    fn idx(coords: &[u32]) -> GammaIndex {
        GammaIndex::from_coordinates(coords.iter().copied()).unwrap()
    }

    fn quarter_theta() -> ThetaSequence {
        ThetaSequence::explicit(vec![0.25; 8]).unwrap()
    }

    #[test]
    fn z_values_symmetric() {
        let theta = ThetaSequence::symmetric();
        assert_eq!(z_value(0, Sign::Plus, &theta).unwrap(), 1.0);
        assert_eq!(z_value(0, Sign::Minus, &theta).unwrap(), -1.0);
    }

    #[test]
    fn z_values_quarter() {
        let theta = quarter_theta();
        let plus = z_value(2, Sign::Plus, &theta).unwrap();
        let minus = z_value(2, Sign::Minus, &theta).unwrap();
        assert!((plus - 3.0f64.sqrt()).abs() < 1e-15);
        assert!((minus + 1.0 / 3.0f64.sqrt()).abs() < 1e-15);
        // mean 0, variance 1 under P(+1) = 1/4
        let mean = 0.25 * plus + 0.75 * minus;
        let var = 0.25 * plus * plus + 0.75 * minus * minus;
        assert!(mean.abs() < 1e-15);
        assert!((var - 1.0).abs() < 1e-15);
    }

    #[test]
    fn plus_probability_is_theta() {
        let theta = quarter_theta();
        let n = 1u32;
        let mut p = 0.0;
        for atom in enumerate_atoms(3, &theta).unwrap() {
            if atom.sign(n).unwrap() == Sign::Plus {
                p += atom.prob();
            }
        }
        assert!((p - 0.25).abs() < 1e-14);
    }

    #[test]
    fn atom_probabilities_sum_to_one() {
        for theta in [ThetaSequence::symmetric(), quarter_theta()] {
            for level in 0..=6u32 {
                let total: f64 = enumerate_atoms(level, &theta)
                    .unwrap()
                    .map(|a| a.prob())
                    .sum();
                assert!((total - 1.0).abs() < ATOM_PROB_SUM, "level {level}");
            }
        }
    }

    #[test]
    fn eval_empty_index_is_one() {
        let theta = quarter_theta();
        for atom in enumerate_atoms(2, &theta).unwrap() {
            assert_eq!(eval_z_sigma(GammaIndex::EMPTY, &atom, &theta).unwrap(), 1.0);
        }
    }

    #[test]
    fn eval_squares_to_one_in_symmetric_case() {
        let theta = ThetaSequence::symmetric();
        let sigma = idx(&[0, 2, 3]);
        for atom in enumerate_atoms(3, &theta).unwrap() {
            let v = eval_z_sigma(sigma, &atom, &theta).unwrap();
            assert_eq!(v * v, 1.0);
        }
    }

    #[test]
    fn eval_sign_product() {
        let theta = ThetaSequence::symmetric();
        // pattern 0b01: coordinate 0 is +1, coordinate 1 is -1
        let atom = Atom::from_index(1, 0b01, &theta).unwrap();
        assert_eq!(eval_z_sigma(idx(&[0, 1]), &atom, &theta).unwrap(), -1.0);
    }

    #[test]
    fn eval_rejects_escaping_coordinate() {
        let theta = ThetaSequence::symmetric();
        let atom = Atom::from_index(1, 0, &theta).unwrap();
        assert!(matches!(
            eval_z_sigma(idx(&[5]), &atom, &theta),
            Err(Error::LevelEscape {
                coordinate: 5,
                level: 1
            })
        ));
    }

    #[test]
    fn basis_orthonormality_by_enumeration() {
        for theta in [ThetaSequence::symmetric(), quarter_theta()] {
            let level = 3u32;
            let atoms: Vec<Atom> = enumerate_atoms(level, &theta).unwrap().collect();
            for a_bits in 0u64..16 {
                for b_bits in 0u64..16 {
                    let sigma = GammaIndex::from_bits(a_bits);
                    let tau = GammaIndex::from_bits(b_bits);
                    let mut inner = 0.0;
                    for atom in &atoms {
                        inner += atom.prob()
                            * eval_z_sigma(sigma, atom, &theta).unwrap()
                            * eval_z_sigma(tau, atom, &theta).unwrap();
                    }
                    let expect = if sigma == tau { 1.0 } else { 0.0 };
                    assert!(
                        (inner - expect).abs() < 1e-12,
                        "sigma={sigma} tau={tau} inner={inner}"
                    );
                }
            }
        }
    }

    #[test]
    fn integral_of_basis_over_full_space() {
        let theta = ThetaSequence::symmetric();
        let full = CylinderSet::full(3).unwrap();
        for bits in 0u64..16 {
            let f = ChaosVector::basis(GammaIndex::from_bits(bits));
            let v = integrate_cylinder(&f, &full, &theta).unwrap();
            let expect = if bits == 0 { 1.0 } else { 0.0 };
            assert!((v.re - expect).abs() < 1e-14 && v.im.abs() < 1e-15);
        }
    }

    #[test]
    fn half_space_integral() {
        let theta = ThetaSequence::symmetric();
        let event = CylinderSet::coordinate_event(0, 0, Sign::Plus).unwrap();
        let f = ChaosVector::basis(idx(&[0]));
        let v = integrate_cylinder(&f, &event, &theta).unwrap();
        assert!((v.re - 0.5).abs() < 1e-15 && v.im.abs() < 1e-15);
    }

    #[test]
    fn integrate_rejects_support_escape() {
        let theta = ThetaSequence::symmetric();
        let event = CylinderSet::full(1).unwrap();
        let f = ChaosVector::basis(idx(&[4]));
        assert!(matches!(
            integrate_cylinder(&f, &event, &theta),
            Err(Error::LevelEscape { .. })
        ));
    }

    #[test]
    fn tower_consistency() {
        let theta = quarter_theta();
        let event = CylinderSet::from_atom_indices(2, &[0, 3, 5]).unwrap();
        let lifted = event.lift_to(3).unwrap();
        let f = ChaosVector::from_pairs([
            (idx(&[0]), Complex64::new(0.3, -0.1)),
            (idx(&[1, 2]), Complex64::new(-1.0, 0.4)),
            (GammaIndex::EMPTY, Complex64::new(0.2, 0.0)),
        ]);
        let a = integrate_cylinder(&f, &event, &theta).unwrap();
        let b = integrate_cylinder(&f, &lifted, &theta).unwrap();
        assert!((a - b).norm() < TOWER);
        assert!((event.measure(&theta).unwrap() - lifted.measure(&theta).unwrap()).abs() < TOWER);
    }

    #[test]
    fn cylinder_set_algebra() {
        let a = CylinderSet::from_atom_indices(2, &[0, 1, 2]).unwrap();
        let b = CylinderSet::from_atom_indices(2, &[2, 3]).unwrap();
        assert_eq!(a.intersect(&b).unwrap().atom_count(), 1);
        assert_eq!(a.union(&b).unwrap().atom_count(), 4);
        assert!(!a.is_disjoint(&b).unwrap());
        assert!(a.minus(&b).unwrap().is_disjoint(&b).unwrap());
        assert_eq!(a.complement().atom_count(), 5);
    }

    #[test]
    fn cylinder_hex_round_trip() {
        let e = CylinderSet::from_atom_indices(4, &[0, 7, 13, 31]).unwrap();
        let hex = e.mask_hex();
        let back = CylinderSet::from_mask_hex(4, &hex).unwrap();
        assert_eq!(e, back);
        let json = serde_json::to_string(&e).unwrap();
        let back2: CylinderSet = serde_json::from_str(&json).unwrap();
        assert_eq!(e, back2);
    }

    #[test]
    fn theta_serde_round_trip() {
        let sym = ThetaSequence::symmetric();
        assert_eq!(serde_json::to_string(&sym).unwrap(), "\"symmetric\"");
        let exp = ThetaSequence::explicit(vec![0.25, 0.5]).unwrap();
        let json = serde_json::to_string(&exp).unwrap();
        let back: ThetaSequence = serde_json::from_str(&json).unwrap();
        assert_eq!(exp, back);
        assert!(serde_json::from_str::<ThetaSequence>("[0.0]").is_err());
    }

    #[test]
    fn mc_constant_integrand_is_exact() {
        let theta = ThetaSequence::symmetric();
        let full = CylinderSet::full(2).unwrap();
        let one = ChaosVector::basis(GammaIndex::EMPTY);
        let est = mc_expectation(&one, &full, 1000, 7, &theta).unwrap();
        assert_eq!(est.estimate, Complex64::new(1.0, 0.0));
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn mc_mean_zero_within_band() {
        let theta = ThetaSequence::symmetric();
        let full = CylinderSet::full(3).unwrap();
        let f = ChaosVector::basis(idx(&[1]));
        let est = mc_expectation(&f, &full, 100_000, 11, &theta).unwrap();
        assert!(est.estimate.norm() <= MC_SIGMA * est.std_error);
    }

    #[test]
    fn mc_half_space_within_band() {
        let theta = ThetaSequence::symmetric();
        let event = CylinderSet::coordinate_event(2, 0, Sign::Plus).unwrap();
        let f = ChaosVector::basis(idx(&[0]));
        let exact = integrate_cylinder(&f, &event, &theta).unwrap();
        assert!((exact.re - 0.5).abs() < 1e-15);
        let est = mc_expectation(&f, &event, 100_000, 13, &theta).unwrap();
        assert!((est.estimate - exact).norm() <= MC_SIGMA * est.std_error);
    }

    #[test]
    fn mc_deterministic_for_fixed_seed() {
        let theta = quarter_theta();
        let event = CylinderSet::coordinate_event(2, 1, Sign::Minus).unwrap();
        let f = ChaosVector::basis(idx(&[1, 2]));
        let a = mc_expectation(&f, &event, 5000, 42, &theta).unwrap();
        let b = mc_expectation(&f, &event, 5000, 42, &theta).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.std_error, b.std_error);
        let atoms1 = sample_atoms(2, 10, 42, &theta).unwrap();
        let atoms2 = sample_atoms(2, 10, 42, &theta).unwrap();
        assert_eq!(atoms1, atoms2);
    }

    proptest! {
        #[test]
        fn parseval_at_truncation(seed in 0u64..1000) {
            use rand::Rng;
            let theta = ThetaSequence::symmetric();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut f = ChaosVector::zero();
            for bits in 0u64..64 {
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                f.set_coeff(GammaIndex::from_bits(bits), c);
            }
            let full = CylinderSet::full(5).unwrap();
            let cache_sum: f64 = full
                .atoms(&theta)
                .unwrap()
                .map(|a| a.prob() * eval_chaos(&f, &a, &theta).unwrap().norm_sqr())
                .sum();
            let coeff_sum: f64 = f.iter().map(|(_, c)| c.norm_sqr()).sum();
            prop_assert!((cache_sum - coeff_sum).abs() <= PARSEVAL_REL * coeff_sum.max(1e-30));
        }
    }
}
