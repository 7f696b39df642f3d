//! Test functionals and generalized functionals as coefficient data: the
//! weighted norm ladder and its dual, the coefficient pairing, the Riesz
//! map, conjugation, and pointwise multiplication in the symmetric case.
//!
//! The pairing is bilinear in the coefficients; the inner product of the
//! base Hilbert space is conjugate linear in its first slot, and the Riesz
//! map carries that conjugation.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::gamma::{lambda_log, log_weight_table, GammaIndex, TruncationLevel};
use crate::space::ThetaSequence;
use crate::Result;

/// A finitely supported coefficient map: the test functional whose chaos
/// expansion has exactly these coefficients. Absent key means zero.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ChaosVector {
    coeffs: BTreeMap<GammaIndex, Complex64>,
}

impl ChaosVector {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The basis functional of one index (unit coefficient).
    pub fn basis(sigma: GammaIndex) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(sigma, Complex64::new(1.0, 0.0));
        Self { coeffs }
    }

    pub fn from_pairs<I: IntoIterator<Item = (GammaIndex, Complex64)>>(pairs: I) -> Self {
        let mut v = Self::zero();
        for (sigma, c) in pairs {
            v.add_to(sigma, c);
        }
        v
    }

    pub fn coeff(&self, sigma: GammaIndex) -> Complex64 {
        self.coeffs
            .get(&sigma)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Sets one coefficient; a zero value removes the key.
    pub fn set_coeff(&mut self, sigma: GammaIndex, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&sigma);
        } else {
            self.coeffs.insert(sigma, c);
        }
    }

    pub fn add_to(&mut self, sigma: GammaIndex, c: Complex64) {
        let v = self.coeff(sigma) + c;
        self.set_coeff(sigma, v);
    }

    pub fn support_size(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Support and coefficients in canonical index order.
    pub fn iter(&self) -> impl Iterator<Item = (GammaIndex, Complex64)> + '_ {
        self.coeffs.iter().map(|(s, c)| (*s, *c))
    }

    pub fn support(&self) -> impl Iterator<Item = GammaIndex> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn max_coordinate(&self) -> Option<u32> {
        self.coeffs.keys().filter_map(|s| s.max_coordinate()).max()
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        let mut out = Self::zero();
        for (s, c) in self.iter() {
            out.set_coeff(s, alpha * c);
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (s, c) in other.iter() {
            out.add_to(s, c);
        }
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Complex conjugation of the functional. The basis functionals are
    /// real valued, so this conjugates the coefficients.
    pub fn conjugate(&self) -> Self {
        let mut out = Self::zero();
        for (s, c) in self.iter() {
            out.set_coeff(s, c.conj());
        }
        out
    }

    /// Plain l2 norm of the coefficients.
    pub fn l2_norm(&self) -> f64 {
        self.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Graded norm: the weighted l2 norm with weights `lambda^p`.
    /// Computed in log space; extreme gradings may round to infinity,
    /// in which case `log_norm_p` still carries the finite logarithm.
    pub fn norm_p(&self, p: f64) -> f64 {
        match self.log_norm_p(p) {
            None => 0.0,
            Some(l) => l.exp(),
        }
    }

    /// Natural log of `norm_p`; `None` for the zero vector.
    pub fn log_norm_p(&self, p: f64) -> Option<f64> {
        log_weighted_l2(self.iter().filter_map(|(s, c)| {
            let n = c.norm_sqr();
            if n == 0.0 {
                None
            } else {
                Some(2.0 * p * lambda_log(s).value() + n.ln())
            }
        }))
    }
}

impl<'a> std::ops::Add for &'a ChaosVector {
    type Output = ChaosVector;
    fn add(self, rhs: &'a ChaosVector) -> ChaosVector {
        self.plus(rhs)
    }
}

impl<'a> std::ops::Sub for &'a ChaosVector {
    type Output = ChaosVector;
    fn sub(self, rhs: &'a ChaosVector) -> ChaosVector {
        self.minus(rhs)
    }
}

/// log of sqrt(sum of exp(t)) over the given exponents, by log-sum-exp.
fn log_weighted_l2<I: Iterator<Item = f64>>(terms: I) -> Option<f64> {
    let ts: Vec<f64> = terms.collect();
    if ts.is_empty() {
        return None;
    }
    let m = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = ts.iter().map(|t| (t - m).exp()).sum();
    Some(0.5 * (m + sum.ln()))
}

/// Pointwise product in the symmetric case, where the product of two basis
/// functionals is the basis functional of the symmetric difference.
pub fn mult_symmetric(
    a: &ChaosVector,
    b: &ChaosVector,
    theta: &ThetaSequence,
) -> Result<ChaosVector> {
    theta.require_symmetric()?;
    let mut out = ChaosVector::zero();
    for (sigma, ca) in a.iter() {
        for (tau, cb) in b.iter() {
            out.add_to(sigma.sym_diff(tau), ca * cb);
        }
    }
    Ok(out)
}

impl Serialize for ChaosVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let triples: Vec<(u64, f64, f64)> =
            self.iter().map(|(s, c)| (s.bits(), c.re, c.im)).collect();
        triples.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChaosVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let triples = Vec::<(u64, f64, f64)>::deserialize(deserializer)?;
        Ok(ChaosVector::from_pairs(triples.into_iter().map(
            |(bits, re, im)| (GammaIndex::from_bits(bits), Complex64::new(re, im)),
        )))
    }
}

/// A claimed entrywise growth bound `|value| <= C * lambda^p` (one-index
/// form) or `|value| <= C * lambda^p * lambda^p` (two-index form), checked
/// on the materialized domain when attached.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    #[serde(rename = "C")]
    pub c: f64,
    pub p: f64,
}

impl GrowthCertificate {
    pub fn new(c: f64, p: f64) -> Self {
        Self { c, p }
    }

    /// Bound for a single index with the given log weight.
    pub fn bound1(&self, log_weight: f64) -> f64 {
        self.c * (self.p * log_weight).exp()
    }

    /// Bound for an index pair with the given log weights.
    pub fn bound2(&self, log_weight_sigma: f64, log_weight_tau: f64) -> f64 {
        self.c * (self.p * (log_weight_sigma + log_weight_tau)).exp()
    }
}

/// A generalized functional materialized on one truncation: its
/// coefficient transform on every index of the truncation, plus an
/// optional growth certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedFunctional {
    level: TruncationLevel,
    values: Vec<Complex64>,
    certificate: Option<GrowthCertificate>,
}

impl GeneralizedFunctional {
    pub fn from_values(level: TruncationLevel, values: Vec<Complex64>) -> Result<Self> {
        let dim = level.dim()?;
        if values.len() != dim {
            return Err(Error::ValueLength {
                expected: dim,
                got: values.len(),
            });
        }
        Ok(Self {
            level,
            values,
            certificate: None,
        })
    }

    pub fn from_fn<F: FnMut(GammaIndex) -> Complex64>(
        level: TruncationLevel,
        mut f: F,
    ) -> Result<Self> {
        let dim = level.dim()?;
        let values = (0..dim)
            .map(|bits| f(GammaIndex::from_bits(bits as u64)))
            .collect();
        Self::from_values(level, values)
    }

    /// The functional whose transform is identically `c` on the truncation.
    pub fn constant(level: TruncationLevel, c: Complex64) -> Result<Self> {
        Self::from_fn(level, |_| c)
    }

    pub fn level(&self) -> TruncationLevel {
        self.level
    }

    /// Transform value at one index of the materialized truncation.
    pub fn fock(&self, sigma: GammaIndex) -> Result<Complex64> {
        self.level.check_support(sigma)?;
        Ok(self.values[sigma.bits() as usize])
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn certificate(&self) -> Option<GrowthCertificate> {
        self.certificate
    }

    /// Attaches a one-index growth certificate after checking it on every
    /// materialized value.
    pub fn with_certificate(mut self, cert: GrowthCertificate) -> Result<Self> {
        let logs = log_weight_table(self.level)?;
        for (bits, v) in self.values.iter().enumerate() {
            let bound = cert.bound1(logs[bits]);
            if v.norm() > bound {
                return Err(Error::CertificateViolation {
                    sigma: GammaIndex::from_bits(bits as u64),
                    tau: GammaIndex::EMPTY,
                    actual: v.norm(),
                    bound,
                    sequence_index: None,
                });
            }
        }
        self.certificate = Some(cert);
        Ok(self)
    }

    /// Truncated dual norm at grading `p`, over the materialized domain.
    pub fn dual_norm(&self, p: f64) -> f64 {
        match self.log_dual_norm(p) {
            None => 0.0,
            Some(l) => l.exp(),
        }
    }

    pub fn log_dual_norm(&self, p: f64) -> Option<f64> {
        let logs = log_weight_table(self.level).expect("level was validated on construction");
        log_weighted_l2(self.values.iter().enumerate().filter_map(|(bits, v)| {
            let n = v.norm_sqr();
            if n == 0.0 {
                None
            } else {
                Some(-2.0 * p * logs[bits] + n.ln())
            }
        }))
    }

    /// The pairing: the coefficient sum `sum_sigma transform(sigma) * c_sigma`.
    /// Bilinear in both arguments.
    pub fn pair(&self, xi: &ChaosVector) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for (sigma, c) in xi.iter() {
            total += self.fock(sigma)? * c;
        }
        Ok(total)
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self {
            level: self.level,
            values: self.values.iter().map(|v| alpha * v).collect(),
            certificate: None,
        }
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level.n(), other.level.n()));
        }
        Ok(Self {
            level: self.level,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            certificate: None,
        })
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.plus(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn linear_combination(
        alpha: Complex64,
        phi: &Self,
        beta: Complex64,
        psi: &Self,
    ) -> Result<Self> {
        phi.scaled(alpha).plus(&psi.scaled(beta))
    }
}

impl Serialize for GeneralizedFunctional {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let entries: Vec<(u64, f64, f64)> = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != Complex64::new(0.0, 0.0))
            .map(|(bits, v)| (bits as u64, v.re, v.im))
            .collect();
        let mut s = serializer.serialize_struct("GeneralizedFunctional", 3)?;
        s.serialize_field("level", &self.level.n())?;
        s.serialize_field("entries", &entries)?;
        s.serialize_field("certificate", &self.certificate)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for GeneralizedFunctional {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            level: u32,
            entries: Vec<(u64, f64, f64)>,
            #[serde(default)]
            certificate: Option<GrowthCertificate>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let level = TruncationLevel::new(raw.level).map_err(de::Error::custom)?;
        let dim = level.dim().map_err(de::Error::custom)?;
        let mut values = vec![Complex64::new(0.0, 0.0); dim];
        for (bits, re, im) in raw.entries {
            if bits as usize >= dim {
                return Err(de::Error::custom(format!(
                    "entry index {bits} escapes level {}",
                    raw.level
                )));
            }
            values[bits as usize] = Complex64::new(re, im);
        }
        let gf = GeneralizedFunctional::from_values(level, values).map_err(de::Error::custom)?;
        match raw.certificate {
            Some(c) => gf.with_certificate(c).map_err(de::Error::custom),
            None => Ok(gf),
        }
    }
}

/// The Riesz image of a test functional, materialized at the smallest
/// truncation covering the support: the transform is the conjugated
/// coefficient map.
pub fn riesz(eta: &ChaosVector) -> GeneralizedFunctional {
    let level = TruncationLevel::new(eta.max_coordinate().unwrap_or(0))
        .expect("support coordinates are below the cap");
    riesz_at(eta, level).expect("level covers the support")
}

/// The Riesz image materialized at an explicit truncation.
pub fn riesz_at(eta: &ChaosVector, level: TruncationLevel) -> Result<GeneralizedFunctional> {
    for sigma in eta.support() {
        level.check_support(sigma)?;
    }
    GeneralizedFunctional::from_fn(level, |sigma| eta.coeff(sigma).conj())
}
