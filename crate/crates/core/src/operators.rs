//! Operators from test functionals to generalized functionals, represented
//! by their kernels on a truncated index square: construction, application,
//! growth certificates, scaled operator norms by power iteration, and the
//! regularity bound that ties the norm to the weight series.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::chaos::{ChaosVector, GeneralizedFunctional, GrowthCertificate};
use crate::error::Error;
use crate::gamma::{log_weight_table, weight_series_sum, GammaIndex, TruncationLevel};
use crate::linalg::{vec_norm, CMatrix};
use crate::tolerances::{CERTIFICATE_TIE_REL, POWER_ITER_CAP, POWER_ITER_REL};
use crate::Result;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Kernels are dense up to this level and map-backed above it; the
/// verification suites never need more than level 10.
pub const MAX_DENSE_LEVEL: u32 = 12;

/// Default exponent grid for growth certificates.
pub const DEFAULT_P_GRID: [f64; 6] = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0];

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    Dense { dim: usize, data: Vec<Complex64> },
    Sparse(BTreeMap<(u64, u64), Complex64>),
}

/// A kernel on the index square of a truncation: entry `(sigma, tau)` is
/// the matrix element of the operator between the corresponding basis
/// functionals.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel2D {
    level: TruncationLevel,
    storage: Storage,
    certificate: Option<GrowthCertificate>,
}

impl Kernel2D {
    pub fn zeros(level: TruncationLevel) -> Result<Self> {
        let storage = if level.n() <= MAX_DENSE_LEVEL {
            let dim = level.dim()?;
            Storage::Dense {
                dim,
                data: vec![ZERO; dim * dim],
            }
        } else {
            Storage::Sparse(BTreeMap::new())
        };
        Ok(Self {
            level,
            storage,
            certificate: None,
        })
    }

    /// Dense construction from an entry function, filled row-parallel.
    pub fn from_fn<F: Fn(GammaIndex, GammaIndex) -> Complex64 + Sync>(
        level: TruncationLevel,
        f: F,
    ) -> Result<Self> {
        if level.n() > MAX_DENSE_LEVEL {
            return Err(Error::TruncationTooLarge(level.n(), level.cardinality()));
        }
        let dim = level.dim()?;
        let mut data = vec![ZERO; dim * dim];
        data.par_chunks_mut(dim).enumerate().for_each(|(s, row)| {
            let sigma = GammaIndex::from_bits(s as u64);
            for (t, slot) in row.iter_mut().enumerate() {
                *slot = f(sigma, GammaIndex::from_bits(t as u64));
            }
        });
        Ok(Self {
            level,
            storage: Storage::Dense { dim, data },
            certificate: None,
        })
    }

    pub fn identity(level: TruncationLevel) -> Result<Self> {
        let mut k = Self::zeros(level)?;
        let end = level.bit_mask();
        for bits in 0..=end {
            let sigma = GammaIndex::from_bits(bits);
            k.set(sigma, sigma, Complex64::new(1.0, 0.0))?;
            if bits == end {
                break;
            }
        }
        Ok(k)
    }

    pub fn level(&self) -> TruncationLevel {
        self.level
    }

    pub fn certificate(&self) -> Option<GrowthCertificate> {
        self.certificate
    }

    fn check_pair(&self, sigma: GammaIndex, tau: GammaIndex) -> Result<()> {
        self.level.check_support(sigma)?;
        self.level.check_support(tau)
    }

    pub fn entry(&self, sigma: GammaIndex, tau: GammaIndex) -> Result<Complex64> {
        self.check_pair(sigma, tau)?;
        Ok(match &self.storage {
            Storage::Dense { dim, data } => data[sigma.bits() as usize * dim + tau.bits() as usize],
            Storage::Sparse(map) => map
                .get(&(sigma.bits(), tau.bits()))
                .copied()
                .unwrap_or(ZERO),
        })
    }

    pub fn set(&mut self, sigma: GammaIndex, tau: GammaIndex, v: Complex64) -> Result<()> {
        self.check_pair(sigma, tau)?;
        self.certificate = None;
        match &mut self.storage {
            Storage::Dense { dim, data } => {
                data[sigma.bits() as usize * *dim + tau.bits() as usize] = v;
            }
            Storage::Sparse(map) => {
                if v == ZERO {
                    map.remove(&(sigma.bits(), tau.bits()));
                } else {
                    map.insert((sigma.bits(), tau.bits()), v);
                }
            }
        }
        Ok(())
    }

    /// Materialized entries in canonical order. Dense kernels yield every
    /// pair (zeros included), sparse kernels yield the stored pairs.
    pub fn entries(&self) -> Box<dyn Iterator<Item = (GammaIndex, GammaIndex, Complex64)> + '_> {
        match &self.storage {
            Storage::Dense { dim, data } => {
                let dim = *dim;
                Box::new(data.iter().enumerate().map(move |(i, v)| {
                    (
                        GammaIndex::from_bits((i / dim) as u64),
                        GammaIndex::from_bits((i % dim) as u64),
                        *v,
                    )
                }))
            }
            Storage::Sparse(map) => Box::new(
                map.iter()
                    .map(|(&(s, t), &v)| (GammaIndex::from_bits(s), GammaIndex::from_bits(t), v)),
            ),
        }
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        let storage = match &self.storage {
            Storage::Dense { dim, data } => Storage::Dense {
                dim: *dim,
                data: data.iter().map(|v| alpha * v).collect(),
            },
            Storage::Sparse(map) => {
                Storage::Sparse(map.iter().map(|(&k, &v)| (k, alpha * v)).collect())
            }
        };
        Self {
            level: self.level,
            storage,
            certificate: None,
        }
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level.n(), other.level.n()));
        }
        let storage = match (&self.storage, &other.storage) {
            (Storage::Dense { dim, data }, Storage::Dense { data: d2, .. }) => Storage::Dense {
                dim: *dim,
                data: data.iter().zip(d2).map(|(a, b)| a + b).collect(),
            },
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                let mut out = a.clone();
                for (&k, &v) in b {
                    let slot = out.entry(k).or_insert(ZERO);
                    *slot += v;
                    if *slot == ZERO {
                        out.remove(&k);
                    }
                }
                Storage::Sparse(out)
            }
            _ => unreachable!("storage kind is a function of the level"),
        };
        Ok(Self {
            level: self.level,
            storage,
            certificate: None,
        })
    }

    /// Largest entrywise difference, with the witness pair.
    pub fn max_abs_diff(&self, other: &Self) -> Result<(f64, GammaIndex, GammaIndex)> {
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level.n(), other.level.n()));
        }
        let mut worst = (0.0f64, GammaIndex::EMPTY, GammaIndex::EMPTY);
        match (&self.storage, &other.storage) {
            (Storage::Dense { dim, data }, Storage::Dense { data: d2, .. }) => {
                for (i, (a, b)) in data.iter().zip(d2).enumerate() {
                    let d = (a - b).norm();
                    if d > worst.0 {
                        worst = (
                            d,
                            GammaIndex::from_bits((i / dim) as u64),
                            GammaIndex::from_bits((i % dim) as u64),
                        );
                    }
                }
            }
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                let keys: std::collections::BTreeSet<(u64, u64)> =
                    a.keys().chain(b.keys()).copied().collect();
                for k in keys {
                    let d = (a.get(&k).copied().unwrap_or(ZERO)
                        - b.get(&k).copied().unwrap_or(ZERO))
                    .norm();
                    if d > worst.0 {
                        worst = (d, GammaIndex::from_bits(k.0), GammaIndex::from_bits(k.1));
                    }
                }
            }
            _ => unreachable!("storage kind is a function of the level"),
        }
        Ok(worst)
    }

    /// Applies the operator to a test functional: the resulting transform
    /// at `tau` is the coefficient sum over the support.
    pub fn apply(&self, xi: &ChaosVector) -> Result<GeneralizedFunctional> {
        for sigma in xi.support() {
            self.level.check_support(sigma)?;
        }
        let dim = self.level.dim()?;
        let mut out = vec![ZERO; dim];
        match &self.storage {
            Storage::Dense { data, .. } => {
                for (sigma, c) in xi.iter() {
                    let row = &data[sigma.bits() as usize * dim..(sigma.bits() as usize + 1) * dim];
                    for (t, k) in row.iter().enumerate() {
                        out[t] += c * k;
                    }
                }
            }
            Storage::Sparse(map) => {
                for (sigma, c) in xi.iter() {
                    let lo = (sigma.bits(), 0u64);
                    let hi = (sigma.bits(), u64::MAX);
                    for (&(_, t), &k) in map.range(lo..=hi) {
                        out[t as usize] += c * k;
                    }
                }
            }
        }
        GeneralizedFunctional::from_values(self.level, out)
    }

    /// Smallest certificate constant at each grid exponent.
    pub fn growth_table(&self, p_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        if p_grid.is_empty() || p_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid);
        }
        let logs = log_weight_table(self.level)?;
        let mut table = Vec::with_capacity(p_grid.len());
        for &p in p_grid {
            let mut c_min = 0.0f64;
            match &self.storage {
                Storage::Dense { dim, data } => {
                    let w: Vec<f64> = logs.iter().map(|lw| (-p * lw).exp()).collect();
                    for s in 0..*dim {
                        let row = &data[s * dim..(s + 1) * dim];
                        for (t, v) in row.iter().enumerate() {
                            let c = v.norm() * w[s] * w[t];
                            if c > c_min {
                                c_min = c;
                            }
                        }
                    }
                }
                Storage::Sparse(map) => {
                    for (&(s, t), v) in map {
                        let lws = crate::gamma::lambda_log(GammaIndex::from_bits(s)).value();
                        let lwt = crate::gamma::lambda_log(GammaIndex::from_bits(t)).value();
                        let c = v.norm() * (-p * (lws + lwt)).exp();
                        if c > c_min {
                            c_min = c;
                        }
                    }
                }
            }
            table.push((p, c_min));
        }
        Ok(table)
    }

    /// Certificate with the smallest constant over the grid; exponent ties
    /// (constants within a relative band) resolve to the smallest exponent.
    pub fn check_growth(&self, p_grid: &[f64]) -> Result<GrowthCertificate> {
        let table = self.growth_table(p_grid)?;
        let best_c = table.iter().map(|&(_, c)| c).fold(f64::INFINITY, f64::min);
        let tie = best_c * CERTIFICATE_TIE_REL;
        let (p, c) = table
            .iter()
            .copied()
            .find(|&(_, c)| c <= best_c + tie)
            .expect("grid is nonempty");
        Ok(GrowthCertificate::new(c, p))
    }

    /// Attaches a two-index certificate after checking every materialized
    /// entry against it.
    pub fn with_certificate(mut self, cert: GrowthCertificate) -> Result<Self> {
        self.validate_certificate(&cert, None)?;
        self.certificate = Some(cert);
        Ok(self)
    }

    pub(crate) fn validate_certificate(
        &self,
        cert: &GrowthCertificate,
        sequence_index: Option<usize>,
    ) -> Result<()> {
        let logs = log_weight_table(self.level)?;
        for (sigma, tau, v) in self.entries() {
            let bound = cert.bound2(logs[sigma.bits() as usize], logs[tau.bits() as usize]);
            if v.norm() > bound {
                return Err(Error::CertificateViolation {
                    sigma,
                    tau,
                    actual: v.norm(),
                    bound,
                    sequence_index,
                });
            }
        }
        Ok(())
    }

    /// The scaled matrix whose largest singular value is the operator norm
    /// at grading `q`: row `tau`, column `sigma`, entries damped by
    /// `lambda^(-q)` on both sides.
    pub fn scaled_matrix(&self, q: f64) -> Result<CMatrix> {
        let dim = self.level.dim()?;
        let logs = log_weight_table(self.level)?;
        let w: Vec<f64> = logs.iter().map(|lw| (-q * lw).exp()).collect();
        let mut m = CMatrix::zeros(dim);
        for (sigma, tau, v) in self.entries() {
            let s = sigma.bits() as usize;
            let t = tau.bits() as usize;
            m.set(t, s, v * (w[t] * w[s]));
        }
        Ok(m)
    }

    /// Operator norm at grading `q`: the largest singular value of the
    /// scaled matrix, by power iteration on its Gram operator with the
    /// deterministic all-ones start.
    pub fn op_norm(&self, q: f64) -> Result<OpNormEstimate> {
        let m = self.scaled_matrix(q)?;
        power_iteration_top_singular(&m)
    }
}

/// Converged power-iteration result.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OpNormEstimate {
    pub value: f64,
    pub iterations: u32,
    /// `||G v - lambda v||` at the accepted iterate, `G` the Gram operator.
    pub residual: f64,
}

fn power_iteration_top_singular(m: &CMatrix) -> Result<OpNormEstimate> {
    let dim = m.dim();
    if dim == 0 {
        return Ok(OpNormEstimate {
            value: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    let scale = 1.0 / (dim as f64).sqrt();
    let mut v: Vec<Complex64> = vec![Complex64::new(scale, 0.0); dim];
    let mut prev = f64::INFINITY;
    for it in 1..=POWER_ITER_CAP {
        let w = m.matvec(&v);
        let lambda = w.iter().map(|x| x.norm_sqr()).sum::<f64>();
        if lambda == 0.0 {
            return Ok(OpNormEstimate {
                value: 0.0,
                iterations: it,
                residual: 0.0,
            });
        }
        let g = m.adjoint_matvec(&w);
        if (lambda - prev).abs() <= POWER_ITER_REL * lambda {
            let residual = {
                let r: Vec<Complex64> = g.iter().zip(&v).map(|(gi, vi)| gi - lambda * vi).collect();
                vec_norm(&r)
            };
            return Ok(OpNormEstimate {
                value: lambda.sqrt(),
                iterations: it,
                residual,
            });
        }
        prev = lambda;
        let n = vec_norm(&g);
        for (vi, gi) in v.iter_mut().zip(&g) {
            *vi = gi / n;
        }
    }
    let residual = {
        let w = m.matvec(&v);
        let lambda = w.iter().map(|x| x.norm_sqr()).sum::<f64>();
        let g = m.adjoint_matvec(&w);
        let r: Vec<Complex64> = g.iter().zip(&v).map(|(gi, vi)| gi - lambda * vi).collect();
        vec_norm(&r)
    };
    Err(Error::NonConvergence {
        iterations: POWER_ITER_CAP,
        estimate: prev.sqrt(),
        residual,
    })
}

/// Norm bound from a growth certificate: the constant times the truncated
/// weight series at exponent `2(q - p)`. Requires `q > p + 1/2`.
pub fn regularity_bound(cert: &GrowthCertificate, q: f64, level: TruncationLevel) -> Result<f64> {
    if q <= cert.p + 0.5 {
        return Err(Error::RegularityExponent {
            q,
            min_q: cert.p + 0.5,
        });
    }
    Ok(cert.c * weight_series_sum(2.0 * (q - cert.p), level)?)
}

/// Outcome of checking the operator norm against its certificate bound.
#[derive(Clone, Debug, Serialize)]
pub struct RegularityCheck {
    pub certificate: GrowthCertificate,
    pub op_norm: OpNormEstimate,
    /// Constant times the truncated weight series.
    pub bound: f64,
    /// Constant times the certified envelope of the full weight series;
    /// dominates `bound` and does not depend on the truncation.
    pub full_series_bound: f64,
    pub passed: bool,
    /// `bound - op_norm` (negative means violation).
    pub slack: f64,
}

/// Checks the norm bound for a kernel at grading `q`, deriving a
/// certificate from the default grid when none is attached.
pub fn verify_regularity(kernel: &Kernel2D, q: f64) -> Result<RegularityCheck> {
    let certificate = match kernel.certificate() {
        Some(c) => c,
        None => kernel.check_growth(&DEFAULT_P_GRID)?,
    };
    let bound = regularity_bound(&certificate, q, kernel.level())?;
    let full_series_bound =
        certificate.c * crate::gamma::weight_series_envelope(2.0 * (q - certificate.p))?;
    let op_norm = kernel.op_norm(q)?;
    let slack = bound - op_norm.value;
    Ok(RegularityCheck {
        certificate,
        op_norm,
        bound,
        full_series_bound,
        passed: op_norm.value <= bound * (1.0 + 1e-9),
        slack,
    })
}

impl Serialize for Kernel2D {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<(u64, u64, f64, f64)> = self
            .entries()
            .filter(|(_, _, v)| *v != ZERO)
            .map(|(s, t, v)| (s.bits(), t.bits(), v.re, v.im))
            .collect();
        let mut s = serializer.serialize_struct("Kernel2D", 3)?;
        s.serialize_field("level", &self.level.n())?;
        s.serialize_field("entries", &entries)?;
        s.serialize_field("certificate", &self.certificate)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for Kernel2D {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            level: u32,
            entries: Vec<(u64, u64, f64, f64)>,
            #[serde(default)]
            certificate: Option<GrowthCertificate>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let level = TruncationLevel::new(raw.level).map_err(de::Error::custom)?;
        let mut k = Kernel2D::zeros(level).map_err(de::Error::custom)?;
        for (s, t, re, im) in raw.entries {
            k.set(
                GammaIndex::from_bits(s),
                GammaIndex::from_bits(t),
                Complex64::new(re, im),
            )
            .map_err(de::Error::custom)?;
        }
        match raw.certificate {
            Some(c) => k.with_certificate(c).map_err(de::Error::custom),
            None => Ok(k),
        }
    }
}
