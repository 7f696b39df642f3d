//! Seeded random fixtures shared by the verification suites and tests.
//! Draw order is fixed, so a seed pins every fixture exactly.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chaos::{mult_symmetric, ChaosVector, GeneralizedFunctional};
use crate::gamma::{enumerate_gamma_n, log_weight_table, GammaIndex, TruncationLevel};
use crate::operators::Kernel2D;
use crate::space::{CylinderSet, ThetaSequence};
use crate::Result;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_box(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Uniform draw from the closed unit disk.
pub fn complex_disk(rng: &mut ChaCha8Rng) -> Complex64 {
    let radius = rng.gen::<f64>().sqrt();
    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(radius, angle)
}

/// Dense random test functional on the truncation.
pub fn random_chaos_vector(level: TruncationLevel, rng: &mut ChaCha8Rng) -> ChaosVector {
    let mut xi = ChaosVector::zero();
    for sigma in enumerate_gamma_n(level) {
        xi.set_coeff(sigma, complex_box(rng));
    }
    xi
}

/// Random generalized functional materialized on the truncation.
pub fn random_functional(
    level: TruncationLevel,
    rng: &mut ChaCha8Rng,
) -> Result<GeneralizedFunctional> {
    let dim = level.dim()?;
    let values = (0..dim).map(|_| complex_box(rng)).collect();
    GeneralizedFunctional::from_values(level, values)
}

/// Random kernel bounded entrywise by `c * lambda^p * lambda^p`.
pub fn random_bounded_kernel(
    level: TruncationLevel,
    c: f64,
    p: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Kernel2D> {
    let logs = log_weight_table(level)?;
    let dim = level.dim()?;
    let mut k = Kernel2D::zeros(level)?;
    for s in 0..dim as u64 {
        for t in 0..dim as u64 {
            let bound = c * (p * (logs[s as usize] + logs[t as usize])).exp();
            let v = complex_disk(rng) * bound;
            k.set(GammaIndex::from_bits(s), GammaIndex::from_bits(t), v)?;
        }
    }
    Ok(k)
}

/// Random cylinder event: each atom of the level kept with probability 1/2.
pub fn random_cylinder(level: u32, rng: &mut ChaCha8Rng) -> Result<CylinderSet> {
    let mut e = CylinderSet::empty(level)?;
    for i in 0..(1u64 << (level + 1)) {
        if rng.gen::<bool>() {
            e.insert_atom(i)?;
        }
    }
    Ok(e)
}

/// Atomwise nonnegative test functional: the squared modulus of a random
/// vector, formed with the symmetric product.
pub fn random_nonneg_chaos(
    level: TruncationLevel,
    theta: &ThetaSequence,
    rng: &mut ChaCha8Rng,
) -> Result<ChaosVector> {
    let g = random_chaos_vector(level, rng);
    mult_symmetric(&g.conjugate(), &g, theta)
}
