//! Spectral measures on the finite cylinder algebra: the projection-valued
//! axioms checked on partitions, the canonical multiplication-by-indicator
//! measure, its densities, and positivity of the density form.

use num_complex::Complex64;

use crate::chaos::ChaosVector;
use crate::error::Error;
use crate::gamma::{GammaIndex, TruncationLevel};
use crate::linalg::{hermitian_eigenvalues, CMatrix};
use crate::report::Check;
use crate::space::{eval_chaos, integrate_cylinder, Atom, CylinderSet, ThetaSequence};
use crate::tolerances::{ENUMERATION_EXACT, PROJECTION, PSD_FLOOR};
use crate::Result;

/// A spectral measure presented through its matrix elements on a
/// truncation: entry `(sigma, tau)` of `matrix` is the inner product of
/// the projected basis functional against the other basis functional.
pub trait SpectralMeasure {
    fn name(&self) -> &str;
    fn matrix(&self, event: &CylinderSet, level: TruncationLevel) -> Result<CMatrix>;
}

/// The canonical spectral measure: multiplication by the indicator of the
/// event. Defined here for the symmetric parameter sequence, where the
/// matrix elements reduce to integrals of single basis functionals.
pub struct CanonicalMeasure {
    theta: ThetaSequence,
}

impl CanonicalMeasure {
    pub fn new(theta: ThetaSequence) -> Result<Self> {
        theta.require_symmetric()?;
        Ok(Self { theta })
    }

    pub fn symmetric() -> Self {
        Self {
            theta: ThetaSequence::symmetric(),
        }
    }
}

impl SpectralMeasure for CanonicalMeasure {
    fn name(&self) -> &str {
        "pi0"
    }

    fn matrix(&self, event: &CylinderSet, level: TruncationLevel) -> Result<CMatrix> {
        pi0_matrix(event, level, &self.theta)
    }
}

/// Matrix of the canonical measure on an event: entry `(sigma, tau)` is
/// the integral of the basis functional of the symmetric difference over
/// the event. Always real symmetric; it is idempotent (a projection on
/// the truncated span) exactly when the event is measurable at the
/// truncation level — deeper events may be used after [`CylinderSet::lift_to`]
/// from their measurability level, and their matrix elements are still
/// exact for arbitrary events.
pub fn pi0_matrix(
    event: &CylinderSet,
    level: TruncationLevel,
    theta: &ThetaSequence,
) -> Result<CMatrix> {
    theta.require_symmetric()?;
    if event.level() < level.n() {
        return Err(Error::InsufficientCylinderLevel {
            needed: level.n(),
            got: event.level(),
        });
    }
    let dim = level.dim()?;
    // integrals depend only on the symmetric difference; compute them once
    let mut integrals = vec![0.0f64; dim];
    for atom in event.atoms(theta)? {
        let pattern = atom.index();
        let p = atom.prob();
        for (gamma, slot) in integrals.iter_mut().enumerate() {
            // minus sign at the coordinates whose pattern bit is unset
            let parity = (gamma as u64 & !pattern).count_ones() & 1;
            *slot += if parity == 1 { -p } else { p };
        }
    }
    Ok(CMatrix::from_fn(dim, |s, t| {
        Complex64::new(integrals[s ^ t], 0.0)
    }))
}

/// Numerical density of the canonical measure at an index pair: the basis
/// functional of the symmetric difference.
pub fn pi0_density(
    sigma: GammaIndex,
    tau: GammaIndex,
    theta: &ThetaSequence,
) -> Result<ChaosVector> {
    theta.require_symmetric()?;
    Ok(ChaosVector::basis(sigma.sym_diff(tau)))
}

/// A density table: one test functional per index pair, representing the
/// matrix elements of a spectral measure as integrals over events.
pub struct DensityTable {
    name: String,
    density: Box<dyn Fn(GammaIndex, GammaIndex) -> ChaosVector + Send + Sync>,
}

impl DensityTable {
    pub fn new<F>(name: &str, density: F) -> Self
    where
        F: Fn(GammaIndex, GammaIndex) -> ChaosVector + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            density: Box::new(density),
        }
    }

    /// Densities of the canonical measure.
    pub fn canonical() -> Self {
        Self::new("pi0", |sigma, tau| ChaosVector::basis(sigma.sym_diff(tau)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn density(&self, sigma: GammaIndex, tau: GammaIndex) -> ChaosVector {
        (self.density)(sigma, tau)
    }
}

fn check(name: &str, residual: f64, tolerance: f64, witness: Option<String>) -> Check {
    Check {
        name: name.to_string(),
        passed: residual <= tolerance,
        residual,
        tolerance,
        witness,
    }
}

/// Checks the projection-valued measure axioms on a disjoint partition:
/// every event matrix is an orthogonal projection, the matrices add up
/// across the partition, intersections multiply, and the full event maps
/// to the identity.
pub fn verify_axioms(
    measure: &dyn SpectralMeasure,
    partition: &[CylinderSet],
    level: TruncationLevel,
) -> Result<Vec<Check>> {
    for (i, a) in partition.iter().enumerate() {
        for (j, b) in partition.iter().enumerate().skip(i + 1) {
            if !a.is_disjoint(b)? {
                return Err(Error::OverlappingPartition(i, j));
            }
        }
    }
    let cylinder_level = partition
        .first()
        .map(CylinderSet::level)
        .ok_or(Error::EmptySequence)?;

    let matrices: Vec<CMatrix> = partition
        .iter()
        .map(|e| measure.matrix(e, level))
        .collect::<Result<_>>()?;

    let mut checks = Vec::new();

    let mut worst_herm = (0.0f64, 0usize);
    let mut worst_idem = (0.0f64, 0usize);
    for (i, m) in matrices.iter().enumerate() {
        let h = m.hermitian_residual();
        if h > worst_herm.0 {
            worst_herm = (h, i);
        }
        let d = m.idempotence_residual()?;
        if d > worst_idem.0 {
            worst_idem = (d, i);
        }
    }
    checks.push(check(
        "projection-hermitian",
        worst_herm.0,
        PROJECTION,
        Some(format!("event {}", worst_herm.1)),
    ));
    checks.push(check(
        "projection-idempotent",
        worst_idem.0,
        PROJECTION,
        Some(format!("event {}", worst_idem.1)),
    ));

    // additivity over the partition
    let union = partition
        .iter()
        .skip(1)
        .try_fold(partition[0].clone(), |acc, e| acc.union(e))?;
    let mut sum = CMatrix::zeros(level.dim()?);
    for m in &matrices {
        sum = sum.plus(m)?;
    }
    let additivity = sum.minus(&measure.matrix(&union, level)?)?.max_abs();
    checks.push(check("additivity", additivity, PROJECTION, None));

    // multiplicativity across all partition pairs
    let mut worst_mult = (0.0f64, 0usize, 0usize);
    for (i, (ei, mi)) in partition.iter().zip(&matrices).enumerate() {
        for (j, (ej, mj)) in partition.iter().zip(&matrices).enumerate() {
            let both = measure.matrix(&ei.intersect(ej)?, level)?;
            let r = mi.matmul(mj)?.minus(&both)?.max_abs();
            if r > worst_mult.0 {
                worst_mult = (r, i, j);
            }
        }
    }
    checks.push(check(
        "multiplicativity",
        worst_mult.0,
        PROJECTION,
        Some(format!("events ({}, {})", worst_mult.1, worst_mult.2)),
    ));

    // the full event maps to the identity
    let full = CylinderSet::full(cylinder_level)?;
    let identity_residual = measure
        .matrix(&full, level)?
        .minus(&CMatrix::identity(level.dim()?))?
        .max_abs();
    checks.push(check("identity", identity_residual, PROJECTION, None));

    Ok(checks)
}

/// Multiplicativity alone, over an arbitrary (not necessarily disjoint)
/// family of events of one level.
pub fn verify_multiplicativity(
    measure: &dyn SpectralMeasure,
    family: &[CylinderSet],
    level: TruncationLevel,
) -> Result<Check> {
    let mut worst = (0.0f64, 0usize, 0usize);
    let matrices: Vec<CMatrix> = family
        .iter()
        .map(|e| measure.matrix(e, level))
        .collect::<Result<_>>()?;
    for (i, (ei, mi)) in family.iter().zip(&matrices).enumerate() {
        for (j, (ej, mj)) in family.iter().zip(&matrices).enumerate() {
            let both = measure.matrix(&ei.intersect(ej)?, level)?;
            let r = mi.matmul(mj)?.minus(&both)?.max_abs();
            if r > worst.0 {
                worst = (r, i, j);
            }
        }
    }
    Ok(check(
        "multiplicativity",
        worst.0,
        PROJECTION,
        Some(format!("events ({}, {})", worst.1, worst.2)),
    ))
}

/// Checks the density identity: every matrix element of the measure equals
/// the exact integral of the table's density over the event, for every
/// single-atom event of the cylinder level.
pub fn verify_smoothness(
    measure: &dyn SpectralMeasure,
    table: &DensityTable,
    level: TruncationLevel,
    cylinder_level: u32,
    theta: &ThetaSequence,
) -> Result<Check> {
    if cylinder_level < level.n() {
        return Err(Error::InsufficientCylinderLevel {
            needed: level.n(),
            got: cylinder_level,
        });
    }
    let dim = level.dim()?;
    let mut worst = (0.0f64, String::new());
    for atom_index in 0..(1u64 << (cylinder_level + 1)) {
        let event = CylinderSet::from_atom_indices(cylinder_level, &[atom_index])?;
        let m = measure.matrix(&event, level)?;
        for s in 0..dim {
            for t in 0..dim {
                let sigma = GammaIndex::from_bits(s as u64);
                let tau = GammaIndex::from_bits(t as u64);
                let expected = integrate_cylinder(&table.density(sigma, tau), &event, theta)?;
                let r = (m.get(s, t) - expected).norm();
                if r > worst.0 {
                    worst = (r, format!("sigma={sigma}, tau={tau}, atom {atom_index}"));
                }
            }
        }
    }
    Ok(check(
        "density-identity",
        worst.0,
        ENUMERATION_EXACT,
        Some(worst.1),
    ))
}

/// Result of the pointwise positivity check of the density form.
#[derive(Clone, Debug, serde::Serialize)]
pub struct PsdCheck {
    pub dim: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub hermitian_residual: f64,
    pub passed: bool,
}

/// Builds the matrix of density values at one atom over the truncation and
/// checks it is positive semidefinite up to rounding.
pub fn density_form_psd(
    table: &DensityTable,
    atom: &Atom,
    level: TruncationLevel,
    theta: &ThetaSequence,
) -> Result<PsdCheck> {
    let dim = level.dim()?;
    let mut f = CMatrix::zeros(dim);
    for s in 0..dim {
        for t in 0..dim {
            let d = table.density(
                GammaIndex::from_bits(s as u64),
                GammaIndex::from_bits(t as u64),
            );
            f.set(s, t, eval_chaos(&d, atom, theta)?);
        }
    }
    let hermitian_residual = f.hermitian_residual();
    // feed the solver the Hermitian part; the deviation is reported anyway
    let sym = CMatrix::from_fn(dim, |r, c| (f.get(r, c) + f.get(c, r).conj()) * 0.5);
    let eigs = hermitian_eigenvalues(&sym)?;
    let min_eigenvalue = *eigs.first().expect("dim > 0");
    let max_eigenvalue = *eigs.last().expect("dim > 0");
    Ok(PsdCheck {
        dim,
        min_eigenvalue,
        max_eigenvalue,
        hermitian_residual,
        passed: min_eigenvalue >= -PSD_FLOOR && hermitian_residual <= PROJECTION,
    })
}
