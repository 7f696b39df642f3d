//! Chaos-coefficient calculus over the Bernoulli space at finite
//! truncation.
//!
//! The library realizes, on truncated index sets, the standard ladder of
//! spaces built from the product basis of a two-point product probability
//! space: test functionals as finitely supported coefficient maps,
//! generalized functionals as materialized coefficient transforms,
//! operators between them as kernels on an index square, spectral measures
//! on the finite cylinder algebra, and spectral integrals of generalized
//! functionals. Every structural identity the construction rests on is
//! checked by an executable verification suite ([`suites`]), with exact
//! atom enumeration as the ground truth wherever an integral is involved.
//!
//! Numbers are `f64`/`Complex64` throughout; the multiplicative index
//! weights are carried in log space so graded norms stay computable at
//! any exponent.

pub mod chaos;
pub mod error;
pub mod fixtures;
pub mod gamma;
pub mod integral;
pub mod linalg;
pub mod operators;
pub mod report;
pub mod space;
pub mod spectral;
pub mod suites;
pub mod tolerances;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;

pub use chaos::{ChaosVector, GeneralizedFunctional, GrowthCertificate};
pub use gamma::{GammaIndex, LogWeight, TruncationLevel};
pub use operators::Kernel2D;
pub use space::{Atom, CylinderSet, Sign, ThetaSequence};
pub use spectral::{CanonicalMeasure, DensityTable, SpectralMeasure};
