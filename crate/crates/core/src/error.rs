use crate::gamma::GammaIndex;
use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coordinate {0} exceeds the maximum supported coordinate 63")]
    CoordinateOutOfRange(u32),

    #[error("truncation level {0} exceeds the maximum supported level 63")]
    LevelOutOfRange(u32),

    #[error("truncation level {0} is too large to materialize ({1} indices)")]
    TruncationTooLarge(u32, u128),

    #[error("series exponent r = {0} must be greater than 1")]
    SeriesExponent(f64),

    #[error("theta value {value} at coordinate {index} lies outside the open interval (0, 1)")]
    ThetaRange { index: usize, value: f64 },

    #[error("theta sequence does not provide a value for coordinate {0}")]
    ThetaCoverage(u32),

    #[error("atom index {index} is out of range for level {level}")]
    AtomIndex { level: u32, index: u64 },

    #[error("coordinate {coordinate} exceeds the atom/cylinder level {level}")]
    LevelEscape { coordinate: u32, level: u32 },

    #[error(
        "support coordinate {coordinate} escapes the materialized truncation of level {level}"
    )]
    SupportEscape { coordinate: u32, level: u32 },

    #[error("operation requires the symmetric parameter sequence")]
    NonSymmetricTheta,

    #[error("levels differ: {0} vs {1}")]
    LevelMismatch(u32, u32),

    #[error("cylinder level {got} is too shallow; at least {needed} is required here")]
    InsufficientCylinderLevel { needed: u32, got: u32 },

    #[error("partition members {0} and {1} overlap")]
    OverlappingPartition(usize, usize),

    #[error("p grid must be nonempty and strictly ascending")]
    InvalidGrid,

    #[error("q = {q} must exceed p + 1/2 = {min_q}")]
    RegularityExponent { q: f64, min_q: f64 },

    #[error(
        "power iteration did not converge after {iterations} iterations \
         (last estimate {estimate:.6e}, residual {residual:.3e})"
    )]
    NonConvergence {
        iterations: u32,
        estimate: f64,
        residual: f64,
    },

    #[error(
        "eigenvalue sweep did not converge after {sweeps} sweeps (off-diagonal norm {off:.3e})"
    )]
    EigenNonConvergence { sweeps: u32, off: f64 },

    #[error(
        "growth certificate violated at sigma={sigma}, tau={tau}{}: |value| = {actual:.6e} > bound {bound:.6e}",
        .sequence_index.map(|n| format!(", sequence index {n}")).unwrap_or_default()
    )]
    CertificateViolation {
        sigma: GammaIndex,
        tau: GammaIndex,
        actual: f64,
        bound: f64,
        sequence_index: Option<usize>,
    },

    #[error("quadratic form value is not real (imaginary part {0:.3e})")]
    NonRealForm(f64),

    #[error("the functional sequence is empty")]
    EmptySequence,

    #[error("kernel value length {got} does not match the {expected} indices of the level")]
    ValueLength { expected: usize, got: usize },

    #[error("{0}")]
    Invalid(String),
}
