//! Every tolerance used by the verification suites, in one place.
//!
//! Identities certified by exact atom enumeration are held to tighter
//! thresholds than composed linear-algebra chains, whose rounding grows
//! with the number of floating-point operations involved.

/// Identities that reduce to finite sums of exactly representable products
/// (atom enumeration, entrywise kernel identities).
pub const ENUMERATION_EXACT: f64 = 1e-12;

/// Composed linear-algebra identities (norm chains, operator bounds).
pub const COMPOSED_LINEAR: f64 = 1e-9;

/// Projection-matrix checks: Hermitian symmetry, idempotence,
/// additivity and multiplicativity of event matrices.
pub const PROJECTION: f64 = 1e-10;

/// Most negative eigenvalue a positive semidefinite form matrix may show.
pub const PSD_FLOOR: f64 = 1e-10;

/// Pairing bilinearity, which is a rearrangement of the same products.
pub const PAIR_BILINEARITY: f64 = 1e-14;

/// Agreement between the density route and the direct symmetric-difference
/// route to the same kernel; the two compute identical expressions.
pub const KERNEL_SHORTCUT: f64 = 1e-15;

/// Relative tolerance of the weight-series factorization identity.
pub const WEIGHT_FACTORIZATION_REL: f64 = 1e-12;

/// Relative tolerance on the Parseval identity at truncation.
pub const PARSEVAL_REL: f64 = 1e-10;

/// Atom probabilities of one level must sum to 1 within this.
pub const ATOM_PROB_SUM: f64 = 1e-12;

/// Integrating the same event at two consecutive levels.
pub const TOWER: f64 = 1e-12;

/// Monte Carlo agreement band, in units of the standard error.
pub const MC_SIGMA: f64 = 4.0;

/// Fraction of randomized Monte Carlo cases that must fall in the band.
pub const MC_PASS_FRACTION: f64 = 0.99;

/// Power iteration: relative change of the eigenvalue estimate that stops
/// the iteration, and the iteration cap.
pub const POWER_ITER_REL: f64 = 1e-12;
pub const POWER_ITER_CAP: u32 = 10_000;

/// Rank-one tightness witness: relative gap between the operator norm and
/// the bound it is supposed to saturate.
pub const TIGHTNESS_REL: f64 = 1e-9;

/// Residual sequence of the convergence harness: final value and the
/// allowed wobble of n * r_n around a constant.
pub const CONVERGENCE_FINAL: f64 = 1e-8;
pub const CONVERGENCE_CONST: f64 = 1e-9;

/// The value below which the imaginary part of a nominally real quadratic
/// form is considered rounding.
pub const REAL_FORM_IMAG: f64 = 1e-10;

/// Slack used when comparing two floating-point constants for the
/// certificate objective (values within this relative band tie).
pub const CERTIFICATE_TIE_REL: f64 = 1e-12;
