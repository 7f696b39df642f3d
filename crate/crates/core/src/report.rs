//! Structured verification reports: every suite emits pass/fail checks
//! with residuals and witnesses, assembled deterministically so that a
//! fixed configuration and seed reproduce the bytes.

use serde::{Deserialize, Serialize};

/// Report schema identifier, bumped on breaking layout changes.
pub const REPORT_SCHEMA: &str = "bc-report/1";

/// One verified assertion.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Check {
    pub fn pass_fail(name: &str, passed: bool, witness: Option<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            residual: if passed { 0.0 } else { 1.0 },
            tolerance: 0.0,
            witness,
        }
    }
}

/// Report of one verification suite.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: String,
    pub suite: String,
    /// Identifier of the verified property; one entry of [`REGISTRY`].
    pub property: String,
    pub passed: bool,
    pub max_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Only populated on request; wall-clock time is not reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn new(
        suite: &str,
        property: &str,
        seed: Option<u64>,
        config: serde_json::Value,
        mut checks: Vec<Check>,
    ) -> Self {
        checks.sort_by(|a, b| {
            a.name.cmp(&b.name).then_with(|| {
                a.witness
                    .as_deref()
                    .unwrap_or("")
                    .cmp(b.witness.as_deref().unwrap_or(""))
            })
        });
        let worst = checks
            .iter()
            .max_by(|a, b| a.residual.total_cmp(&b.residual));
        let (max_residual, witness) = match worst {
            Some(c) => (c.residual, c.witness.clone()),
            None => (0.0, None),
        };
        Self {
            schema: REPORT_SCHEMA.to_string(),
            suite: suite.to_string(),
            property: property.to_string(),
            passed: checks.iter().all(|c| c.passed),
            max_residual,
            witness,
            seed,
            config,
            note: None,
            timing_ms: None,
            checks,
        }
    }

    pub fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.to_string());
        self
    }
}

/// Report of a whole verification run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

impl RunReport {
    pub fn new(seed: u64, mut suites: Vec<SuiteReport>) -> Self {
        suites.sort_by(|a, b| a.suite.cmp(&b.suite));
        Self {
            schema: REPORT_SCHEMA.to_string(),
            seed,
            passed: suites.iter().all(|s| s.passed),
            suites,
        }
    }
}

/// Verified property behind one suite.
#[derive(Clone, Copy, Debug)]
pub struct PropertyInfo {
    pub suite: &'static str,
    pub property: &'static str,
    pub statement: &'static str,
}

/// Suite-to-property registry; the documentation table is generated from
/// this same list.
pub const REGISTRY: &[PropertyInfo] = &[
    PropertyInfo {
        suite: "weights",
        property: "weight-series-summability",
        statement: "the truncated weight series factors over coordinates and stays below the certified envelope",
    },
    PropertyInfo {
        suite: "orthonormality",
        property: "basis-orthonormality",
        statement: "the product basis is orthonormal under exact enumeration, with the Parseval identity at truncation",
    },
    PropertyInfo {
        suite: "mc",
        property: "monte-carlo-consistency",
        statement: "seeded Monte Carlo estimates agree with exact enumeration within the sampling band",
    },
    PropertyInfo {
        suite: "axioms",
        property: "spectral-measure-axioms",
        statement: "event matrices are projections, add over disjoint partitions, multiply on intersections, and send the full event to the identity",
    },
    PropertyInfo {
        suite: "smoothness",
        property: "density-identity",
        statement: "every matrix element of the canonical measure is the exact integral of its density, which is positive semidefinite pointwise",
    },
    PropertyInfo {
        suite: "operators",
        property: "operator-norm-bound",
        statement: "certified kernels obey the norm bound from the weight series, saturated by the rank-one weight kernel",
    },
    PropertyInfo {
        suite: "linearity",
        property: "integral-linearity",
        statement: "the spectral integral is linear in the functional, entrywise",
    },
    PropertyInfo {
        suite: "positivity",
        property: "integral-positivity",
        statement: "positive integrands yield nonnegative quadratic forms, and a signed integrand admits a negative witness",
    },
    PropertyInfo {
        suite: "factorization",
        property: "integral-factorization",
        statement: "integration against the canonical measure turns convolution of functionals into entrywise products of kernels",
    },
    PropertyInfo {
        suite: "regularity",
        property: "product-regularity-chains",
        statement: "Wick and convolution products satisfy their dual-norm chains and the resulting integrals their norm bounds",
    },
    PropertyInfo {
        suite: "convergence",
        property: "integral-convergence",
        statement: "uniformly certified sequences of functionals yield integrals converging on every test functional",
    },
    PropertyInfo {
        suite: "consistency",
        property: "multiplication-consistency",
        statement: "the canonical integral of a bounded multiplier matches the exact multiplication operator",
    },
];

pub fn property_for_suite(suite: &str) -> Option<&'static PropertyInfo> {
    REGISTRY.iter().find(|p| p.suite == suite)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_one_to_one() {
        let mut suites: Vec<&str> = REGISTRY.iter().map(|p| p.suite).collect();
        let mut props: Vec<&str> = REGISTRY.iter().map(|p| p.property).collect();
        suites.sort_unstable();
        props.sort_unstable();
        suites.dedup();
        props.dedup();
        assert_eq!(suites.len(), REGISTRY.len());
        assert_eq!(props.len(), REGISTRY.len());
    }

    #[test]
    fn report_aggregates_worst_check() {
        let checks = vec![
            Check {
                name: "a".into(),
                passed: true,
                residual: 1e-14,
                tolerance: 1e-12,
                witness: None,
            },
            Check {
                name: "b".into(),
                passed: false,
                residual: 1e-3,
                tolerance: 1e-12,
                witness: Some("pair (1, 2)".into()),
            },
        ];
        let r = SuiteReport::new(
            "axioms",
            "spectral-measure-axioms",
            Some(7),
            serde_json::json!({}),
            checks,
        );
        assert!(!r.passed);
        assert_eq!(r.max_residual, 1e-3);
        assert_eq!(r.witness.as_deref(), Some("pair (1, 2)"));
    }

    #[test]
    fn serialization_is_stable() {
        let r = SuiteReport::new(
            "weights",
            "weight-series-summability",
            None,
            serde_json::json!({"level": 20}),
            vec![],
        );
        let a = serde_json::to_string(&r).unwrap();
        let b = serde_json::to_string(&r).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("bc-report/1"));
    }
}
