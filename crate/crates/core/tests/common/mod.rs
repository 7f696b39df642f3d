//! Shared test oracles, kept independent of the library's own numerical
//! paths: a one-sided rotation SVD for singular values, and direct
//! re-computations of weights and integrals.

#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;

use bchaos::linalg::CMatrix;

/// All singular values of a square complex matrix by one-sided rotation
/// sweeps on its columns, descending. Independent of the power iteration
/// it is used to check.
pub fn svd_singular_values(m: &CMatrix) -> Vec<f64> {
    let n = m.dim();
    // columns[j][i] = m[i][j]
    let mut cols: Vec<Vec<Complex64>> = (0..n)
        .map(|j| (0..n).map(|i| m.get(i, j)).collect())
        .collect();

    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    app += cols[p][i].norm_sqr();
                    aqq += cols[q][i].norm_sqr();
                    apq += cols[p][i].conj() * cols[q][i];
                }
                let r = apq.norm();
                // classic orthogonality criterion for one-sided sweeps
                if r <= 1e-15 * (app * aqq).sqrt().max(f64::MIN_POSITIVE) {
                    continue;
                }
                rotated = true;
                let u = apq / r;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau.abs() > 1e150 {
                    0.5 / tau
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let vp = cols[p][i];
                    let vq = cols[q][i];
                    cols[p][i] = vp * c - vq * s * u.conj();
                    cols[q][i] = vp * s * u + vq * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_unstable_by(|a, b| b.total_cmp(a));
    sv
}

#[allow(dead_code)]
pub fn max_singular_value(m: &CMatrix) -> f64 {
    svd_singular_values(m).first().copied().unwrap_or(0.0)
}
