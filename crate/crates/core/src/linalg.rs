//! Small dense complex matrices sized by a truncation, with the handful of
//! operations the verification suites need: products, residual norms, a
//! Hermitian eigenvalue sweep, and matrix-vector products for the power
//! iteration.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Error;
use crate::Result;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Row-major square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn<F: Fn(usize, usize) -> Complex64>(dim: usize, f: F) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m.data[r * dim + c] = f(r, c);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Invalid(format!(
                "matrix dimensions differ: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..d {
                    out.data[r * d + c] += a * other.data[k * d + c];
                }
            }
        }
        Ok(out)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                let d = (self.get(r, c) - self.get(c, r).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest entry of `M*M - M`.
    pub fn idempotence_residual(&self) -> Result<f64> {
        Ok(self.matmul(self)?.minus(self)?.max_abs())
    }

    /// `M v`; rows are processed in parallel for large dimensions, each
    /// row's dot product staying sequential so results are reproducible.
    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let d = self.dim;
        let dot = |r: usize| -> Complex64 {
            let row = &self.data[r * d..(r + 1) * d];
            let mut acc = ZERO;
            for (a, x) in row.iter().zip(v) {
                acc += a * x;
            }
            acc
        };
        if d >= 256 {
            (0..d).into_par_iter().map(dot).collect()
        } else {
            (0..d).map(dot).collect()
        }
    }

    /// `M^H w` (adjoint action).
    pub fn adjoint_matvec(&self, w: &[Complex64]) -> Vec<Complex64> {
        let d = self.dim;
        let dot = |c: usize| -> Complex64 {
            let mut acc = ZERO;
            for (r, wr) in w.iter().enumerate() {
                acc += self.data[r * d + c].conj() * wr;
            }
            acc
        };
        if d >= 256 {
            (0..d).into_par_iter().map(dot).collect()
        } else {
            (0..d).map(dot).collect()
        }
    }
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn off_diag_sqr(a: &CMatrix) -> f64 {
    let d = a.dim();
    let mut s = 0.0;
    for r in 0..d {
        for c in 0..d {
            if r != c {
                s += a.get(r, c).norm_sqr();
            }
        }
    }
    s
}

/// Eigenvalues of a Hermitian matrix by cyclic two-sided rotation sweeps,
/// returned in ascending order. The caller is responsible for the matrix
/// being (numerically) Hermitian.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let d = m.dim();
    if d == 0 {
        return Ok(Vec::new());
    }
    let mut a = m.clone();
    let fro_sqr: f64 = a.data.iter().map(|v| v.norm_sqr()).sum();
    let stop = 1e-28 * fro_sqr.max(f64::MIN_POSITIVE);
    const MAX_SWEEPS: u32 = 60;

    for _sweep in 0..MAX_SWEEPS {
        if off_diag_sqr(&a) <= stop {
            let mut eigs: Vec<f64> = (0..d).map(|i| a.get(i, i).re).collect();
            eigs.sort_unstable_by(f64::total_cmp);
            return Ok(eigs);
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a.get(p, q);
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let u = apq / r;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau.abs() > 1e150 {
                    0.5 / tau
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // column update: A <- A J with J = [[c, s u], [-s conj(u), c]]
                for k in 0..d {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, akp * c - akq * s * u.conj());
                    a.set(k, q, akp * s * u + akq * c);
                }
                // row update: A <- J^H A
                for k in 0..d {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, apk * c - aqk * s * u);
                    a.set(q, k, apk * s * u.conj() + aqk * c);
                }
            }
        }
    }
    Err(Error::EigenNonConvergence {
        sweeps: MAX_SWEEPS,
        off: off_diag_sqr(&a).sqrt(),
    })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_symmetric_two_by_two() {
        let mut m = CMatrix::zeros(2);
        m.set(0, 0, c(2.0, 0.0));
        m.set(0, 1, c(1.0, 0.0));
        m.set(1, 0, c(1.0, 0.0));
        m.set(1, 1, c(3.0, 0.0));
        let eigs = hermitian_eigenvalues(&m).unwrap();
        let root = 5.0f64.sqrt();
        assert!((eigs[0] - (5.0 - root) / 2.0).abs() < 1e-12);
        assert!((eigs[1] - (5.0 + root) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn complex_hermitian_two_by_two() {
        let mut m = CMatrix::zeros(2);
        m.set(0, 0, c(2.0, 0.0));
        m.set(0, 1, c(0.0, 1.0));
        m.set(1, 0, c(0.0, -1.0));
        m.set(1, 1, c(2.0, 0.0));
        let eigs = hermitian_eigenvalues(&m).unwrap();
        assert!((eigs[0] - 1.0).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_outer_product() {
        // v v^H has eigenvalues {|v|^2, 0, ...}
        let v = [c(1.0, 0.5), c(-0.5, 0.0), c(0.0, 2.0)];
        let m = CMatrix::from_fn(3, |r, cc| v[r] * v[cc].conj());
        let eigs = hermitian_eigenvalues(&m).unwrap();
        let norm_sqr: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        assert!((eigs[2] - norm_sqr).abs() < 1e-12 * norm_sqr);
        assert!(eigs[0].abs() < 1e-12 && eigs[1].abs() < 1e-12);
    }

    #[test]
    fn trace_preserved_on_random_hermitian() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let d = 12;
        let mut m = CMatrix::zeros(d);
        for r in 0..d {
            m.set(r, r, c(rng.gen_range(-2.0..2.0), 0.0));
            for cc in (r + 1)..d {
                let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m.set(r, cc, v);
                m.set(cc, r, v.conj());
            }
        }
        let trace: f64 = (0..d).map(|i| m.get(i, i).re).sum();
        let eigs = hermitian_eigenvalues(&m).unwrap();
        let sum: f64 = eigs.iter().sum();
        assert!((trace - sum).abs() < 1e-10);
        // Frobenius norm is also preserved
        let fro: f64 = (0..d)
            .flat_map(|r| (0..d).map(move |cc| (r, cc)))
            .map(|(r, cc)| m.get(r, cc).norm_sqr())
            .sum();
        let eig_sqr: f64 = eigs.iter().map(|e| e * e).sum();
        assert!((fro - eig_sqr).abs() < 1e-9 * fro.max(1.0));
    }

    #[test]
    fn matvec_and_adjoint_agree_with_direct() {
        let m = CMatrix::from_fn(3, |r, cc| c(r as f64 - cc as f64, 0.3 * (r + cc) as f64));
        let v = vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 2.0)];
        let w = m.matvec(&v);
        for r in 0..3 {
            let mut acc = c(0.0, 0.0);
            for k in 0..3 {
                acc += m.get(r, k) * v[k];
            }
            assert!((w[r] - acc).norm() < 1e-15);
        }
        let u = m.adjoint_matvec(&w);
        for cc in 0..3 {
            let mut acc = c(0.0, 0.0);
            for r in 0..3 {
                acc += m.get(r, cc).conj() * w[r];
            }
            assert!((u[cc] - acc).norm() < 1e-15);
        }
    }

    #[test]
    fn identity_is_idempotent_projection() {
        let m = CMatrix::identity(5);
        assert_eq!(m.hermitian_residual(), 0.0);
        assert_eq!(m.idempotence_residual().unwrap(), 0.0);
    }
}
