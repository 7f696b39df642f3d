//! Spectral integrals of generalized functionals: kernel construction from
//! density tables, integrability certificates, linearity, positivity, the
//! convolution/Wick calculus with its factorization identity, regularity
//! chains, and a convergence harness for uniformly certified sequences.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chaos::{ChaosVector, GeneralizedFunctional, GrowthCertificate};
use crate::error::Error;
use crate::gamma::{enumerate_gamma_n, weight_series_sum, GammaIndex, TruncationLevel};
use crate::operators::Kernel2D;
use crate::report::Check;
use crate::space::{enumerate_atoms, eval_chaos, ThetaSequence};
use crate::tolerances::{
    CERTIFICATE_TIE_REL, ENUMERATION_EXACT, KERNEL_SHORTCUT, PSD_FLOOR, REAL_FORM_IMAG,
};
use crate::Result;

/// Where a spectral-integral kernel came from.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub phi: String,
    pub measure: String,
    pub level: u32,
}

/// A kernel produced by integrating a generalized functional against a
/// density table.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralIntegralOp {
    pub kernel: Kernel2D,
    pub provenance: Provenance,
}

/// Integrability claim for one functional against one measure.
#[derive(Clone, Debug, Serialize)]
pub struct IntegrabilityCertificate {
    #[serde(rename = "C")]
    pub c: f64,
    pub p: f64,
    pub measure_name: String,
}

/// Kernel of the spectral integral: entry `(sigma, tau)` is the pairing of
/// the functional against the table's density at that pair.
pub fn spectral_integral(
    phi: &GeneralizedFunctional,
    table: &crate::spectral::DensityTable,
    level: TruncationLevel,
) -> Result<SpectralIntegralOp> {
    let dim = level.dim()?;
    let mut kernel = Kernel2D::zeros(level)?;
    for s in 0..dim as u64 {
        for t in 0..dim as u64 {
            let sigma = GammaIndex::from_bits(s);
            let tau = GammaIndex::from_bits(t);
            let v = phi.pair(&table.density(sigma, tau))?;
            kernel.set(sigma, tau, v)?;
        }
    }
    Ok(SpectralIntegralOp {
        kernel,
        provenance: Provenance {
            phi: "phi".to_string(),
            measure: table.name().to_string(),
            level: level.n(),
        },
    })
}

/// Direct route for the canonical measure: the kernel entry at a pair is
/// the transform at the symmetric difference.
pub fn spectral_integral_canonical(
    phi: &GeneralizedFunctional,
    level: TruncationLevel,
) -> Result<SpectralIntegralOp> {
    if phi.level().n() < level.n() {
        return Err(Error::SupportEscape {
            coordinate: level.n(),
            level: phi.level().n(),
        });
    }
    let dim = level.dim()?;
    let mut kernel = Kernel2D::zeros(level)?;
    for s in 0..dim as u64 {
        for t in 0..dim as u64 {
            let sigma = GammaIndex::from_bits(s);
            let tau = GammaIndex::from_bits(t);
            kernel.set(sigma, tau, phi.fock(sigma.sym_diff(tau))?)?;
        }
    }
    Ok(SpectralIntegralOp {
        kernel,
        provenance: Provenance {
            phi: "phi".to_string(),
            measure: "pi0".to_string(),
            level: level.n(),
        },
    })
}

/// Smallest-constant integrability certificate over the exponent grid,
/// ties resolving to the smallest exponent. For the canonical table the
/// dual norm at each grid exponent is also checked as a valid constant.
pub fn integrability_check(
    phi: &GeneralizedFunctional,
    table: &crate::spectral::DensityTable,
    level: TruncationLevel,
    p_grid: &[f64],
) -> Result<IntegrabilityCertificate> {
    let op = spectral_integral(phi, table, level)?;
    let grid_table = op.kernel.growth_table(p_grid)?;
    let best_c = grid_table
        .iter()
        .map(|&(_, c)| c)
        .fold(f64::INFINITY, f64::min);
    let tie = best_c * CERTIFICATE_TIE_REL;
    let (p, c) = grid_table
        .iter()
        .copied()
        .find(|&(_, c)| c <= best_c + tie)
        .expect("grid is nonempty");

    if table.name() == "pi0" {
        // the dual norm dominates the kernel entrywise for every exponent
        for &(gp, c_min) in &grid_table {
            let dn = phi.dual_norm(gp);
            if c_min > dn * (1.0 + 1e-12) {
                return Err(Error::Invalid(format!(
                    "canonical integrability bound violated at p={gp}: \
                     entrywise constant {c_min:.6e} exceeds dual norm {dn:.6e}"
                )));
            }
        }
    }
    Ok(IntegrabilityCertificate {
        c,
        p,
        measure_name: table.name().to_string(),
    })
}

/// Entrywise check that integration is linear in the functional.
pub fn verify_linearity(
    phi: &GeneralizedFunctional,
    psi: &GeneralizedFunctional,
    alpha: Complex64,
    beta: Complex64,
    table: &crate::spectral::DensityTable,
    level: TruncationLevel,
) -> Result<Check> {
    let combo = GeneralizedFunctional::linear_combination(alpha, phi, beta, psi)?;
    let lhs = spectral_integral(&combo, table, level)?;
    let rhs = spectral_integral(phi, table, level)?
        .kernel
        .scaled(alpha)
        .plus(&spectral_integral(psi, table, level)?.kernel.scaled(beta))?;
    let (residual, sigma, tau) = lhs.kernel.max_abs_diff(&rhs)?;
    Ok(Check {
        name: "linearity".to_string(),
        passed: residual <= ENUMERATION_EXACT,
        residual,
        tolerance: ENUMERATION_EXACT,
        witness: Some(format!("sigma={sigma}, tau={tau}")),
    })
}

/// The quadratic form of the integral at a test functional: the pairing of
/// the applied conjugate against the functional itself. Real for positive
/// integrands; an imaginary part beyond rounding is an error.
pub fn positivity_form(
    phi: &GeneralizedFunctional,
    xi: &ChaosVector,
    table: &crate::spectral::DensityTable,
    level: TruncationLevel,
) -> Result<f64> {
    let op = spectral_integral(phi, table, level)?;
    let value = op.kernel.apply(&xi.conjugate())?.pair(xi)?;
    if value.im.abs() > REAL_FORM_IMAG * value.re.abs().max(1.0) {
        return Err(Error::NonRealForm(value.im));
    }
    Ok(value.re)
}

/// True when the test functional is nonnegative on every atom of the
/// level, the checkable positivity hypothesis used by the suites.
pub fn is_atomwise_nonneg(eta: &ChaosVector, level: u32, theta: &ThetaSequence) -> Result<bool> {
    for atom in enumerate_atoms(level, theta)? {
        let v = eval_chaos(eta, &atom, theta)?;
        if v.im.abs() > REAL_FORM_IMAG || v.re < -PSD_FLOOR {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Searches random test functionals for a witness with negative form,
/// demonstrating that the positivity hypothesis is needed.
pub fn find_negative_witness(
    phi: &GeneralizedFunctional,
    table: &crate::spectral::DensityTable,
    level: TruncationLevel,
    draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<(ChaosVector, f64)>> {
    for _ in 0..draws {
        let mut xi = ChaosVector::zero();
        for sigma in enumerate_gamma_n(level) {
            xi.set_coeff(
                sigma,
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            );
        }
        let form = positivity_form(phi, &xi, table, level)?;
        if form < -PSD_FLOOR {
            return Ok(Some((xi, form)));
        }
    }
    Ok(None)
}

/// Convolution of functionals: the transforms multiply pointwise.
pub fn convolve_functionals(
    phi: &GeneralizedFunctional,
    psi: &GeneralizedFunctional,
) -> Result<GeneralizedFunctional> {
    if phi.level() != psi.level() {
        return Err(Error::LevelMismatch(phi.level().n(), psi.level().n()));
    }
    let values = phi
        .values()
        .iter()
        .zip(psi.values())
        .map(|(a, b)| a * b)
        .collect();
    GeneralizedFunctional::from_values(phi.level(), values)
}

/// Convolution of kernels: entrywise product.
pub fn convolve_kernels(k1: &Kernel2D, k2: &Kernel2D) -> Result<Kernel2D> {
    if k1.level() != k2.level() {
        return Err(Error::LevelMismatch(k1.level().n(), k2.level().n()));
    }
    let mut out = Kernel2D::zeros(k1.level())?;
    for (sigma, tau, v) in k1.entries() {
        let w = k2.entry(sigma, tau)?;
        if v != Complex64::new(0.0, 0.0) && w != Complex64::new(0.0, 0.0) {
            out.set(sigma, tau, v * w)?;
        }
    }
    Ok(out)
}

/// Wick product: subset convolution of the transforms.
pub fn wick(
    phi: &GeneralizedFunctional,
    psi: &GeneralizedFunctional,
) -> Result<GeneralizedFunctional> {
    if phi.level() != psi.level() {
        return Err(Error::LevelMismatch(phi.level().n(), psi.level().n()));
    }
    let level = phi.level();
    GeneralizedFunctional::from_fn(level, |sigma| {
        sigma
            .subsets()
            .map(|tau| {
                let rest = sigma.set_minus(tau);
                phi.fock(tau).expect("subset stays in the truncation")
                    * psi.fock(rest).expect("subset stays in the truncation")
            })
            .sum()
    })
}

/// Checks that integrating a convolution against the canonical measure
/// factors into the convolution of the integrals. The two factors carry
/// the two distinct functionals.
pub fn verify_factorization(
    phi: &GeneralizedFunctional,
    psi: &GeneralizedFunctional,
    level: TruncationLevel,
    theta: &ThetaSequence,
) -> Result<Check> {
    theta.require_symmetric()?;
    let lhs = spectral_integral_canonical(&convolve_functionals(phi, psi)?, level)?;
    let rhs = convolve_kernels(
        &spectral_integral_canonical(phi, level)?.kernel,
        &spectral_integral_canonical(psi, level)?.kernel,
    )?;
    let (residual, sigma, tau) = lhs.kernel.max_abs_diff(&rhs)?;
    Ok(Check {
        name: "factorization".to_string(),
        passed: residual <= ENUMERATION_EXACT,
        residual,
        tolerance: ENUMERATION_EXACT,
        witness: Some(format!("sigma={sigma}, tau={tau}")),
    })
}

/// The two product-regularity chains together with the norm bounds of the
/// resulting integrals.
#[derive(Clone, Debug, Serialize)]
pub struct RegularityChains {
    pub q_wick: f64,
    pub q_conv: f64,
    pub checks: Vec<Check>,
}

/// Verifies, on the truncation:
/// - the Wick product's dual norm at `p + 1` against the product of dual
///   norms times the square root of the weight series at exponent 2;
/// - the convolution's dual norm at `2p` against the plain product of
///   dual norms;
/// - the norm bound of each product's canonical integral at `q_wick`
///   (default `p + 2`) and `q_conv` (default `2p + 1`).
pub fn regularity_report(
    phi: &GeneralizedFunctional,
    psi: &GeneralizedFunctional,
    p: f64,
    q_wick: Option<f64>,
    q_conv: Option<f64>,
    level: TruncationLevel,
) -> Result<RegularityChains> {
    let q_wick = q_wick.unwrap_or(p + 2.0);
    let q_conv = q_conv.unwrap_or(2.0 * p + 1.0);
    let mut checks = Vec::new();

    let wick_prod = wick(phi, psi)?;
    let conv_prod = convolve_functionals(phi, psi)?;
    let dn_phi = phi.dual_norm(p);
    let dn_psi = psi.dual_norm(p);

    let wick_lhs = wick_prod.dual_norm(p + 1.0);
    let wick_rhs = dn_phi * dn_psi * weight_series_sum(2.0, level)?.sqrt();
    checks.push(inequality_check("wick-dual-norm-chain", wick_lhs, wick_rhs));

    let conv_lhs = conv_prod.dual_norm(2.0 * p);
    let conv_rhs = dn_phi * dn_psi;
    checks.push(inequality_check(
        "convolution-dual-norm-chain",
        conv_lhs,
        conv_rhs,
    ));

    let wick_op = spectral_integral_canonical(&wick_prod, level)?;
    let wick_bound =
        weight_series_sum(2.0 * (q_wick - (p + 1.0)), level)? * wick_prod.dual_norm(p + 1.0);
    checks.push(inequality_check(
        "wick-integral-norm-bound",
        wick_op.kernel.op_norm(q_wick)?.value,
        wick_bound,
    ));

    let conv_op = spectral_integral_canonical(&conv_prod, level)?;
    let conv_bound =
        weight_series_sum(2.0 * (q_conv - 2.0 * p), level)? * conv_prod.dual_norm(2.0 * p);
    checks.push(inequality_check(
        "convolution-integral-norm-bound",
        conv_op.kernel.op_norm(q_conv)?.value,
        conv_bound,
    ));

    Ok(RegularityChains {
        q_wick,
        q_conv,
        checks,
    })
}

fn inequality_check(name: &str, lhs: f64, rhs: f64) -> Check {
    let tolerance = 1e-9 * rhs.abs().max(1e-300);
    let residual = (lhs - rhs).max(0.0);
    Check {
        name: name.to_string(),
        passed: lhs <= rhs + tolerance,
        residual,
        tolerance,
        witness: Some(format!("lhs={lhs:.6e}, rhs={rhs:.6e}")),
    }
}

/// Residuals of the convergence harness: the dual norm at grading `q` of
/// the difference between each term's integral applied to `xi` and the
/// limit's. The whole sequence must satisfy the shared certificate, which
/// is checked entrywise first; `q` must clear the certificate exponent by
/// more than 1/2.
pub fn convergence_harness(
    sequence: &[GeneralizedFunctional],
    phi0: &GeneralizedFunctional,
    xi: &ChaosVector,
    q: f64,
    table: &crate::spectral::DensityTable,
    level: TruncationLevel,
    certificate: &GrowthCertificate,
) -> Result<Vec<f64>> {
    if sequence.is_empty() {
        return Err(Error::EmptySequence);
    }
    if q <= certificate.p + 0.5 {
        return Err(Error::RegularityExponent {
            q,
            min_q: certificate.p + 0.5,
        });
    }
    let limit_op = spectral_integral(phi0, table, level)?;
    limit_op.kernel.validate_certificate(certificate, None)?;
    let limit_image = limit_op.kernel.apply(xi)?;

    let mut residuals = Vec::with_capacity(sequence.len());
    for (n, phi_n) in sequence.iter().enumerate() {
        let op = spectral_integral(phi_n, table, level)?;
        op.kernel.validate_certificate(certificate, Some(n))?;
        let image = op.kernel.apply(xi)?;
        residuals.push(image.minus(&limit_image)?.dual_norm(q));
    }
    Ok(residuals)
}

/// Exact matrix of the multiplication operator by a bounded test
/// functional: entry `(sigma, tau)` is the integral of the product of the
/// multiplier with both basis functionals, by atom enumeration.
pub fn multiplication_matrix(
    varphi: &ChaosVector,
    level: TruncationLevel,
    atom_level: u32,
    theta: &ThetaSequence,
) -> Result<Kernel2D> {
    if atom_level < level.n() {
        return Err(Error::InsufficientCylinderLevel {
            needed: level.n(),
            got: atom_level,
        });
    }
    let dim = level.dim()?;
    let mut kernel = Kernel2D::zeros(level)?;
    let atoms: Vec<_> = enumerate_atoms(atom_level, theta)?.collect();
    for s in 0..dim as u64 {
        for t in 0..dim as u64 {
            let sigma = GammaIndex::from_bits(s);
            let tau = GammaIndex::from_bits(t);
            let mut total = Complex64::new(0.0, 0.0);
            for atom in &atoms {
                let zs = crate::space::eval_z_sigma(sigma, atom, theta)?;
                let zt = crate::space::eval_z_sigma(tau, atom, theta)?;
                total += atom.prob() * eval_chaos(varphi, atom, theta)? * zs * zt;
            }
            kernel.set(sigma, tau, total)?;
        }
    }
    Ok(kernel)
}

/// Consistency of the two operator constructions for a bounded multiplier:
/// the canonical integral kernel of the Riesz image must equal the
/// conjugate of the exact multiplication matrix.
pub fn verify_multiplication_consistency(
    varphi: &ChaosVector,
    level: TruncationLevel,
    atom_level: u32,
    theta: &ThetaSequence,
) -> Result<Check> {
    let phi = crate::chaos::riesz_at(varphi, level)?;
    let integral = spectral_integral_canonical(&phi, level)?;
    let mult = multiplication_matrix(varphi, level, atom_level, theta)?;
    let conj_mult = Kernel2D::from_fn(level, |s, t| mult.entry(s, t).expect("same level").conj())?;
    let (residual, sigma, tau) = integral.kernel.max_abs_diff(&conj_mult)?;
    Ok(Check {
        name: "multiplication-consistency".to_string(),
        passed: residual <= ENUMERATION_EXACT,
        residual,
        tolerance: ENUMERATION_EXACT,
        witness: Some(format!("sigma={sigma}, tau={tau}")),
    })
}

/// Entrywise agreement of the density route and the direct route to the
/// canonical integral kernel.
pub fn verify_canonical_shortcut(
    phi: &GeneralizedFunctional,
    level: TruncationLevel,
) -> Result<Check> {
    let via_density = spectral_integral(phi, &crate::spectral::DensityTable::canonical(), level)?;
    let direct = spectral_integral_canonical(phi, level)?;
    let (residual, sigma, tau) = via_density.kernel.max_abs_diff(&direct.kernel)?;
    Ok(Check {
        name: "canonical-shortcut".to_string(),
        passed: residual <= KERNEL_SHORTCUT,
        residual,
        tolerance: KERNEL_SHORTCUT,
        witness: Some(format!("sigma={sigma}, tau={tau}")),
    })
}

/// Norm-bound instance for a canonical integral built from a dual norm:
/// the operator norm at `q` against the weight series times the dual norm.
pub fn verify_canonical_norm_bound(
    phi: &GeneralizedFunctional,
    p: f64,
    q: f64,
    level: TruncationLevel,
) -> Result<Check> {
    if q <= p + 0.5 {
        return Err(Error::RegularityExponent { q, min_q: p + 0.5 });
    }
    let op = spectral_integral_canonical(phi, level)?;
    let lhs = op.kernel.op_norm(q)?.value;
    let rhs = weight_series_sum(2.0 * (q - p), level)? * phi.dual_norm(p);
    Ok(inequality_check("canonical-integral-norm-bound", lhs, rhs))
}
