//! Ellipticity, canceling and cocanceling certificates.
//!
//! All verdicts are relative to a finite direction sample: the certificate
//! records the sample size and seed so a verdict can be reproduced, but a
//! finite sample never proves a statement about every direction.

use super::sphere::sphere_sample;
use super::HomogeneousOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::numerics::norm;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// Default relative tolerance on singular values.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default size of the deterministic part of the direction sample.
pub const DEFAULT_SAMPLES: usize = 256;
/// Number of best sample directions polished by local search.
const REFINE_STARTS: usize = 4;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct StructureCertificate {
    pub elliptic: Option<bool>,
    /// Smallest injectivity modulus of `A(xi)` over the sample (unit `xi`).
    pub min_singular_value: Option<f64>,
    pub max_singular_value: Option<f64>,
    pub witness_xi: Option<Vec<f64>>,
    pub canceling: Option<bool>,
    pub cocanceling: Option<bool>,
    pub intersection_dim: Option<usize>,
    pub intersection_basis: Vec<Vec<Complex64>>,
    pub sample_size: usize,
    pub seed: u64,
    /// Relative tolerance as supplied.
    pub relative_tolerance: f64,
    /// Absolute threshold applied to singular values: relative tolerance
    /// times the largest singular value seen on the sample.
    pub tolerance: f64,
    pub notes: Vec<String>,
}

impl StructureCertificate {
    fn empty(sample_size: usize, seed: u64, tol: f64) -> Self {
        StructureCertificate {
            elliptic: None,
            min_singular_value: None,
            max_singular_value: None,
            witness_xi: None,
            canceling: None,
            cocanceling: None,
            intersection_dim: None,
            intersection_basis: Vec::new(),
            sample_size,
            seed,
            relative_tolerance: tol,
            tolerance: 0.0,
            notes: Vec::new(),
        }
    }
}

fn validate(count: usize, tol: f64) -> Result<()> {
    if count == 0 {
        return Err(Error::EmptySample("direction sample count is 0".into()));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    Ok(())
}

fn max_singular(symbols: &[CMatrix]) -> f64 {
    symbols
        .iter()
        .map(linalg::spectral_norm)
        .fold(0.0, f64::max)
}

/// Smallest singular value of `A(xi)` (zero when `dimE > dimF`) over the
/// sphere sample, polished by a local pattern search from the best few
/// directions.
pub fn check_ellipticity(
    op: &HomogeneousOperator,
    sample_count: usize,
    tol: f64,
    seed: u64,
) -> Result<StructureCertificate> {
    validate(sample_count, tol)?;
    let dirs = sphere_sample(op.dim(), sample_count, seed);
    let moduli: Vec<(f64, f64)> = dirs
        .par_iter()
        .map(|xi| {
            let s = op.symbol(xi);
            (linalg::injectivity_modulus(&s), linalg::spectral_norm(&s))
        })
        .collect();
    let sigma_max = moduli.iter().map(|m| m.1).fold(0.0, f64::max);

    let mut order: Vec<usize> = (0..dirs.len()).collect();
    order.sort_by(|&a, &b| moduli[a].0.partial_cmp(&moduli[b].0).unwrap().then(a.cmp(&b)));
    let modulus = |xi: &[f64]| linalg::injectivity_modulus(&op.symbol(xi));
    let (mut witness, mut best) = (dirs[order[0]].clone(), moduli[order[0]].0);
    for &start in order.iter().take(REFINE_STARTS) {
        let (x, v) = pattern_search(&dirs[start], moduli[start].0, &modulus);
        if v < best {
            best = v;
            witness = x;
        }
    }

    let threshold = tol * sigma_max;
    let mut cert = StructureCertificate::empty(dirs.len(), seed, tol);
    cert.elliptic = Some(best > threshold);
    cert.min_singular_value = Some(best);
    cert.max_singular_value = Some(sigma_max);
    cert.witness_xi = Some(witness);
    cert.tolerance = threshold;
    if op.dim_e() > op.dim_f() {
        cert.notes
            .push("dimE > dimF: A(xi) cannot be injective, modulus is 0".into());
    }
    Ok(cert)
}

/// Coordinate pattern search on the sphere, minimising `f`.
fn pattern_search(start: &[f64], f0: f64, f: &impl Fn(&[f64]) -> f64) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut fx = f0;
    let mut step = 0.05;
    let mut evaluations = 0;
    while step > 1e-13 && evaluations < 4000 {
        let mut improved = false;
        for j in 0..x.len() {
            for s in [1.0, -1.0] {
                let mut y = x.clone();
                y[j] += s * step;
                let n = norm(&y);
                y.iter_mut().for_each(|v| *v /= n);
                let fy = f(&y);
                evaluations += 1;
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// `∩_k A(xi_k)[E]` over the sample by iterated principal-angle
/// intersection. Canceling means the intersection is `{0}`.
pub fn check_canceling(
    op: &HomogeneousOperator,
    sample_count: usize,
    tol: f64,
    seed: u64,
) -> Result<StructureCertificate> {
    validate(sample_count, tol)?;
    let dirs = sphere_sample(op.dim(), sample_count, seed);
    let symbols: Vec<CMatrix> = dirs.par_iter().map(|xi| op.symbol(xi)).collect();
    let cutoff = tol * max_singular(&symbols);
    let bases: Vec<CMatrix> = symbols
        .par_iter()
        .map(|s| linalg::range_basis(s, cutoff))
        .collect();
    let meet = intersect_all(&bases, op.dim_f(), tol);
    let mut cert = StructureCertificate::empty(dirs.len(), seed, tol);
    cert.canceling = Some(meet.ncols() == 0);
    cert.intersection_dim = Some(meet.ncols());
    cert.intersection_basis = linalg::columns(&meet);
    cert.tolerance = cutoff;
    cert.notes.push("verdict is relative to the direction sample".into());
    Ok(cert)
}

/// `∩_k ker L(xi_k)` over the sample. Cocanceling means the intersection is
/// `{0}`.
pub fn check_cocanceling(
    l: &HomogeneousOperator,
    sample_count: usize,
    tol: f64,
    seed: u64,
) -> Result<StructureCertificate> {
    validate(sample_count, tol)?;
    let dirs = sphere_sample(l.dim(), sample_count, seed);
    let symbols: Vec<CMatrix> = dirs.par_iter().map(|xi| l.symbol(xi)).collect();
    let cutoff = tol * max_singular(&symbols);
    let bases: Vec<CMatrix> = symbols
        .par_iter()
        .map(|s| linalg::null_basis(s, cutoff))
        .collect();
    let meet = intersect_all(&bases, l.dim_e(), tol);
    let mut cert = StructureCertificate::empty(dirs.len(), seed, tol);
    cert.cocanceling = Some(meet.ncols() == 0);
    cert.intersection_dim = Some(meet.ncols());
    cert.intersection_basis = linalg::columns(&meet);
    cert.tolerance = cutoff;
    cert.notes.push("verdict is relative to the direction sample".into());
    Ok(cert)
}

fn intersect_all(bases: &[CMatrix], ambient: usize, tol: f64) -> CMatrix {
    let mut acc = match bases.first() {
        Some(b) => b.clone(),
        None => return linalg::empty_basis(ambient),
    };
    for b in &bases[1..] {
        if acc.ncols() == 0 {
            break;
        }
        acc = linalg::intersect(&acc, b, tol);
    }
    acc
}

/// Ellipticity and canceling together.
pub fn certify(
    op: &HomogeneousOperator,
    sample_count: usize,
    tol: f64,
    seed: u64,
) -> Result<StructureCertificate> {
    let mut cert = check_ellipticity(op, sample_count, tol, seed)?;
    let canc = check_canceling(op, sample_count, tol, seed)?;
    cert.canceling = canc.canceling;
    cert.intersection_dim = canc.intersection_dim;
    cert.intersection_basis = canc.intersection_basis;
    cert.notes.extend(canc.notes);
    if cert.elliptic == Some(false) {
        cert.notes
            .push("operator is not elliptic; canceling verdict computed anyway".into());
    }
    Ok(cert)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AnnihilatorSample {
    pub xi: Vec<f64>,
    /// `||L(xi) A(xi)|| / (||L(xi)|| ||A(xi)||)`.
    pub residual: f64,
    pub contained: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AnnihilatorReport {
    pub samples: Vec<AnnihilatorSample>,
    /// `A(xi)[E] ⊆ ker L(xi)` at every sampled direction.
    pub all_contained: bool,
    pub max_residual: f64,
    pub kernel_intersection_dim: usize,
    pub range_intersection_dim: usize,
    /// `∩ ker L(xi) = ∩ A(xi)[E]` on the sample.
    pub intersections_agree: bool,
    pub sample_size: usize,
    pub seed: u64,
    pub tolerance: f64,
}

/// Check that `L(D)` annihilates the range of `A(D)` symbol-wise and that
/// the kernel and range intersections coincide on the sample.
pub fn verify_annihilator(
    a: &HomogeneousOperator,
    l: &HomogeneousOperator,
    sample_count: usize,
    tol: f64,
    seed: u64,
) -> Result<AnnihilatorReport> {
    validate(sample_count, tol)?;
    if a.dim() != l.dim() || l.dim_e() != a.dim_f() {
        return Err(Error::DimensionMismatch(format!(
            "A maps C^{} -> C^{} in R^{}, L maps C^{} -> C^{} in R^{}",
            a.dim_e(),
            a.dim_f(),
            a.dim(),
            l.dim_e(),
            l.dim_f(),
            l.dim()
        )));
    }
    let dirs = sphere_sample(a.dim(), sample_count, seed);
    let a_sym: Vec<CMatrix> = dirs.iter().map(|xi| a.symbol(xi)).collect();
    let l_sym: Vec<CMatrix> = dirs.iter().map(|xi| l.symbol(xi)).collect();
    if l_sym.iter().all(|s| s.norm() == 0.0) {
        return Err(Error::TrivialSymbol);
    }
    let samples: Vec<AnnihilatorSample> = dirs
        .iter()
        .zip(a_sym.iter().zip(&l_sym))
        .map(|(xi, (sa, sl))| {
            let denom = linalg::spectral_norm(sa) * linalg::spectral_norm(sl);
            let residual = if denom > 0.0 {
                linalg::spectral_norm(&(sl * sa)) / denom
            } else {
                0.0
            };
            AnnihilatorSample {
                xi: xi.clone(),
                residual,
                contained: residual <= tol,
            }
        })
        .collect();
    let a_cut = tol * max_singular(&a_sym);
    let l_cut = tol * max_singular(&l_sym);
    let ranges: Vec<CMatrix> = a_sym.iter().map(|s| linalg::range_basis(s, a_cut)).collect();
    let kernels: Vec<CMatrix> = l_sym.iter().map(|s| linalg::null_basis(s, l_cut)).collect();
    let range_meet = intersect_all(&ranges, a.dim_f(), tol);
    let kernel_meet = intersect_all(&kernels, a.dim_f(), tol);
    let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    Ok(AnnihilatorReport {
        all_contained: samples.iter().all(|s| s.contained),
        max_residual,
        kernel_intersection_dim: kernel_meet.ncols(),
        range_intersection_dim: range_meet.ncols(),
        intersections_agree: linalg::subspace_distance(&range_meet, &kernel_meet) <= tol.sqrt(),
        sample_size: dirs.len(),
        seed,
        tolerance: tol,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::super::catalog;
    use super::*;

    #[test]
    fn gradient_is_elliptic_with_unit_modulus() {
        let c = check_ellipticity(&catalog::gradient(2), 64, DEFAULT_TOL, 1).unwrap();
        assert_eq!(c.elliptic, Some(true));
        assert!((c.min_singular_value.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_derivative_degenerates_on_the_vertical_axis() {
        let c = check_ellipticity(&catalog::partial(2, 0), 64, DEFAULT_TOL, 1).unwrap();
        assert_eq!(c.elliptic, Some(false));
        let w = c.witness_xi.unwrap();
        assert!(w[0].abs() < 1e-8 && (w[1].abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn laplacian_is_not_canceling() {
        let c = certify(&catalog::laplacian(2), 64, DEFAULT_TOL, 1).unwrap();
        assert_eq!(c.elliptic, Some(true));
        assert_eq!(c.canceling, Some(false));
        assert_eq!(c.intersection_dim, Some(1));
        assert_eq!(c.intersection_basis.len(), 1);
    }

    #[test]
    fn wide_operator_is_never_elliptic() {
        let c = check_ellipticity(&catalog::divergence(3), 32, DEFAULT_TOL, 1).unwrap();
        assert_eq!(c.elliptic, Some(false));
        assert_eq!(c.min_singular_value, Some(0.0));
    }

    #[test]
    fn zero_samples_is_an_error() {
        assert!(matches!(
            check_canceling(&catalog::gradient(2), 0, DEFAULT_TOL, 1),
            Err(Error::EmptySample(_))
        ));
    }

    #[test]
    fn curl_annihilates_gradient_but_divergence_does_not() {
        let ok = verify_annihilator(&catalog::gradient(2), &catalog::curl(2), 32, DEFAULT_TOL, 3).unwrap();
        assert!(ok.all_contained && ok.intersections_agree);
        let bad = verify_annihilator(&catalog::gradient(2), &catalog::divergence(2), 32, DEFAULT_TOL, 3).unwrap();
        assert!(!bad.all_contained);
        assert!((bad.max_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_annihilator_dimensions() {
        assert!(matches!(
            verify_annihilator(&catalog::gradient(2), &catalog::curl(3), 8, DEFAULT_TOL, 0),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
