//! Multiplier solver for `A*(D) f = mu` on a periodic box.
//!
//! With `d^alpha -> (i xi)^alpha`, `A*(D)` has multiplier `(-i)^m A(xi)^H`, so
//! `f^(xi) = i^m A(xi) (A^H A)^{-1}(xi) mu^(xi)` solves the equation on every
//! nonzero mode. Constants lie in the kernel of `A*(D)` on the torus: the mean
//! of `mu` is subtracted and reported.

mod kernel;

pub use kernel::{kernel_k, kernel_samples, smoothed_kernel_on_cells, smoothed_kernel_samples, reproduce_u, BoundConstants, DominationCheck, Kernel, KernelProfile, ReproductionReport};

use crate::ensemble::{EnsembleSpec, EnsembleSummary, TestEnsemble};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridField};
use crate::linalg::{self, CMatrix};
use crate::measures::VectorMeasure;
use crate::operator::{apply_operator, check_ellipticity, i_pow, structure, HomogeneousOperator};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// `H(xi) = (A^H A)^{-1}(xi) A^H(xi)`, a `dimE x dimF` left inverse of `A(xi)`.
pub fn multiplier_h(op: &HomogeneousOperator, xi: &[f64]) -> Result<CMatrix> {
    if xi.len() != op.dim() {
        return Err(Error::DimensionMismatch("xi has the wrong dimension".into()));
    }
    if xi.iter().all(|x| *x == 0.0) {
        return Err(Error::InvalidArgument("H is not defined at xi = 0".into()));
    }
    left_inverse(&op.symbol(xi)).ok_or_else(|| Error::NotElliptic {
        xi: xi.to_vec(),
        sigma: linalg::injectivity_modulus(&op.symbol(xi)),
    })
}

fn left_inverse(a: &CMatrix) -> Option<CMatrix> {
    let ah = a.adjoint();
    let gram = &ah * a;
    let scale = gram.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let chol = gram.cholesky()?;
    let h = chol.solve(&ah);
    // Reject numerically singular Gram matrices.
    let id = &h * a;
    let err = (id - CMatrix::identity(a.ncols(), a.ncols())).iter().map(|z| z.norm()).fold(0.0, f64::max);
    (err < 1e-8 && h.iter().all(|z| z.is_finite())).then_some(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    /// The solver box is the measure box enlarged this many times.
    pub padding: usize,
    /// Directions sampled by the ellipticity guard.
    pub samples: usize,
    pub tol: f64,
    /// Test ensemble for the weak residual.
    pub ensemble: EnsembleSpec,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            padding: 1,
            samples: structure::DEFAULT_SAMPLES,
            tol: structure::DEFAULT_TOL,
            ensemble: EnsembleSpec::new(100, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpNorm {
    pub p: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveMetadata {
    /// Grid of the input measure.
    pub measure_grid: Grid,
    /// Grid the equation is solved on.
    pub grid: Grid,
    pub padding: usize,
    /// `||A*(D) f - (mu - mean)||_2 / ||mu - mean||_2`, computed spectrally.
    pub spectral_residual: f64,
    pub ensemble: EnsembleSummary,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub f: GridField,
    pub mean_adjustment: Vec<Complex64>,
    pub weak_residual: f64,
    pub lp_norms: Vec<LpNorm>,
    pub metadata: SolveMetadata,
}

/// Fail with [`Error::NotElliptic`] unless the sampled certificate says elliptic.
pub fn require_elliptic(op: &HomogeneousOperator, samples: usize, tol: f64) -> Result<()> {
    let cert = check_ellipticity(op, samples, tol, 0)?;
    if cert.elliptic == Some(true) {
        Ok(())
    } else {
        Err(Error::NotElliptic {
            xi: cert.witness_xi.unwrap_or_default(),
            sigma: cert.min_singular_value.unwrap_or(0.0),
        })
    }
}

/// Solve `A*(D) f = mu - mean` for a gridded `mu`.
pub fn solve_measure(
    op: &HomogeneousOperator,
    mu: &VectorMeasure,
    p_list: &[f64],
    opts: &SolveOptions,
) -> Result<SolveResult> {
    let measure_grid = mu
        .grid()
        .ok_or_else(|| Error::InvalidArgument("solve_measure needs a gridded measure".into()))?
        .clone();
    if mu.dim() != op.dim() || mu.dim_e() != op.dim_e() {
        return Err(Error::DimensionMismatch(format!(
            "measure is C^{}-valued in R^{}, operator expects C^{} in R^{}",
            mu.dim_e(),
            mu.dim(),
            op.dim_e(),
            op.dim()
        )));
    }
    if let Some(p) = p_list.iter().find(|p| !(**p >= 1.0)) {
        return Err(Error::InvalidArgument(format!("L^p exponent {p} must be >= 1")));
    }
    require_elliptic(op, opts.samples, opts.tol)?;
    let grid = measure_grid.padded(opts.padding)?;
    let density = mu.density_field().expect("gridded").embed(&grid)?;
    let mean = density.mean();
    let adjusted = density.mean_removed();
    let f = solve_density(op, &adjusted)?;

    let back = apply_operator(&op.formal_adjoint(), &f)?;
    let scale = adjusted.l2_norm();
    let diff = back.sub(&adjusted)?.l2_norm();
    let spectral_residual = if scale > 0.0 { diff / scale } else { diff };
    if !(spectral_residual <= 1e-10) {
        return Err(Error::Numerical(format!(
            "spectral residual {spectral_residual:e} exceeds 1e-10"
        )));
    }

    let ensemble = TestEnsemble::new(grid.clone(), op.dim_e(), opts.ensemble)?;
    let weak = weak_residual(op, &f, &adjusted, &ensemble)?;
    let lp_norms = p_list.iter().map(|&p| LpNorm { p, value: f.lp_norm(p) }).collect();
    let mut notes = Vec::new();
    if p_list.iter().any(|p| p.is_infinite()) {
        notes.push("the p = inf entry is the grid maximum, a lower bound for the essential supremum".into());
    }
    if mean.iter().any(|z| z.norm() > 0.0) {
        notes.push("mu had nonzero mean on the solver box; the mean was subtracted".into());
    }
    Ok(SolveResult {
        f,
        mean_adjustment: mean,
        weak_residual: weak,
        lp_norms,
        metadata: SolveMetadata {
            measure_grid,
            grid,
            padding: opts.padding,
            spectral_residual,
            ensemble: ensemble.summary(),
            notes,
        },
    })
}

/// Apply `i^m A(xi) (A^H A)^{-1}(xi)` mode by mode; the zero mode goes to 0.
pub fn solve_density(op: &HomogeneousOperator, rhs: &GridField) -> Result<GridField> {
    if rhs.value_dim() != op.dim_e() || rhs.grid().dim() != op.dim() {
        return Err(Error::DimensionMismatch("right-hand side does not match the operator".into()));
    }
    let phase = i_pow(op.order() as i64);
    let f = rhs
        .spectrum()
        .apply(op.dim_f(), |xi, input, out| {
            if xi.iter().all(|x| *x == 0.0) {
                out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
                return;
            }
            match left_inverse(&op.symbol(xi)) {
                Some(h) => {
                    for (r, o) in out.iter_mut().enumerate() {
                        *o = phase * (0..input.len()).map(|c| h[(c, r)].conj() * input[c]).sum::<Complex64>();
                    }
                }
                None => out.iter_mut().for_each(|o| *o = Complex64::new(f64::NAN, 0.0)),
            }
        })
        .to_field()
        .with_padding_factor(rhs.padding_factor());
    if f.components().iter().flatten().any(|z| !z.is_finite()) {
        return Err(Error::Numerical("symbol not invertible on a grid mode".into()));
    }
    Ok(f)
}

/// `K * g` on the periodic box: `i^{-m} H(xi) g^(xi)` on nonzero modes.
/// For `g = A(D)u` this returns `u` minus its mean.
pub fn apply_kernel(op: &HomogeneousOperator, g: &GridField) -> Result<GridField> {
    if g.value_dim() != op.dim_f() || g.grid().dim() != op.dim() {
        return Err(Error::DimensionMismatch("field does not match the operator's target".into()));
    }
    let phase = i_pow(-(op.order() as i64));
    let u = g
        .spectrum()
        .apply(op.dim_e(), |xi, input, out| {
            if xi.iter().all(|x| *x == 0.0) {
                out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
                return;
            }
            match left_inverse(&op.symbol(xi)) {
                Some(h) => {
                    for (r, o) in out.iter_mut().enumerate() {
                        *o = phase * (0..input.len()).map(|c| h[(r, c)] * input[c]).sum::<Complex64>();
                    }
                }
                None => out.iter_mut().for_each(|o| *o = Complex64::new(f64::NAN, 0.0)),
            }
        })
        .to_field()
        .with_padding_factor(g.padding_factor());
    if u.components().iter().flatten().any(|z| !z.is_finite()) {
        return Err(Error::Numerical("symbol not invertible on a grid mode".into()));
    }
    Ok(u)
}

/// `max_u |int A(D)u . f - int u . mu| / (||A(D)u||_1 + ||u||_1)` with the
/// sesquilinear pairing and `mu` given as a density on `f`'s grid.
pub fn weak_residual(
    op: &HomogeneousOperator,
    f: &GridField,
    mu: &GridField,
    ensemble: &TestEnsemble,
) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(Error::EmptySample("empty test ensemble".into()));
    }
    if f.value_dim() != op.dim_f() || mu.value_dim() != op.dim_e() {
        return Err(Error::DimensionMismatch("f must be F-valued and mu E-valued".into()));
    }
    if !f.grid().same_geometry(mu.grid()) || !f.grid().same_geometry(ensemble.grid()) {
        return Err(Error::DimensionMismatch("f, mu and the ensemble must share a grid".into()));
    }
    let values = (0..ensemble.len())
        .into_par_iter()
        .map(|i| {
            let u = ensemble.member(i);
            let au = apply_operator(op, &u)?;
            let defect = (au.inner(f) - u.inner(mu)).norm();
            let scale = au.lp_norm(1.0) + u.lp_norm(1.0);
            Ok(if scale > 0.0 { defect / scale } else { 0.0 })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::catalog;
    use std::f64::consts::PI;

    fn bump_measure(n: usize) -> VectorMeasure {
        let grid = Grid::cube(2, PI, n).unwrap();
        VectorMeasure::from_density_fn(grid, 1, |x| {
            crate::ensemble::bump_profile(crate::numerics::norm(x) / 1.5)
        })
        .unwrap()
    }

    #[test]
    fn h_examples() {
        let xi = [0.3, -1.2];
        let h = multiplier_h(&catalog::gradient(2), &xi).unwrap();
        let r2 = 0.09 + 1.44;
        assert_eq!(h.shape(), (1, 2));
        assert!((h[(0, 0)] - Complex64::new(0.3 / r2, 0.0)).norm() < 1e-14);
        assert!((h[(0, 1)] - Complex64::new(-1.2 / r2, 0.0)).norm() < 1e-14);
        let l = multiplier_h(&catalog::laplacian(2), &xi).unwrap();
        assert!((l[(0, 0)] - Complex64::new(1.0 / r2, 0.0)).norm() < 1e-14);
        assert!(matches!(
            multiplier_h(&catalog::partial(2, 0), &[0.0, 1.0]),
            Err(Error::NotElliptic { .. })
        ));
    }

    #[test]
    fn zero_measure_gives_zero() {
        let grid = Grid::cube(2, 1.0, 16).unwrap();
        let mu = VectorMeasure::zero_gridded(grid, 1).unwrap();
        let mut opts = SolveOptions::default();
        opts.ensemble.count = 4;
        let r = solve_measure(&catalog::gradient(2), &mu, &[2.0], &opts).unwrap();
        assert_eq!(r.weak_residual, 0.0);
        assert_eq!(r.lp_norms[0].value, 0.0);
    }

    #[test]
    fn gradient_solve_is_exact_and_gauge_free() {
        let mu = bump_measure(64);
        let mut opts = SolveOptions::default();
        opts.ensemble.count = 20;
        let op = catalog::gradient(2);
        let r = solve_measure(&op, &mu, &[1.0, 2.0, f64::INFINITY], &opts).unwrap();
        assert!(r.weak_residual <= 1e-8, "{}", r.weak_residual);
        assert!(r.metadata.spectral_residual <= 1e-10);
        assert!(r.mean_adjustment[0].re > 0.0);

        let grid = r.f.grid().clone();
        let adjusted = mu.density_field().unwrap().mean_removed();
        let ens = TestEnsemble::new(grid.clone(), 1, EnsembleSpec::new(20, 0)).unwrap();
        let shifted = r.f.add(&GridField::from_fn(grid.clone(), 2, |_| vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap()).unwrap();
        let w = weak_residual(&op, &shifted, &adjusted, &ens).unwrap();
        assert!(w <= 1e-8);
        let wavy = r.f.add(&GridField::from_fn(grid, 2, |x| vec![Complex64::new(x[0].sin(), 0.0), Complex64::new(0.0, 0.0)]).unwrap()).unwrap();
        assert!(weak_residual(&op, &wavy, &adjusted, &ens).unwrap() > 1e-3);
    }

    #[test]
    fn non_elliptic_is_refused() {
        let mu = bump_measure(16);
        let e = solve_measure(&catalog::partial(2, 0), &mu, &[2.0], &SolveOptions::default()).unwrap_err();
        assert!(matches!(e, Error::NotElliptic { .. }));
        assert!(matches!(
            solve_measure(&catalog::divergence(2), &mu, &[2.0], &SolveOptions::default()),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
