//! The moment estimate for fields in the kernel of a cocanceling operator:
//! `|int phi . f| <= C sum_{j=1..k} int |f| |y|^j |D^j phi|`.

use super::report::{InequalityReport, Sample};
use super::{require_members, FieldSource};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::linalg::{null_basis, spectral_norm};
use crate::numerics::norm;
use crate::operator::{apply_operator, catalog, HomogeneousOperator};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Relative size of `L(D) f` above which `f` is not in the kernel.
const KERNEL_TOL: f64 = 1e-10;

/// Project `f^(xi)` onto `ker L(xi)` on every mode. The zero mode is
/// dropped: integrable fields in the kernel of a cocanceling operator have
/// zero integral.
pub fn project_onto_kernel(l: &HomogeneousOperator, f: &GridField) -> Result<GridField> {
    check_shapes(l, f)?;
    Ok(f.spectrum()
        .apply(f.value_dim(), |xi, input, out| {
            if xi.iter().all(|x| *x == 0.0) {
                out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
                return;
            }
            let s = l.symbol(xi);
            let b = null_basis(&s, 1e-12 * spectral_norm(&s).max(f64::MIN_POSITIVE));
            for (r, o) in out.iter_mut().enumerate() {
                *o = Complex64::new(0.0, 0.0);
                for j in 0..b.ncols() {
                    let coeff: Complex64 = (0..input.len()).map(|c| b[(c, j)].conj() * input[c]).sum();
                    *o += b[(r, j)] * coeff;
                }
            }
        })
        .to_field()
        .with_padding_factor(f.padding_factor()))
}

fn check_shapes(l: &HomogeneousOperator, f: &GridField) -> Result<()> {
    if f.grid().dim() != l.dim() || f.value_dim() != l.dim_e() {
        return Err(Error::DimensionMismatch("field does not match the operator's domain".into()));
    }
    Ok(())
}

/// `||L(D) f||_2 / (||f||_2 xi_max^k)`.
fn kernel_residual(l: &HomogeneousOperator, f: &GridField) -> Result<f64> {
    let lf = apply_operator(l, f)?;
    let xi_max = PI / f.grid().max_spacing();
    let scale = f.l2_norm() * xi_max.powi(l.order() as i32);
    Ok(if scale > 0.0 { lf.l2_norm() / scale } else { 0.0 })
}

/// `|D^j phi|` per cell, the tensor norm over all components.
fn derivative_magnitudes(phi: &GridField, j: usize) -> Result<Vec<f64>> {
    let dj = catalog::total_derivative(phi.grid().dim(), j);
    let mut sq = vec![0.0; phi.grid().len()];
    for c in 0..phi.value_dim() {
        let comp = GridField::new(phi.grid().clone(), vec![phi.component(c).to_vec()])?;
        let d = apply_operator(&dj, &comp)?;
        for (s, m) in sq.iter_mut().zip(d.magnitudes()) {
            *s += m * m;
        }
    }
    Ok(sq.into_iter().map(f64::sqrt).collect())
}

/// The estimate over an ensemble of test functions `phi`; the constant is
/// reported, not predicted.
pub fn cocanceling_moment_check(
    l: &HomogeneousOperator,
    f: &GridField,
    phi: &dyn FieldSource,
) -> Result<InequalityReport> {
    check_shapes(l, f)?;
    require_members(phi)?;
    let res = kernel_residual(l, f)?;
    if !(res <= KERNEL_TOL) {
        return Err(Error::Precondition(format!(
            "f is not in ker L(D): relative residual {res:e} exceeds {KERNEL_TOL:e}"
        )));
    }
    let grid = f.grid();
    let vol = grid.cell_volume();
    let radius: Vec<f64> = (0..grid.len()).map(|k| norm(&grid.point(k))).collect();
    let f_abs = f.magnitudes();
    let samples: Vec<Sample> = (0..phi.count())
        .into_par_iter()
        .map(|i| {
            let p = phi.field(i);
            if !p.grid().same_geometry(grid) || p.value_dim() != f.value_dim() {
                return Err(Error::DimensionMismatch("test functions must match f".into()));
            }
            let pairing: Complex64 = (0..grid.len())
                .map(|k| (0..f.value_dim()).map(|c| p.component(c)[k] * f.component(c)[k]).sum::<Complex64>())
                .sum::<Complex64>()
                * vol;
            let mut rhs = 0.0;
            for j in 1..=l.order() {
                let dj = derivative_magnitudes(&p, j)?;
                rhs += (0..grid.len())
                    .map(|k| f_abs[k] * radius[k].powi(j as i32) * dj[k])
                    .sum::<f64>()
                    * vol;
            }
            Ok(Sample { lhs: pairing.norm(), rhs })
        })
        .collect::<Result<_>>()?;
    let mut report = InequalityReport::assemble("moment", &samples, None, 1.0);
    report.seed = phi.seed();
    report.notes.push(format!("relative kernel residual of f: {res:e}"));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{EnsembleSpec, TestEnsemble};
    use crate::grid::Grid;

    fn stream_field(grid: &Grid) -> GridField {
        // f = (-d2 s, d1 s) for s = exp(-4|x - a|^2) sin(3 x1)
        let s = GridField::from_real_fn(grid.clone(), |x| {
            let r2 = (x[0] - 0.2).powi(2) + (x[1] + 0.1).powi(2);
            (-4.0 * r2).exp() * (3.0 * x[0]).sin()
        })
        .unwrap();
        let d = apply_operator(&catalog::gradient(2), &s).unwrap();
        GridField::new(
            grid.clone(),
            vec![d.component(1).iter().map(|z| -z).collect(), d.component(0).to_vec()],
        )
        .unwrap()
    }

    #[test]
    fn rotated_gradients_are_divergence_free_and_give_finite_constants() {
        let grid = Grid::cube(2, 3.0, 64).unwrap();
        let f = stream_field(&grid);
        let div = catalog::divergence(2);
        let projected = project_onto_kernel(&div, &f).unwrap();
        assert!(projected.sub(&f).unwrap().l2_norm() < 1e-10 * f.l2_norm());
        let phi = TestEnsemble::new(grid.clone(), 2, EnsembleSpec::new(30, 5).with_random_support()).unwrap();
        let r = cocanceling_moment_check(&div, &f, &phi).unwrap();
        assert!(r.pass);
        assert!(r.empirical_best_constant.is_finite() && r.empirical_best_constant > 0.0);
        assert!(r.ratios.max / r.ratios.median < 50.0);
    }

    #[test]
    fn projection_lands_in_the_kernel() {
        let grid = Grid::cube(2, 1.0, 32).unwrap();
        let e = TestEnsemble::new(grid, 2, EnsembleSpec::new(1, 1)).unwrap();
        let div = catalog::divergence(2);
        let f = project_onto_kernel(&div, &e.member(0)).unwrap();
        assert!(kernel_residual(&div, &f).unwrap() < 1e-13);
        // Mean zero after projection.
        assert!(f.mean().iter().all(|z| z.norm() < 1e-14));
        assert!(cocanceling_moment_check(&div, &e.member(0), &e).is_err());
    }

    #[test]
    fn zero_field_has_zero_left_side() {
        let grid = Grid::cube(2, 1.0, 32).unwrap();
        let f = GridField::zeros(grid.clone(), 2);
        let phi = TestEnsemble::new(grid, 2, EnsembleSpec::new(5, 2)).unwrap();
        let r = cocanceling_moment_check(&catalog::divergence(2), &f, &phi).unwrap();
        assert_eq!(r.empirical_best_constant, 0.0);
    }

    #[test]
    fn constant_test_function_sees_zero() {
        // phi constant on the support of a projected, mean-zero f.
        let grid = Grid::cube(2, 1.0, 32).unwrap();
        let e = TestEnsemble::new(grid.clone(), 2, EnsembleSpec::new(1, 4)).unwrap();
        let div = catalog::divergence(2);
        let f = project_onto_kernel(&div, &e.member(0)).unwrap();
        let c = GridField::new(grid.clone(), vec![vec![Complex64::new(2.0, 0.0); grid.len()], vec![Complex64::new(-1.0, 0.0); grid.len()]]).unwrap();
        let pairing: Complex64 = (0..grid.len()).map(|k| c.component(0)[k] * f.component(0)[k] + c.component(1)[k] * f.component(1)[k]).sum();
        assert!(pairing.norm() * grid.cell_volume() < 1e-12);
    }
}
