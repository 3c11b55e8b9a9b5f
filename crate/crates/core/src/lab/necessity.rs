//! First-order necessity: if `A*(D) f = mu` with `f` bounded and `A` of
//! order one, then `|mu(B(x, r))| <= C_N ||f||_inf r^{N-1}`.
//!
//! `mu(B)` equals the flux of `sum_j a_j^* f nu_j` through the sphere, so
//! `C_N = |S^{N-1}| sum_j ||a_j||`, times `(2d)^{1/2}` for the passage from
//! the vector to its real and imaginary component parts.

use super::report::{InequalityReport, Sample};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::linalg::spectral_norm;
use crate::measures::VectorMeasure;
use crate::numerics::{log_spaced, unit_sphere_area};
use crate::operator::{apply_operator, HomogeneousOperator};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct NecessityOptions {
    /// Ball centres per axis on the inner half of the box.
    pub centers_per_axis: usize,
    pub radii: usize,
    /// Smallest radius in cells.
    pub min_radius_cells: f64,
}

impl Default for NecessityOptions {
    fn default() -> Self {
        NecessityOptions {
            centers_per_axis: 9,
            radii: 16,
            min_radius_cells: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct NecessityReport {
    pub inequality: InequalityReport,
    pub c_n: f64,
    pub f_sup: f64,
    /// `sup |mu(B(x, r))| / r^{N-1}` over the sample.
    pub morrey_sup: f64,
    /// `morrey_sup / C_N`: no bounded solution can have a smaller sup norm.
    pub implied_f_lower_bound: f64,
    /// Largest ratio at each radius.
    pub ratios_by_radius: Vec<(f64, f64)>,
    /// Real parts of `A*(D) f` are nonnegative and imaginary parts vanish,
    /// up to `1e-8` of the largest value.
    pub positive: bool,
}

/// `|S^{N-1}| sum_j ||a_j|| (2 dimE)^{1/2}`.
pub fn necessity_constant(op: &HomogeneousOperator) -> Result<f64> {
    if op.order() != 1 {
        return Err(Error::InvalidArgument(format!("operator has order {}, expected 1", op.order())));
    }
    let s: f64 = op.terms().values().map(spectral_norm).sum();
    Ok(unit_sphere_area(op.dim()) * s * (2.0 * op.dim_e() as f64).sqrt())
}

/// Split a complex density into the positive measures `P` and `Q` with
/// `density = P - Q`.
fn split(density: &GridField) -> Result<(VectorMeasure, VectorMeasure)> {
    let pos = |z: &Complex64| Complex64::new(z.re.max(0.0), z.im.max(0.0));
    let neg = |z: &Complex64| Complex64::new((-z.re).max(0.0), (-z.im).max(0.0));
    let p = density.components().iter().map(|c| c.iter().map(pos).collect()).collect();
    let q = density.components().iter().map(|c| c.iter().map(neg).collect()).collect();
    Ok((
        VectorMeasure::gridded(density.grid().clone(), p)?,
        VectorMeasure::gridded(density.grid().clone(), q)?,
    ))
}

pub fn first_order_necessity(
    op: &HomogeneousOperator,
    f: &GridField,
    opts: &NecessityOptions,
) -> Result<NecessityReport> {
    let c_n = necessity_constant(op)?;
    if f.grid().dim() != op.dim() || f.value_dim() != op.dim_f() {
        return Err(Error::DimensionMismatch("f does not match the operator's target".into()));
    }
    if opts.centers_per_axis == 0 || opts.radii == 0 {
        return Err(Error::EmptySample("no balls to sample".into()));
    }
    let grid = f.grid();
    let mu = apply_operator(&op.formal_adjoint(), f)?;
    let peak = mu.components().iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let positive = mu
        .components()
        .iter()
        .flatten()
        .all(|z| z.re >= -1e-8 * peak && z.im.abs() <= 1e-8 * peak);
    let (p, q) = split(&mu)?;
    let f_sup = f.lp_norm(f64::INFINITY);

    let dim = grid.dim();
    let centre = grid.center();
    let w = grid.min_half_width();
    let h = grid.max_spacing();
    let radii = log_spaced(opts.min_radius_cells * h, 0.5 * w, opts.radii);
    let k = opts.centers_per_axis;
    let mut centres: Vec<Vec<f64>> = (0..k.pow(dim as u32))
        .map(|mut i| {
            (0..dim)
                .map(|a| {
                    let j = i % k;
                    i /= k;
                    let t = if k == 1 { 0.0 } else { j as f64 / (k - 1) as f64 - 0.5 };
                    centre[a] + t * w
                })
                .collect()
        })
        .collect();
    // The cell where |mu| peaks, where small balls see the most mass.
    let peak_cell = (0..grid.len())
        .max_by(|&a, &b| mu.magnitude(a).total_cmp(&mu.magnitude(b)))
        .unwrap_or(0);
    centres.push(grid.point(peak_cell));

    let balls: Vec<(usize, Vec<f64>, f64)> = radii
        .iter()
        .enumerate()
        .flat_map(|(ri, &r)| {
            centres
                .iter()
                .filter(move |x| {
                    x.iter().zip(grid.bounds()).all(|(c, (lo, hi))| c - r >= *lo && c + r <= *hi)
                })
                .map(move |x| (ri, x.clone(), r))
        })
        .collect();
    let rows: Vec<(usize, Sample, f64)> = balls
        .par_iter()
        .map(|(ri, x, r)| {
            let a = p.ball_mass(x, *r);
            let b = q.ball_mass(x, *r);
            let m = a.iter().zip(&b).map(|(s, t)| (s - t).norm_sqr()).sum::<f64>().sqrt();
            let scale = r.powi(dim as i32 - 1);
            (*ri, Sample { lhs: m, rhs: f_sup * scale }, m / scale)
        })
        .collect();
    let samples: Vec<Sample> = rows.iter().map(|r| r.1).collect();
    let morrey_sup = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let mut by_radius = vec![0.0f64; radii.len()];
    for (ri, s, _) in &rows {
        by_radius[*ri] = by_radius[*ri].max(s.ratio());
    }
    let mut report = InequalityReport::assemble("first-order-necessity", &samples, Some(c_n), 1.0);
    report.functional = Some(c_n);
    if !positive {
        report.notes.push("A*(D) f has negative or imaginary parts; the bound is checked for |mu(B)|".into());
    }
    Ok(NecessityReport {
        inequality: report,
        c_n,
        f_sup,
        morrey_sup,
        implied_f_lower_bound: morrey_sup / c_n,
        ratios_by_radius: radii.into_iter().zip(by_radius).collect(),
        positive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::operator::catalog;
    use crate::solver::solve_density;
    use std::f64::consts::PI;

    #[test]
    fn gradient_constant() {
        // sum_j ||e_j|| = N, sphere area 2 pi, d = 1.
        let c = necessity_constant(&catalog::gradient(2)).unwrap();
        assert!((c - 2.0 * PI * 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(necessity_constant(&catalog::laplacian(2)).is_err());
    }

    #[test]
    fn bump_source_respects_the_bound() {
        let grid = Grid::cube(2, 1.0, 64).unwrap();
        let rho = GridField::from_real_fn(grid.clone(), |x| (-20.0 * (x[0] * x[0] + x[1] * x[1])).exp()).unwrap();
        let op = catalog::gradient(2);
        let f = solve_density(&op, &rho.mean_removed()).unwrap();
        let r = first_order_necessity(&op, &f, &NecessityOptions::default()).unwrap();
        assert!(r.inequality.pass, "{} > {}", r.inequality.empirical_best_constant, r.c_n);
        assert!(r.inequality.empirical_best_constant > 0.1);
    }

    #[test]
    fn zero_field_gives_zero_ratios() {
        let grid = Grid::cube(2, 1.0, 16).unwrap();
        let f = GridField::zeros(grid, 2);
        let r = first_order_necessity(&catalog::gradient(2), &f, &NecessityOptions::default()).unwrap();
        assert_eq!(r.inequality.empirical_best_constant, 0.0);
        assert!(r.inequality.pass);
    }
}
