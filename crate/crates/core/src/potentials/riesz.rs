//! Riesz potentials `I_m eta(x) = gamma(m)^{-1} int |x - y|^{m-N} d eta(y)`.

use crate::error::{Error, Result};
use crate::grid::{fft_nd, Grid, GridField};
use crate::measures::{MeasureKind, VectorMeasure};
use crate::numerics::{distance, unit_ball_volume, unit_sphere_area};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::Serialize;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// `gamma(m) = pi^{N/2} 2^m Gamma(m/2) / Gamma((N-m)/2)`, for `0 < m < N`.
pub fn riesz_constant(dim: usize, m: usize) -> Result<f64> {
    if m == 0 || m >= dim {
        return Err(Error::OrderOutOfRange { order: m, dim });
    }
    let (n, m) = (dim as f64, m as f64);
    Ok(PI.powf(n / 2.0) * 2f64.powf(m) * gamma(m / 2.0) / gamma((n - m) / 2.0))
}

/// Value of `I_m mu` at one point.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PotentialValue {
    pub value: Vec<Complex64>,
    /// The point sits on an atom; components with mass there are infinite.
    pub singular: bool,
}

/// `I_m mu(x)` for an atomic measure, summed exactly.
pub fn riesz_potential_atomic(mu: &VectorMeasure, m: usize, x: &[f64]) -> Result<PotentialValue> {
    let atoms = mu
        .atoms()
        .ok_or_else(|| Error::InvalidArgument("riesz_potential_atomic needs an atomic measure".into()))?;
    if x.len() != mu.dim() {
        return Err(Error::DimensionMismatch("point dimension differs from N".into()));
    }
    let g = riesz_constant(mu.dim(), m)?;
    let e = m as f64 - mu.dim() as f64;
    let mut value = vec![Complex64::new(0.0, 0.0); mu.dim_e()];
    let mut singular = false;
    for a in atoms {
        let d = distance(&a.point, x);
        if d == 0.0 {
            for (v, w) in value.iter_mut().zip(&a.weight) {
                if w.re > 0.0 {
                    v.re = f64::INFINITY;
                    singular = true;
                }
                if w.im > 0.0 {
                    v.im = f64::INFINITY;
                    singular = true;
                }
            }
            continue;
        }
        let k = d.powf(e) / g;
        for (v, w) in value.iter_mut().zip(&a.weight) {
            *v += w * k;
        }
    }
    Ok(PotentialValue { value, singular })
}

/// Mean of the kernel `gamma^{-1} |x|^{m-N}` over a cell, approximated by the
/// ball of equal volume: `gamma^{-1} |S^{N-1}| rho^m / (m |cell|)`.
pub fn self_cell_kernel(grid: &Grid, m: usize) -> Result<f64> {
    let dim = grid.dim();
    let g = riesz_constant(dim, m)?;
    let vol = grid.cell_volume();
    let rho = (vol / unit_ball_volume(dim)).powf(1.0 / dim as f64);
    Ok(unit_sphere_area(dim) * rho.powf(m as f64) / (m as f64 * vol * g))
}

/// `I_m mu` at the cell centres of the measure's grid.
pub fn riesz_potential_grid(mu: &VectorMeasure, m: usize) -> Result<GridField> {
    riesz_potential_extended(mu, m, 1)
}

/// `I_m mu` on the box enlarged `extension` times about its centre (same
/// spacing). The discrete sum over cells is evaluated exactly by a linear
/// convolution on a grid padded by two; the self cell uses
/// [`self_cell_kernel`].
pub fn riesz_potential_extended(mu: &VectorMeasure, m: usize, extension: usize) -> Result<GridField> {
    let grid = mu
        .grid()
        .ok_or_else(|| Error::InvalidArgument("riesz_potential_grid needs a gridded measure".into()))?;
    let dim = grid.dim();
    let gamma_m = riesz_constant(dim, m)?;
    let target = grid.padded(extension)?;
    let density = mu.density_field().expect("gridded");
    let embedded = density.embed(&target)?;
    let n: Vec<usize> = target.resolution().to_vec();
    let shape: Vec<usize> = n.iter().map(|k| 2 * k).collect();
    let conv = Grid::new(
        (0..dim).map(|a| (0.0, 2.0 * n[a] as f64 * target.spacing(a))).collect(),
        shape.clone(),
    )?;
    let vol = target.cell_volume();
    let e = m as f64 - dim as f64;
    let self_value = self_cell_kernel(&target, m)? * vol;
    let h: Vec<f64> = (0..dim).map(|a| target.spacing(a)).collect();
    let mut kernel: Vec<Complex64> = (0..conv.len())
        .into_par_iter()
        .map(|k| {
            let idx = conv.unflatten(k);
            let mut d2 = 0.0;
            for a in 0..dim {
                let i = idx[a] as f64;
                let s = if idx[a] < n[a] { i } else { i - shape[a] as f64 };
                d2 += (s * h[a]) * (s * h[a]);
            }
            if d2 == 0.0 {
                Complex64::new(self_value, 0.0)
            } else {
                Complex64::new(d2.sqrt().powf(e) * vol / gamma_m, 0.0)
            }
        })
        .collect();
    fft_nd(&shape, &mut kernel, FftDirection::Forward);
    let total = conv.len() as f64;
    let components = embedded
        .components()
        .iter()
        .map(|c| {
            let mut buf = vec![Complex64::new(0.0, 0.0); conv.len()];
            for k in 0..target.len() {
                let idx = target.unflatten(k);
                buf[conv.flatten(&idx)] = c[k];
            }
            fft_nd(&shape, &mut buf, FftDirection::Forward);
            buf.iter_mut().zip(&kernel).for_each(|(b, k)| *b *= k);
            fft_nd(&shape, &mut buf, FftDirection::Inverse);
            (0..target.len())
                .map(|k| buf[conv.flatten(&target.unflatten(k))] / total)
                .collect()
        })
        .collect();
    Ok(GridField::new(target, components)?.with_padding_factor(2))
}

/// Point sources approximating a gridded measure away from its box:
/// blocks of cells lumped at their centroids, per component and part.
pub(crate) struct FarSources {
    dim_e: usize,
    /// `(component, imaginary part?, point, mass)`.
    sources: Vec<(usize, bool, Vec<f64>, f64)>,
}

impl FarSources {
    pub(crate) fn new(mu: &VectorMeasure, max_blocks_per_axis: usize) -> Self {
        let mut sources = Vec::new();
        match mu.kind() {
            MeasureKind::Atomic(_) => {
                for a in mu.atoms().unwrap() {
                    for (c, w) in a.weight.iter().enumerate() {
                        for (im, v) in [(false, w.re), (true, w.im)] {
                            if v > 0.0 {
                                sources.push((c, im, a.point.clone(), v));
                            }
                        }
                    }
                }
            }
            MeasureKind::Gridded(_) => {
                let grid = mu.grid().unwrap();
                let dim = grid.dim();
                let vol = grid.cell_volume();
                let b: Vec<usize> = grid
                    .resolution()
                    .iter()
                    .map(|&n| n.div_ceil(max_blocks_per_axis).max(1))
                    .collect();
                let blocks: Vec<usize> = grid.resolution().iter().zip(&b).map(|(n, b)| n.div_ceil(*b)).collect();
                let nb: usize = blocks.iter().product();
                for (c, dens) in mu.density().unwrap().iter().enumerate() {
                    for im in [false, true] {
                        let mut mass = vec![0.0; nb];
                        let mut moment = vec![vec![0.0; dim]; nb];
                        for (k, z) in dens.iter().enumerate() {
                            let v = if im { z.im } else { z.re } * vol;
                            if v == 0.0 {
                                continue;
                            }
                            let idx = grid.unflatten(k);
                            let bk = idx
                                .iter()
                                .zip(&b)
                                .zip(&blocks)
                                .fold(0, |acc, ((i, b), nb)| acc * nb + i / b);
                            let x = grid.point(k);
                            mass[bk] += v;
                            for a in 0..dim {
                                moment[bk][a] += v * x[a];
                            }
                        }
                        for (bk, m) in mass.iter().enumerate() {
                            if *m > 0.0 {
                                let p = moment[bk].iter().map(|s| s / m).collect();
                                sources.push((c, im, p, *m));
                            }
                        }
                    }
                }
            }
        }
        FarSources {
            dim_e: mu.dim_e(),
            sources,
        }
    }

    /// `sum_sources mass |x - p|^{m-N} / gamma`.
    pub(crate) fn potential(&self, x: &[f64], m: usize, gamma_m: f64) -> Vec<Complex64> {
        let e = m as f64 - x.len() as f64;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim_e];
        for (c, im, p, w) in &self.sources {
            let v = w * distance(p, x).powf(e) / gamma_m;
            if *im {
                out[*c].im += v;
            } else {
                out[*c].re += v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Atom;

    #[test]
    fn constants_by_gamma_oracle() {
        assert!((riesz_constant(2, 1).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!((riesz_constant(3, 2).unwrap() - 4.0 * PI).abs() < 1e-12);
        // pi^{3/2} 2 Gamma(1/2) / Gamma(1) = 2 pi^2
        assert!((riesz_constant(3, 1).unwrap() - 2.0 * PI * PI).abs() < 1e-11);
        assert!(matches!(riesz_constant(2, 2), Err(Error::OrderOutOfRange { .. })));
    }

    #[test]
    fn atomic_examples() {
        let d = VectorMeasure::dirac(vec![0.0, 0.0], 1.0).unwrap();
        let v = riesz_potential_atomic(&d, 1, &[1.0, 0.0]).unwrap();
        assert!((v.value[0].re - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let two = VectorMeasure::atomic(
            2,
            1,
            vec![
                Atom { point: vec![1.0, 0.0], weight: vec![Complex64::new(1.0, 0.0)] },
                Atom { point: vec![-1.0, 0.0], weight: vec![Complex64::new(1.0, 0.0)] },
            ],
        )
        .unwrap();
        let v = riesz_potential_atomic(&two, 1, &[0.0, 0.0]).unwrap();
        assert!((v.value[0].re - 1.0 / PI).abs() < 1e-15);
        let s = riesz_potential_atomic(&d, 1, &[0.0, 0.0]).unwrap();
        assert!(s.singular && s.value[0].re.is_infinite());
    }

    #[test]
    fn hot_cell_matches_point_mass() {
        let grid = Grid::cube(2, 1.0, 32).unwrap();
        let h = grid.spacing(0);
        let hot = grid.locate(&[0.5 * h, 0.5 * h]).unwrap();
        let mut dens = vec![Complex64::new(0.0, 0.0); grid.len()];
        dens[hot] = Complex64::new(1.0 / grid.cell_volume(), 0.0);
        let mu = VectorMeasure::gridded(grid.clone(), vec![dens]).unwrap();
        let pot = riesz_potential_grid(&mu, 1).unwrap();
        let c = grid.point(hot);
        for k in 0..grid.len() {
            let d = distance(&grid.point(k), &c);
            if d >= 3.0 * h {
                let exact = 1.0 / (2.0 * PI * d);
                assert!((pot.component(0)[k].re / exact - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn extended_potential_agrees_on_the_inner_box() {
        let grid = Grid::cube(2, 1.0, 16).unwrap();
        let mu = VectorMeasure::from_density_fn(grid.clone(), 1, |x| 1.0 + x[0] * x[0]).unwrap();
        let a = riesz_potential_grid(&mu, 1).unwrap();
        let b = riesz_potential_extended(&mu, 1, 2).unwrap().restrict(&grid).unwrap();
        for (x, y) in a.component(0).iter().zip(b.component(0)) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}
