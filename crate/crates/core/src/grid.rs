//! Uniform cell-centred grids on a periodised box and the spectral machinery
//! built on them.
//!
//! Transform convention: `f_hat(xi) = sum_j f(x_j) e^{-i xi . x_j}` up to the
//! cell volume, so `d/dx_j` becomes multiplication by `i xi_j`. Wavenumbers on
//! an axis of length `L` with `n` points are `2 pi k / L` for
//! `k = 0, 1, .., n/2, -n/2 + 1, .., -1`; the Nyquist index is kept on the
//! positive side, so multiplier identities hold mode by mode on every mode.

use crate::error::{Error, Result};
use crate::numerics::is_power_of_two;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};
use serde::Serialize;
use std::f64::consts::PI;

/// Geometry of a cell-centred grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    bounds: Vec<(f64, f64)>,
    resolution: Vec<usize>,
}

impl Grid {
    pub fn new(bounds: Vec<(f64, f64)>, resolution: Vec<usize>) -> Result<Self> {
        if bounds.is_empty() || bounds.len() != resolution.len() {
            return Err(Error::DimensionMismatch(format!(
                "grid has {} bounds and {} resolutions",
                bounds.len(),
                resolution.len()
            )));
        }
        for (a, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidArgument(format!(
                    "axis {a}: bounds ({lo}, {hi}) do not form an interval"
                )));
            }
        }
        if let Some(n) = resolution.iter().find(|n| !is_power_of_two(**n)) {
            return Err(Error::InvalidArgument(format!(
                "resolution {n} is not a power of two >= 2"
            )));
        }
        Ok(Grid { bounds, resolution })
    }

    /// The cube `[-half_width, half_width]^dim` with `n` cells per axis.
    pub fn cube(dim: usize, half_width: f64, n: usize) -> Result<Self> {
        Grid::new(vec![(-half_width, half_width); dim], vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        (hi - lo) / self.resolution[axis] as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn box_volume(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    /// Smallest half-width over the axes.
    pub fn min_half_width(&self) -> f64 {
        self.bounds
            .iter()
            .map(|(lo, hi)| 0.5 * (hi - lo))
            .fold(f64::INFINITY, f64::min)
    }

    /// Row-major multi-index of a flat index (last axis fastest).
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.resolution[a];
            flat /= self.resolution[a];
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.resolution)
            .fold(0, |acc, (i, n)| acc * n + i)
    }

    /// Centre of the cell with the given coordinate index along `axis`.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.bounds[axis].0 + (i as f64 + 0.5) * self.spacing(axis)
    }

    /// Centre of the cell with flat index `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.coordinate(a, i))
            .collect()
    }

    /// Every cell centre, in flat order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// Angular wavenumber of index `i` on `axis`.
    pub fn wavenumber(&self, axis: usize, i: usize) -> f64 {
        let n = self.resolution[axis];
        let k = if i <= n / 2 {
            i as f64
        } else {
            i as f64 - n as f64
        };
        let (lo, hi) = self.bounds[axis];
        2.0 * PI * k / (hi - lo)
    }

    /// Frequency vector of flat mode index `flat`.
    pub fn frequency(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.wavenumber(a, i))
            .collect()
    }

    /// The box enlarged by `factor` about its centre with the same spacing.
    pub fn padded(&self, factor: usize) -> Result<Grid> {
        if factor == 0 {
            return Err(Error::InvalidArgument("padding factor must be >= 1".into()));
        }
        let bounds = self
            .bounds
            .iter()
            .map(|&(lo, hi)| {
                let c = 0.5 * (lo + hi);
                let h = 0.5 * (hi - lo) * factor as f64;
                (c - h, c + h)
            })
            .collect();
        let resolution = self.resolution.iter().map(|n| n * factor).collect();
        Grid::new(bounds, resolution)
    }

    /// Same box, `factor` times as many cells per axis.
    pub fn refined(&self, factor: usize) -> Result<Grid> {
        Grid::new(
            self.bounds.clone(),
            self.resolution.iter().map(|n| n * factor).collect(),
        )
    }

    /// Flat index of the cell containing `x`, if inside the box.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut idx = Vec::with_capacity(self.dim());
        for (a, &xa) in x.iter().enumerate() {
            let (lo, hi) = self.bounds[a];
            if xa < lo || xa >= hi {
                return None;
            }
            let i = ((xa - lo) / self.spacing(a)).floor() as usize;
            idx.push(i.min(self.resolution[a] - 1));
        }
        Some(self.flatten(&idx))
    }

    /// Position of this grid's cells inside `outer`, which must share the
    /// spacing and contain this box with cell boundaries aligned.
    pub fn offset_in(&self, outer: &Grid) -> Result<Vec<usize>> {
        if outer.dim() != self.dim() {
            return Err(Error::DimensionMismatch("grid dimensions differ".into()));
        }
        let mut offset = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let h = self.spacing(a);
            if (outer.spacing(a) - h).abs() > 1e-12 * h {
                return Err(Error::DimensionMismatch("grid spacings differ".into()));
            }
            let shift = (self.bounds[a].0 - outer.bounds[a].0) / h;
            let s = shift.round();
            if (shift - s).abs() > 1e-9 || s < 0.0 || s as usize + self.resolution[a] > outer.resolution[a] {
                return Err(Error::DimensionMismatch("grids are not aligned".into()));
            }
            offset.push(s as usize);
        }
        Ok(offset)
    }

    pub fn same_geometry(&self, other: &Grid) -> bool {
        self.resolution == other.resolution
            && self
                .bounds
                .iter()
                .zip(&other.bounds)
                .all(|(a, b)| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12)
    }
}

/// Vector-valued samples on a [`Grid`], stored component by component.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Grid,
    components: Vec<Vec<Complex64>>,
    padding_factor: usize,
}

impl GridField {
    pub fn new(grid: Grid, components: Vec<Vec<Complex64>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::DimensionMismatch("field needs at least one component".into()));
        }
        for c in &components {
            if c.len() != grid.len() {
                return Err(Error::DimensionMismatch(format!(
                    "component has {} samples, grid has {}",
                    c.len(),
                    grid.len()
                )));
            }
            if c.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::Numerical("field samples must be finite".into()));
            }
        }
        Ok(GridField {
            grid,
            components,
            padding_factor: 1,
        })
    }

    pub fn zeros(grid: Grid, value_dim: usize) -> Self {
        let n = grid.len();
        GridField {
            grid,
            components: vec![vec![Complex64::new(0.0, 0.0); n]; value_dim],
            padding_factor: 1,
        }
    }

    /// Sample a function at every cell centre.
    pub fn from_fn(grid: Grid, value_dim: usize, f: impl Fn(&[f64]) -> Vec<Complex64> + Sync) -> Result<Self> {
        let values: Vec<Vec<Complex64>> = (0..grid.len())
            .into_par_iter()
            .map(|k| f(&grid.point(k)))
            .collect();
        let mut components = vec![Vec::with_capacity(grid.len()); value_dim];
        for v in values {
            if v.len() != value_dim {
                return Err(Error::DimensionMismatch("sampled function has wrong value dimension".into()));
            }
            for (c, z) in components.iter_mut().zip(v) {
                c.push(z);
            }
        }
        GridField::new(grid, components)
    }

    /// Sample a real scalar function.
    pub fn from_real_fn(grid: Grid, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<Self> {
        GridField::from_fn(grid, 1, |x| vec![Complex64::new(f(x), 0.0)])
    }

    pub fn with_padding_factor(mut self, factor: usize) -> Self {
        self.padding_factor = factor;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn value_dim(&self) -> usize {
        self.components.len()
    }

    pub fn padding_factor(&self) -> usize {
        self.padding_factor
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.components[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.components
    }

    /// Vector value at flat index `k`.
    pub fn value(&self, k: usize) -> Vec<Complex64> {
        self.components.iter().map(|c| c[k]).collect()
    }

    /// Euclidean norm of the value at flat index `k`.
    pub fn magnitude(&self, k: usize) -> f64 {
        self.components.iter().map(|c| c[k].norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|k| self.magnitude(k)).collect()
    }

    /// `(int |f|^p dx)^{1/p}` by the cell rule; `p = inf` gives the grid max.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.magnitudes().into_iter().fold(0.0, f64::max);
        }
        let vol = self.grid.cell_volume();
        let s: f64 = self.magnitudes().iter().map(|m| m.powf(p)).sum();
        (s * vol).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0)
    }

    /// `int conj(self) . other dx` by the cell rule.
    pub fn inner(&self, other: &GridField) -> Complex64 {
        let vol = self.grid.cell_volume();
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>())
            .sum::<Complex64>()
            * vol
    }

    /// Mean of every component over the box.
    pub fn mean(&self) -> Vec<Complex64> {
        let n = self.grid.len() as f64;
        self.components
            .iter()
            .map(|c| c.iter().sum::<Complex64>() / n)
            .collect()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> GridField {
        GridField {
            grid: self.grid.clone(),
            components: self
                .components
                .iter()
                .map(|c| c.iter().map(|z| f(*z)).collect())
                .collect(),
            padding_factor: self.padding_factor,
        }
    }

    pub fn scale(&self, s: f64) -> GridField {
        self.map(|z| z * s)
    }

    /// `self - other`, requiring matching shapes.
    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &GridField) -> Result<GridField> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &GridField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<GridField> {
        if !self.grid.same_geometry(&other.grid) || self.value_dim() != other.value_dim() {
            return Err(Error::DimensionMismatch("fields have different shapes".into()));
        }
        Ok(GridField {
            grid: self.grid.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
                .collect(),
            padding_factor: self.padding_factor,
        })
    }

    /// Subtract the box mean from every component.
    pub fn mean_removed(&self) -> GridField {
        let mean = self.mean();
        GridField {
            grid: self.grid.clone(),
            components: self
                .components
                .iter()
                .zip(mean)
                .map(|(c, m)| c.iter().map(|z| z - m).collect())
                .collect(),
            padding_factor: self.padding_factor,
        }
    }

    /// Embed into a larger aligned grid, zero outside.
    pub fn embed(&self, outer: &Grid) -> Result<GridField> {
        let offset = self.grid.offset_in(outer)?;
        let mut out = GridField::zeros(outer.clone(), self.value_dim());
        for k in 0..self.grid.len() {
            let idx: Vec<usize> = self
                .grid
                .unflatten(k)
                .iter()
                .zip(&offset)
                .map(|(i, o)| i + o)
                .collect();
            let j = outer.flatten(&idx);
            for (dst, src) in out.components.iter_mut().zip(&self.components) {
                dst[j] = src[k];
            }
        }
        out.padding_factor = self.padding_factor;
        Ok(out)
    }

    /// Restrict to an aligned sub-grid.
    pub fn restrict(&self, inner: &Grid) -> Result<GridField> {
        let offset = inner.offset_in(&self.grid)?;
        let components = self
            .components
            .iter()
            .map(|src| {
                (0..inner.len())
                    .map(|k| {
                        let idx: Vec<usize> = inner
                            .unflatten(k)
                            .iter()
                            .zip(&offset)
                            .map(|(i, o)| i + o)
                            .collect();
                        src[self.grid.flatten(&idx)]
                    })
                    .collect()
            })
            .collect();
        Ok(GridField {
            grid: inner.clone(),
            components,
            padding_factor: self.padding_factor,
        })
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum::of(self)
    }

    /// Fraction of spectral energy above two thirds of the Nyquist index on
    /// any axis; large values signal aliasing.
    pub fn high_band_fraction(&self) -> f64 {
        let spec = self.spectrum();
        let grid = &self.grid;
        let mut high = 0.0;
        let mut total = 0.0;
        for k in 0..grid.len() {
            let idx = grid.unflatten(k);
            let is_high = idx.iter().zip(grid.resolution()).any(|(&i, &n)| {
                let ki = if i <= n / 2 { i } else { n - i };
                3 * ki > n
            });
            let e: f64 = spec.data.iter().map(|c| c[k].norm_sqr()).sum();
            total += e;
            if is_high {
                high += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            high / total
        }
    }

    /// Trigonometric interpolation at an arbitrary point (exact for
    /// band-limited fields).
    pub fn interpolate(&self, x: &[f64]) -> Vec<Complex64> {
        self.spectrum().evaluate(x)
    }
}

/// Discrete Fourier coefficients of a [`GridField`], one array per component.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub grid: Grid,
    pub data: Vec<Vec<Complex64>>,
}

impl Spectrum {
    pub fn of(field: &GridField) -> Self {
        let data = field
            .components
            .iter()
            .map(|c| {
                let mut d = c.clone();
                fft_nd(field.grid.resolution(), &mut d, FftDirection::Forward);
                d
            })
            .collect();
        Spectrum {
            grid: field.grid.clone(),
            data,
        }
    }

    pub fn zeros(grid: Grid, value_dim: usize) -> Self {
        let n = grid.len();
        Spectrum {
            grid,
            data: vec![vec![Complex64::new(0.0, 0.0); n]; value_dim],
        }
    }

    pub fn value_dim(&self) -> usize {
        self.data.len()
    }

    /// Inverse transform back to samples.
    pub fn to_field(&self) -> GridField {
        let n = self.grid.len() as f64;
        let components = self
            .data
            .iter()
            .map(|c| {
                let mut d = c.clone();
                fft_nd(self.grid.resolution(), &mut d, FftDirection::Inverse);
                d.iter_mut().for_each(|z| *z /= n);
                d
            })
            .collect();
        GridField {
            grid: self.grid.clone(),
            components,
            padding_factor: 1,
        }
    }

    /// Apply a mode-wise linear map `out = M(xi) in`.
    ///
    /// `multiplier(xi, input, output)` receives the input vector at one mode
    /// and fills the output vector of length `out_dim`.
    pub fn apply(
        &self,
        out_dim: usize,
        multiplier: impl Fn(&[f64], &[Complex64], &mut [Complex64]) + Sync,
    ) -> Spectrum {
        let n = self.grid.len();
        let in_dim = self.value_dim();
        let mut mode_major = vec![Complex64::new(0.0, 0.0); n * out_dim];
        mode_major
            .par_chunks_mut(out_dim.max(1))
            .enumerate()
            .for_each(|(k, out)| {
                let xi = self.grid.frequency(k);
                let input: Vec<Complex64> = (0..in_dim).map(|c| self.data[c][k]).collect();
                multiplier(&xi, &input, out);
            });
        let mut data = vec![vec![Complex64::new(0.0, 0.0); n]; out_dim];
        for (k, chunk) in mode_major.chunks(out_dim.max(1)).enumerate() {
            for (c, z) in chunk.iter().enumerate() {
                data[c][k] = *z;
            }
        }
        Spectrum {
            grid: self.grid.clone(),
            data,
        }
    }

    /// Evaluate the trigonometric interpolant at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Vec<Complex64> {
        let grid = &self.grid;
        let n = grid.len() as f64;
        // Phases are relative to the first cell centre.
        let origin: Vec<f64> = (0..grid.dim()).map(|a| grid.coordinate(a, 0)).collect();
        let per_axis: Vec<Vec<Complex64>> = (0..grid.dim())
            .map(|a| {
                (0..grid.resolution()[a])
                    .map(|i| {
                        let phase = grid.wavenumber(a, i) * (x[a] - origin[a]);
                        Complex64::from_polar(1.0, phase)
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); self.value_dim()];
        for k in 0..grid.len() {
            let idx = grid.unflatten(k);
            let mut e = Complex64::new(1.0, 0.0);
            for (a, &i) in idx.iter().enumerate() {
                e *= per_axis[a][i];
            }
            for (o, c) in out.iter_mut().zip(&self.data) {
                *o += c[k] * e;
            }
        }
        out.iter_mut().for_each(|z| *z /= n);
        out
    }
}

/// In-place multidimensional FFT of row-major `data` with the given shape.
/// Unnormalised in both directions.
pub fn fft_nd(shape: &[usize], data: &mut [Complex64], direction: FftDirection) {
    let total: usize = shape.iter().product();
    assert_eq!(total, data.len());
    let mut planner = FftPlanner::<f64>::new();
    let mut stride = 1;
    for axis in (0..shape.len()).rev() {
        let n = shape[axis];
        let fft = planner.plan_fft(n, direction);
        if stride == 1 {
            fft.process(data);
        } else {
            let block = n * stride;
            data.par_chunks_mut(block).for_each(|chunk| {
                let mut line = vec![Complex64::new(0.0, 0.0); n * stride];
                // gather: line[s * n + i] = chunk[i * stride + s]
                for i in 0..n {
                    for s in 0..stride {
                        line[s * n + i] = chunk[i * stride + s];
                    }
                }
                fft.process(&mut line);
                for i in 0..n {
                    for s in 0..stride {
                        chunk[i * stride + s] = line[s * n + i];
                    }
                }
            });
        }
        stride *= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> Grid {
        Grid::cube(2, PI, n).unwrap()
    }

    #[test]
    fn rejects_bad_resolution() {
        assert!(Grid::new(vec![(0.0, 1.0)], vec![12]).is_err());
        assert!(Grid::new(vec![(1.0, 0.0)], vec![8]).is_err());
        assert!(Grid::new(vec![(0.0, 1.0)], vec![8, 8]).is_err());
    }

    #[test]
    fn flat_index_round_trip() {
        let g = Grid::new(vec![(0.0, 1.0), (0.0, 2.0), (0.0, 3.0)], vec![4, 8, 2]).unwrap();
        for k in 0..g.len() {
            assert_eq!(g.flatten(&g.unflatten(k)), k);
        }
    }

    #[test]
    fn forward_inverse_identity() {
        let g = Grid::new(vec![(0.0, 1.0), (0.0, 2.0), (-1.0, 1.0)], vec![8, 4, 16]).unwrap();
        let f = GridField::from_fn(g, 2, |x| {
            vec![
                Complex64::new(x[0].sin() + x[2], x[1]),
                Complex64::new((3.0 * x[1]).cos(), -x[0] * x[2]),
            ]
        })
        .unwrap();
        let back = f.spectrum().to_field();
        for (a, b) in f.components().iter().zip(back.components()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn single_mode_lands_on_its_wavenumber() {
        let g = square(16);
        let f = GridField::from_fn(g.clone(), 1, |x| vec![Complex64::from_polar(1.0, 3.0 * x[0] - 2.0 * x[1])]).unwrap();
        let s = f.spectrum();
        let (best, _) = s.data[0]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap();
        assert_eq!(g.frequency(best), vec![3.0, -2.0]);
    }

    #[test]
    fn interpolation_is_exact_for_band_limited() {
        let g = square(16);
        let f = GridField::from_real_fn(g, |x| (2.0 * x[0]).cos() * x[1].sin()).unwrap();
        let x = [0.3, -1.1];
        let v = f.interpolate(&x);
        assert!((v[0].re - (0.6f64).cos() * (-1.1f64).sin()).abs() < 1e-12);
        assert!(v[0].im.abs() < 1e-12);
    }

    #[test]
    fn embed_restrict_round_trip() {
        let g = square(8);
        let big = g.padded(2).unwrap();
        let f = GridField::from_real_fn(g.clone(), |x| x[0] + 2.0 * x[1]).unwrap();
        let e = f.embed(&big).unwrap();
        assert_eq!(e.restrict(&g).unwrap(), f);
        assert!((e.lp_norm(1.0) - f.lp_norm(1.0)).abs() < 1e-12);
    }

    #[test]
    fn lp_norms_of_constant() {
        let g = Grid::cube(2, 1.0, 8).unwrap();
        let f = GridField::from_real_fn(g, |_| 2.0).unwrap();
        assert!((f.lp_norm(1.0) - 8.0).abs() < 1e-12);
        assert!((f.lp_norm(2.0) - 4.0).abs() < 1e-12);
        assert!((f.lp_norm(f64::INFINITY) - 2.0).abs() < 1e-15);
    }
}
