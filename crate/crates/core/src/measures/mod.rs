//! Vector measures with values in `E*` and positive real and imaginary
//! parts, either finitely atomic or given by a density on a grid.
//!
//! Every component is `mu_l = mu_l^Re + i mu_l^Im` with both parts positive,
//! so `|mu_l| = mu_l^Re + mu_l^Im` and `|mu| = sum_l |mu_l|`. Gridded
//! measures vanish outside their box.

pub mod doc;
pub mod regularity;

pub use doc::{parse_measure, MeasureDocument};
pub use regularity::{
    ahlfors_constant, default_centers, default_y_sample, origin_ahlfors, regularity_report, wolff_condition, wolff_potential,
    FunctionalEstimate, RadiusSample, RegularityReport, WolffQuadrature,
};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridField};
use crate::numerics::{distance, unit_ball_volume};
use num_complex::Complex64;
use rayon::prelude::*;

/// Balls whose radius is at most this many cells use the rescaled
/// stratified rule.
const SMALL_BALL_CELLS: f64 = 2.0;
/// Points per diameter in the small-ball rule.
const SMALL_BALL_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: Vec<f64>,
    pub weight: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
    /// Atom indices sorted by first coordinate.
    by_first: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GriddedMeasure {
    grid: Grid,
    density: Vec<Vec<Complex64>>,
    /// Per line along the last axis, running sums of cell masses.
    prefix: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureKind {
    Atomic(AtomicMeasure),
    Gridded(GriddedMeasure),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorMeasure {
    dim: usize,
    dim_e: usize,
    kind: MeasureKind,
}

fn check_positive(z: &Complex64, what: &str) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Malformed(format!("{what} is not finite")));
    }
    if z.re < 0.0 || z.im < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{what} = {z} has a negative part; real and imaginary parts must be >= 0"
        )));
    }
    Ok(())
}

impl VectorMeasure {
    pub fn atomic(dim: usize, dim_e: usize, atoms: Vec<Atom>) -> Result<Self> {
        if dim < 2 || dim_e == 0 {
            return Err(Error::DimensionMismatch(format!("N = {dim}, dimE = {dim_e}")));
        }
        for (k, a) in atoms.iter().enumerate() {
            if a.point.len() != dim || a.weight.len() != dim_e {
                return Err(Error::DimensionMismatch(format!(
                    "atom {k} has a {}-point and a {}-weight",
                    a.point.len(),
                    a.weight.len()
                )));
            }
            if a.point.iter().any(|x| !x.is_finite()) {
                return Err(Error::Malformed(format!("atom {k} location is not finite")));
            }
            for w in &a.weight {
                check_positive(w, &format!("atom {k} weight"))?;
            }
        }
        let mut by_first: Vec<usize> = (0..atoms.len()).collect();
        by_first.sort_by(|&a, &b| atoms[a].point[0].partial_cmp(&atoms[b].point[0]).unwrap().then(a.cmp(&b)));
        Ok(VectorMeasure {
            dim,
            dim_e,
            kind: MeasureKind::Atomic(AtomicMeasure { atoms, by_first }),
        })
    }

    /// Unit point mass at `x` with a real scalar weight.
    pub fn dirac(x: Vec<f64>, mass: f64) -> Result<Self> {
        let dim = x.len();
        VectorMeasure::atomic(
            dim,
            1,
            vec![Atom {
                point: x,
                weight: vec![Complex64::new(mass, 0.0)],
            }],
        )
    }

    /// Density samples per component, one value per cell.
    pub fn gridded(grid: Grid, density: Vec<Vec<Complex64>>) -> Result<Self> {
        if density.is_empty() {
            return Err(Error::DimensionMismatch("measure needs dimE >= 1".into()));
        }
        for c in &density {
            if c.len() != grid.len() {
                return Err(Error::DimensionMismatch(format!(
                    "density has {} samples, grid has {}",
                    c.len(),
                    grid.len()
                )));
            }
            for z in c {
                check_positive(z, "density")?;
            }
        }
        let dim = grid.dim();
        if dim < 2 {
            return Err(Error::DimensionMismatch("measures live in R^N with N >= 2".into()));
        }
        let dim_e = density.len();
        let vol = grid.cell_volume();
        let n_last = grid.resolution()[dim - 1];
        let prefix = density
            .iter()
            .map(|c| {
                let mut p = Vec::with_capacity(c.len() + c.len() / n_last);
                for line in c.chunks(n_last) {
                    let mut acc = Complex64::new(0.0, 0.0);
                    p.push(acc);
                    for z in line {
                        acc += z * vol;
                        p.push(acc);
                    }
                }
                p
            })
            .collect();
        Ok(VectorMeasure {
            dim,
            dim_e,
            kind: MeasureKind::Gridded(GriddedMeasure {
                grid,
                density,
                prefix,
            }),
        })
    }

    /// Real scalar density averaged over `sub^N` points per cell, which
    /// tames integrable singularities at cell corners.
    pub fn from_density_fn(grid: Grid, sub: usize, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<Self> {
        let sub = sub.max(1);
        let dim = grid.dim();
        let h: Vec<f64> = (0..dim).map(|a| grid.spacing(a)).collect();
        let offsets = lattice_offsets(dim, sub);
        let values: Vec<Complex64> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let c = grid.point(k);
                let s: f64 = offsets
                    .iter()
                    .map(|o| {
                        let y: Vec<f64> = (0..dim).map(|a| c[a] + o[a] * h[a]).collect();
                        f(&y)
                    })
                    .sum();
                Complex64::new(s / offsets.len() as f64, 0.0)
            })
            .collect();
        VectorMeasure::gridded(grid, vec![values])
    }

    /// Scalar uniform density on the ball `B(center, radius)` with total mass
    /// `mass`, using the cell-overlap fractions so the mass is exact.
    pub fn uniform_ball(grid: Grid, center: &[f64], radius: f64, mass: f64) -> Result<Self> {
        let vol = grid.cell_volume();
        let frac: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|k| cell_overlap_fraction(&grid, k, center, radius, 8))
            .collect();
        let total: f64 = frac.iter().sum::<f64>() * vol;
        if total <= 0.0 {
            return Err(Error::InvalidArgument("ball misses the grid".into()));
        }
        let density = frac.iter().map(|f| Complex64::new(f * mass / total, 0.0)).collect();
        VectorMeasure::gridded(grid, vec![density])
    }

    /// The measure whose density is a field's magnitude componentwise split
    /// into positive real and imaginary parts. Fails if a part is negative.
    pub fn from_field(field: &GridField) -> Result<Self> {
        VectorMeasure::gridded(field.grid().clone(), field.components().to_vec())
    }

    pub fn zero_gridded(grid: Grid, dim_e: usize) -> Result<Self> {
        let n = grid.len();
        VectorMeasure::gridded(grid, vec![vec![Complex64::new(0.0, 0.0); n]; dim_e])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn atoms(&self) -> Option<&[Atom]> {
        match &self.kind {
            MeasureKind::Atomic(a) => Some(&a.atoms),
            MeasureKind::Gridded(_) => None,
        }
    }

    pub fn grid(&self) -> Option<&Grid> {
        match &self.kind {
            MeasureKind::Gridded(g) => Some(&g.grid),
            MeasureKind::Atomic(_) => None,
        }
    }

    /// Density per component (gridded only).
    pub fn density(&self) -> Option<&[Vec<Complex64>]> {
        match &self.kind {
            MeasureKind::Gridded(g) => Some(&g.density),
            MeasureKind::Atomic(_) => None,
        }
    }

    /// Density as a grid field (gridded only).
    pub fn density_field(&self) -> Option<GridField> {
        match &self.kind {
            MeasureKind::Gridded(g) => GridField::new(g.grid.clone(), g.density.clone()).ok(),
            MeasureKind::Atomic(_) => None,
        }
    }

    /// Characteristic length: box half-width, or the atom spread.
    pub fn scale(&self) -> f64 {
        match &self.kind {
            MeasureKind::Gridded(g) => g
                .grid
                .bounds()
                .iter()
                .map(|(lo, hi)| lo.abs().max(hi.abs()))
                .fold(0.0, f64::max),
            MeasureKind::Atomic(a) => {
                let s = a
                    .atoms
                    .iter()
                    .map(|at| crate::numerics::norm(&at.point))
                    .fold(0.0, f64::max);
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            }
        }
    }

    /// `mu(R^N)` per component.
    pub fn total(&self) -> Vec<Complex64> {
        match &self.kind {
            MeasureKind::Atomic(a) => {
                let mut out = vec![Complex64::new(0.0, 0.0); self.dim_e];
                for at in &a.atoms {
                    for (o, w) in out.iter_mut().zip(&at.weight) {
                        *o += w;
                    }
                }
                out
            }
            MeasureKind::Gridded(g) => {
                let vol = g.grid.cell_volume();
                g.density
                    .iter()
                    .map(|c| c.iter().sum::<Complex64>() * vol)
                    .collect()
            }
        }
    }

    /// `|mu|(R^N)`.
    pub fn total_mass(&self) -> f64 {
        self.total().iter().map(|z| z.re + z.im).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.total_mass() == 0.0
    }

    /// `c mu` for `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale {c} must be >= 0")));
        }
        match &self.kind {
            MeasureKind::Atomic(a) => VectorMeasure::atomic(
                self.dim,
                self.dim_e,
                a.atoms
                    .iter()
                    .map(|at| Atom {
                        point: at.point.clone(),
                        weight: at.weight.iter().map(|w| w * c).collect(),
                    })
                    .collect(),
            ),
            MeasureKind::Gridded(g) => VectorMeasure::gridded(
                g.grid.clone(),
                g.density.iter().map(|d| d.iter().map(|z| z * c).collect()).collect(),
            ),
        }
    }

    /// `mu + nu` for measures of the same kind (and grid).
    pub fn add(&self, other: &VectorMeasure) -> Result<Self> {
        if self.dim != other.dim || self.dim_e != other.dim_e {
            return Err(Error::DimensionMismatch("measures have different shapes".into()));
        }
        match (&self.kind, &other.kind) {
            (MeasureKind::Atomic(a), MeasureKind::Atomic(b)) => {
                let mut atoms = a.atoms.clone();
                atoms.extend(b.atoms.iter().cloned());
                VectorMeasure::atomic(self.dim, self.dim_e, atoms)
            }
            (MeasureKind::Gridded(a), MeasureKind::Gridded(b)) if a.grid.same_geometry(&b.grid) => {
                VectorMeasure::gridded(
                    a.grid.clone(),
                    a.density
                        .iter()
                        .zip(&b.density)
                        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
                        .collect(),
                )
            }
            _ => Err(Error::DimensionMismatch(
                "can only add measures of the same kind on the same grid".into(),
            )),
        }
    }

    /// `mu(B(x, r))` per component; open ball.
    pub fn ball_mass(&self, x: &[f64], r: f64) -> Vec<Complex64> {
        if !(r > 0.0) {
            return vec![Complex64::new(0.0, 0.0); self.dim_e];
        }
        match &self.kind {
            MeasureKind::Atomic(a) => atomic_ball_mass(a, self.dim_e, x, r),
            MeasureKind::Gridded(g) => gridded_ball_mass(g, x, r),
        }
    }

    /// `|mu|(B(x, r))`.
    pub fn ball_variation(&self, x: &[f64], r: f64) -> f64 {
        self.ball_mass(x, r).iter().map(|z| z.re + z.im).sum()
    }
}

/// `|mu| = sum_l (mu_l^Re + mu_l^Im)` as a scalar measure with real weights.
pub fn total_variation(mu: &VectorMeasure) -> VectorMeasure {
    let var = |w: &[Complex64]| Complex64::new(w.iter().map(|z| z.re + z.im).sum(), 0.0);
    let out = match &mu.kind {
        MeasureKind::Atomic(a) => VectorMeasure::atomic(
            mu.dim,
            1,
            a.atoms
                .iter()
                .map(|at| Atom {
                    point: at.point.clone(),
                    weight: vec![var(&at.weight)],
                })
                .collect(),
        ),
        MeasureKind::Gridded(g) => {
            let n = g.grid.len();
            let d: Vec<Complex64> = (0..n)
                .map(|k| var(&g.density.iter().map(|c| c[k]).collect::<Vec<_>>()))
                .collect();
            VectorMeasure::gridded(g.grid.clone(), vec![d])
        }
    };
    out.expect("variation of a valid measure is valid")
}

fn atomic_ball_mass(a: &AtomicMeasure, dim_e: usize, x: &[f64], r: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); dim_e];
    let first = |k: usize| a.atoms[a.by_first[k]].point[0];
    let start = a.by_first.partition_point(|&i| a.atoms[i].point[0] <= x[0] - r);
    let mut k = start;
    while k < a.by_first.len() && first(k) < x[0] + r {
        let at = &a.atoms[a.by_first[k]];
        if distance(&at.point, x) < r {
            for (o, w) in out.iter_mut().zip(&at.weight) {
                *o += w;
            }
        }
        k += 1;
    }
    out
}

/// Distances from `x` to every atom with the atom's variation, sorted by
/// distance.
pub(crate) fn atom_distances(mu: &VectorMeasure, x: &[f64]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = mu
        .atoms()
        .unwrap_or(&[])
        .iter()
        .map(|a| (distance(&a.point, x), a.weight.iter().map(|z| z.re + z.im).sum()))
        .filter(|(_, w)| *w > 0.0)
        .collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn lattice_offsets(dim: usize, s: usize) -> Vec<Vec<f64>> {
    let total = s.pow(dim as u32);
    (0..total)
        .map(|mut k| {
            (0..dim)
                .map(|_| {
                    let i = k % s;
                    k /= s;
                    (i as f64 + 0.5) / s as f64 - 0.5
                })
                .collect()
        })
        .collect()
}

fn cell_overlap_fraction(grid: &Grid, k: usize, x: &[f64], r: f64, s: usize) -> f64 {
    let c = grid.point(k);
    let dim = grid.dim();
    let offsets = lattice_offsets(dim, s);
    let inside = offsets
        .iter()
        .filter(|o| {
            (0..dim)
                .map(|a| {
                    let y = c[a] + o[a] * grid.spacing(a) - x[a];
                    y * y
                })
                .sum::<f64>()
                < r * r
        })
        .count();
    inside as f64 / offsets.len() as f64
}

fn gridded_ball_mass(g: &GriddedMeasure, x: &[f64], r: f64) -> Vec<Complex64> {
    let grid = &g.grid;
    let dim = grid.dim();
    let h_max = grid.max_spacing();
    if r <= SMALL_BALL_CELLS * h_max {
        return small_ball_mass(g, x, r);
    }
    let dim_e = g.density.len();
    let mut out = vec![Complex64::new(0.0, 0.0); dim_e];
    let vol = grid.cell_volume();
    let last = dim - 1;
    let n_last = grid.resolution()[last];
    let h_last = grid.spacing(last);
    let lo_last = grid.bounds()[last].0;
    let s = ((24.0 * h_max / r).ceil() as usize).clamp(3, 12);
    let offsets = lattice_offsets(dim, s);

    // Index ranges of cells meeting the bounding box on transverse axes.
    let mut ranges = Vec::with_capacity(last);
    for a in 0..last {
        let (lo, _) = grid.bounds()[a];
        let h = grid.spacing(a);
        let n = grid.resolution()[a] as i64;
        let i0 = (((x[a] - r - lo) / h).floor() as i64).max(0);
        let i1 = (((x[a] + r - lo) / h).floor() as i64).min(n - 1);
        if i0 > i1 {
            return out;
        }
        ranges.push((i0 as usize, i1 as usize));
    }
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    let r2 = r * r;
    loop {
        let mut d_min2 = 0.0;
        let mut d_max2 = 0.0;
        for a in 0..last {
            let (lo, _) = grid.bounds()[a];
            let h = grid.spacing(a);
            let a0 = lo + idx[a] as f64 * h;
            let a1 = a0 + h;
            let near = if x[a] < a0 {
                a0 - x[a]
            } else if x[a] > a1 {
                x[a] - a1
            } else {
                0.0
            };
            let far = (x[a] - a0).abs().max((x[a] - a1).abs());
            d_min2 += near * near;
            d_max2 += far * far;
        }
        if d_min2 < r2 {
            let c = x[last];
            let w_part = (r2 - d_min2).sqrt();
            let p0 = (((c - w_part - lo_last) / h_last).floor() as i64).max(0);
            let p1 = (((c + w_part - lo_last) / h_last).floor() as i64).min(n_last as i64 - 1);
            if p0 <= p1 {
                let (f0, f1) = if d_max2 < r2 {
                    let w_full = (r2 - d_max2).sqrt();
                    let f0 = (((c - w_full - lo_last) / h_last).ceil() as i64).max(p0);
                    let f1 = ((((c + w_full - lo_last) / h_last).floor() as i64) - 1).min(p1);
                    (f0, f1)
                } else {
                    (1, 0)
                };
                let mut line_idx = idx.clone();
                line_idx.push(0);
                let line = grid.flatten(&line_idx) / n_last;
                if f0 <= f1 {
                    let base = line * (n_last + 1);
                    for (o, p) in out.iter_mut().zip(&g.prefix) {
                        *o += p[base + f1 as usize + 1] - p[base + f0 as usize];
                    }
                }
                for i in p0..=p1 {
                    if f0 <= f1 && i >= f0 && i <= f1 {
                        continue;
                    }
                    let k = line * n_last + i as usize;
                    let cell = grid.point(k);
                    let inside = offsets
                        .iter()
                        .filter(|o| {
                            (0..dim)
                                .map(|a| {
                                    let y = cell[a] + o[a] * grid.spacing(a) - x[a];
                                    y * y
                                })
                                .sum::<f64>()
                                < r2
                        })
                        .count();
                    if inside > 0 {
                        let frac = inside as f64 / offsets.len() as f64;
                        for (o, d) in out.iter_mut().zip(&g.density) {
                            *o += d[k] * (frac * vol);
                        }
                    }
                }
            }
        }
        // Advance the transverse odometer.
        let mut a = last;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if idx[a] < ranges[a].1 {
                idx[a] += 1;
                for b in a + 1..last {
                    idx[b] = ranges[b].0;
                }
                break;
            }
        }
    }
}

/// Ball small compared with the cells: average the piecewise-constant
/// density over a lattice inside the ball and multiply by the exact volume.
fn small_ball_mass(g: &GriddedMeasure, x: &[f64], r: f64) -> Vec<Complex64> {
    let dim = g.grid.dim();
    let n = SMALL_BALL_POINTS;
    let mut acc = vec![Complex64::new(0.0, 0.0); g.density.len()];
    let mut count = 0usize;
    let total = n.pow(dim as u32);
    for mut k in 0..total {
        let mut y = Vec::with_capacity(dim);
        let mut d2 = 0.0;
        for a in 0..dim {
            let t = -1.0 + (2.0 * (k % n) as f64 + 1.0) / n as f64;
            k /= n;
            d2 += t * t;
            y.push(x[a] + r * t);
        }
        if d2 >= 1.0 {
            continue;
        }
        count += 1;
        if let Some(cell) = g.grid.locate(&y) {
            for (o, d) in acc.iter_mut().zip(&g.density) {
                *o += d[cell];
            }
        }
    }
    let ball = unit_ball_volume(dim) * r.powi(dim as i32);
    acc.iter().map(|z| z * (ball / count as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn variation_examples() {
        let one = VectorMeasure::atomic(
            2,
            2,
            vec![Atom {
                point: vec![0.0, 0.0],
                weight: vec![c(1.0, 1.0), c(0.0, 0.0)],
            }],
        )
        .unwrap();
        assert_eq!(total_variation(&one).total_mass(), 2.0);
        let two = VectorMeasure::atomic(
            2,
            2,
            vec![
                Atom { point: vec![0.0, 0.0], weight: vec![c(1.0, 0.0), c(0.0, 0.0)] },
                Atom { point: vec![1.0, 0.0], weight: vec![c(0.0, 0.0), c(3.0, 0.0)] },
            ],
        )
        .unwrap();
        assert_eq!(two.total_mass(), 4.0);
        assert_eq!(VectorMeasure::atomic(2, 1, vec![]).unwrap().total_mass(), 0.0);
    }

    #[test]
    fn negative_parts_are_rejected() {
        let bad = VectorMeasure::atomic(
            2,
            1,
            vec![Atom { point: vec![0.0, 0.0], weight: vec![c(-1.0, 0.0)] }],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn dirac_ball_masses() {
        let d = VectorMeasure::dirac(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(d.ball_mass(&[0.0, 0.0], 1.0)[0], c(1.0, 0.0));
        assert_eq!(d.ball_mass(&[5.0, 0.0], 1.0)[0], c(0.0, 0.0));
    }

    #[test]
    fn lebesgue_disc_areas() {
        let grid = Grid::cube(2, 1.0, 128).unwrap();
        let leb = VectorMeasure::gridded(grid.clone(), vec![vec![c(1.0, 0.0); grid.len()]]).unwrap();
        for &r in &[0.005, 0.02, 0.1, 0.5, 0.75] {
            let m = leb.ball_mass(&[0.013, -0.2 * r], r)[0].re;
            let exact = PI * r * r;
            assert!((m / exact - 1.0).abs() < 0.01, "r = {r}: {m} vs {exact}");
        }
        // A ball hanging over the edge only sees the box.
        let m = leb.ball_mass(&[1.0, 0.0], 0.5)[0].re;
        assert!((m / (PI * 0.125) - 1.0).abs() < 0.01);
    }

    #[test]
    fn lebesgue_ball_in_r3() {
        let grid = Grid::cube(3, 1.0, 32).unwrap();
        let leb = VectorMeasure::gridded(grid.clone(), vec![vec![c(1.0, 0.0); grid.len()]]).unwrap();
        for &r in &[0.03, 0.2, 0.7] {
            let m = leb.ball_mass(&[0.01, 0.02, -0.03], r)[0].re;
            let exact = 4.0 * PI * r.powi(3) / 3.0;
            assert!((m / exact - 1.0).abs() < 0.01, "r = {r}: {m} vs {exact}");
        }
    }

    #[test]
    fn uniform_ball_has_exact_mass() {
        let grid = Grid::cube(2, 2.0, 64).unwrap();
        let disc = VectorMeasure::uniform_ball(grid, &[0.0, 0.0], 1.0, 1.0).unwrap();
        assert!((disc.total_mass() - 1.0).abs() < 1e-12);
    }
}
