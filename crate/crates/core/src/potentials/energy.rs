//! Truncated `(m, p)`-energies `int_{B_R} |I_m mu|^p dx` and the weak
//! quasinorm `sup_lambda lambda |{|I_m mu| > lambda}|` of gridded measures.
//!
//! The potential is evaluated on the measure's box enlarged twice (exact
//! discrete sum). Beyond that box the integrals run in polar coordinates
//! about the origin: equally spaced angles in the plane, a Fibonacci set on
//! `S^2`, trapezoid in `log r`, with the potential summed directly from
//! lumped cell blocks.

use super::riesz::{riesz_constant, riesz_potential_extended, FarSources};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measures::VectorMeasure;
use crate::numerics::{log_spaced, norm, unit_sphere_area};
use crate::operator::sphere::quasi_uniform;
use crate::trend::Trend;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct EnergyOptions {
    /// Box enlargement factor for the gridded inner region.
    pub extension: usize,
    /// Radial nodes per decade outside the inner region.
    pub points_per_decade: usize,
    /// Directions for the outer polar quadrature.
    pub directions: usize,
    /// Blocks per axis when lumping cells into far-field sources.
    pub far_blocks: usize,
}

impl EnergyOptions {
    pub fn for_dim(dim: usize) -> Self {
        EnergyOptions {
            extension: 2,
            points_per_decade: 64,
            directions: if dim == 2 { 128 } else { 256 },
            far_blocks: 32,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EnergyReport {
    pub m: usize,
    pub p: f64,
    /// `(R, int_{B_R} |I_m mu|^p dx)`, increasing in `R`.
    pub truncated_energies: Vec<(f64, f64)>,
    /// Energies at the largest requested radius and three decades below.
    pub trend: Trend,
    pub divergent: bool,
    pub options: EnergyOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weak: Option<WeakEnergyReport>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct WeakEnergyReport {
    pub lambdas: Vec<f64>,
    /// `|{|I_m mu| > lambda}|` per lambda.
    pub volumes: Vec<f64>,
    /// `sup_lambda lambda |{|I_m mu| > lambda}|` over the grid.
    pub weak_quasinorm: f64,
    /// Running sup as lambda decreases decade by decade.
    pub trend: Trend,
    pub divergent: bool,
    /// Some superlevel set reaches the outer radius, so its volume is a
    /// lower bound.
    pub truncated: bool,
    pub r_max: f64,
}

/// Potential magnitudes on the inner box and along rays outside it.
struct PotentialSamples {
    inner_grid: Grid,
    inner: Vec<f64>,
    /// Per direction: quadrature weight and `(r, |I_m mu(r theta)|)` nodes,
    /// starting where the ray leaves the inner box.
    rays: Vec<(f64, Vec<(f64, f64)>)>,
}

fn check_order(mu: &VectorMeasure, m: usize) -> Result<()> {
    riesz_constant(mu.dim(), m).map(|_| ())
}

/// Distance from the origin to the boundary of the box along `theta`.
fn exit_distance(grid: &Grid, theta: &[f64]) -> f64 {
    grid.bounds()
        .iter()
        .zip(theta)
        .map(|(&(lo, hi), &t)| {
            if t > 0.0 {
                hi / t
            } else if t < 0.0 {
                lo / t
            } else {
                f64::INFINITY
            }
        })
        .fold(f64::INFINITY, f64::min)
}

fn sample_potential(
    mu: &VectorMeasure,
    m: usize,
    r_max: f64,
    extra_nodes: &[f64],
    opts: &EnergyOptions,
) -> Result<PotentialSamples> {
    if mu.grid().is_none() {
        return Err(Error::InvalidArgument("energies are computed for gridded measures".into()));
    }
    check_order(mu, m)?;
    let dim = mu.dim();
    let ext = riesz_potential_extended(mu, m, opts.extension)?;
    let inner_grid = ext.grid().clone();
    if inner_grid.bounds().iter().any(|&(lo, hi)| !(lo < 0.0 && hi > 0.0)) {
        return Err(Error::Precondition(
            "the origin must lie inside the measure's enlarged box".into(),
        ));
    }
    let inner = ext.magnitudes();
    let gamma_m = riesz_constant(dim, m)?;
    let far = FarSources::new(mu, opts.far_blocks);
    let dirs = quasi_uniform(dim, opts.directions.max(2 * dim));
    let weight = unit_sphere_area(dim) / dirs.len() as f64;
    let rays = dirs
        .par_iter()
        .map(|theta| {
            let r0 = exit_distance(&inner_grid, theta);
            if r0 >= r_max {
                return (weight, Vec::new());
            }
            let decades = (r_max / r0).log10();
            let count = (decades * opts.points_per_decade as f64).ceil() as usize + 1;
            let mut rs = log_spaced(r0, r_max, count.max(2));
            rs.extend(extra_nodes.iter().copied().filter(|r| *r > r0 && *r < r_max));
            rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            rs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * *b);
            let nodes = rs
                .into_iter()
                .map(|r| {
                    let x: Vec<f64> = theta.iter().map(|t| r * t).collect();
                    let v = far.potential(&x, m, gamma_m);
                    (r, v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
                })
                .collect();
            (weight, nodes)
        })
        .collect();
    Ok(PotentialSamples {
        inner_grid,
        inner,
        rays,
    })
}

/// Truncated energies at every radius in `r_list` plus the trend radii.
pub fn energy(mu: &VectorMeasure, m: usize, p: f64, r_list: &[f64]) -> Result<EnergyReport> {
    energy_with(mu, m, p, r_list, &EnergyOptions::for_dim(mu.dim()))
}

pub fn energy_with(
    mu: &VectorMeasure,
    m: usize,
    p: f64,
    r_list: &[f64],
    opts: &EnergyOptions,
) -> Result<EnergyReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p = {p} must satisfy 1 <= p < inf")));
    }
    if r_list.is_empty() || r_list.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument("radii must be positive and finite".into()));
    }
    let r_top = r_list.iter().copied().fold(0.0, f64::max);
    let trend_radii: Vec<f64> = (0..4).rev().map(|j| r_top * 10f64.powi(-j)).collect();
    let mut radii: Vec<f64> = r_list.iter().chain(&trend_radii).copied().collect();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * *b);

    let samples = sample_potential(mu, m, r_top, &radii, opts)?;
    let dim = mu.dim();
    let vol = samples.inner_grid.cell_volume();
    // Inner part: cells sorted by distance to the origin, prefix sums.
    let mut cells: Vec<(f64, f64)> = (0..samples.inner_grid.len())
        .map(|k| (norm(&samples.inner_grid.point(k)), samples.inner[k].powf(p) * vol))
        .collect();
    cells.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut prefix = Vec::with_capacity(cells.len() + 1);
    prefix.push(0.0);
    for c in &cells {
        prefix.push(prefix.last().unwrap() + c.1);
    }
    let inner_at = |r: f64| prefix[cells.partition_point(|c| c.0 < r)];

    // Outer part: cumulative log-trapezoid along each ray.
    let far_at: Vec<f64> = radii
        .iter()
        .map(|&r| {
            samples
                .rays
                .iter()
                .map(|(w, nodes)| w * ray_integral(nodes, r, |v, s| v.powf(p) * s.powi(dim as i32 - 1)))
                .sum()
        })
        .collect();
    let truncated_energies: Vec<(f64, f64)> = radii
        .iter()
        .zip(&far_at)
        .map(|(&r, f)| (r, inner_at(r) + f))
        .collect();
    let trend_values: Vec<f64> = trend_radii
        .iter()
        .map(|r| {
            truncated_energies
                .iter()
                .find(|(s, _)| (s - r).abs() <= 1e-12 * r)
                .unwrap()
                .1
        })
        .collect();
    let trend = Trend::assess(trend_radii, trend_values);
    Ok(EnergyReport {
        m,
        p,
        truncated_energies,
        divergent: trend.divergent,
        trend,
        options: *opts,
        weak: None,
    })
}

/// `int_{r_0}^{R} f(|I|, r) dr` along one ray by the trapezoid rule in `log r`.
fn ray_integral(nodes: &[(f64, f64)], r_hi: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    let mut total = 0.0;
    for w in nodes.windows(2) {
        let (r0, v0) = w[0];
        let (r1, v1) = w[1];
        if r1 > r_hi * (1.0 + 1e-12) {
            break;
        }
        total += 0.5 * (f(v0, r0) * r0 + f(v1, r1) * r1) * (r1 / r0).ln();
    }
    total
}

/// Weak quasinorm over `lambda_count` levels spread log-uniformly across
/// the observed range of `|I_m mu|` out to radius `r_max`.
pub fn weak_energy(
    mu: &VectorMeasure,
    m: usize,
    lambda_count: usize,
    r_max: Option<f64>,
) -> Result<WeakEnergyReport> {
    weak_energy_with(mu, m, lambda_count, r_max, &EnergyOptions::for_dim(mu.dim()))
}

pub fn weak_energy_with(
    mu: &VectorMeasure,
    m: usize,
    lambda_count: usize,
    r_max: Option<f64>,
    opts: &EnergyOptions,
) -> Result<WeakEnergyReport> {
    if lambda_count < 2 {
        return Err(Error::EmptySample("need at least two lambda levels".into()));
    }
    let r_max = r_max.unwrap_or_else(|| 1e3 * mu.scale());
    let samples = sample_potential(mu, m, r_max, &[], opts)?;
    let dim = mu.dim();
    let vol = samples.inner_grid.cell_volume();
    let hi = samples.inner.iter().copied().fold(0.0, f64::max);
    let lo = samples
        .rays
        .iter()
        .filter_map(|(_, n)| n.last().map(|x| x.1))
        .fold(f64::INFINITY, f64::min)
        .min(samples.inner.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min));
    let parameter_empty = || Trend::assess(Vec::new(), Vec::new());
    if hi == 0.0 || !lo.is_finite() || lo <= 0.0 {
        return Ok(WeakEnergyReport {
            lambdas: Vec::new(),
            volumes: Vec::new(),
            weak_quasinorm: 0.0,
            trend: parameter_empty(),
            divergent: false,
            truncated: false,
            r_max,
        });
    }
    let mut lambdas = log_spaced(lo, hi, lambda_count);
    // Decade levels below the maximum, for the trend.
    let decades = (hi / lo).log10().floor() as i32;
    let trend_levels: Vec<f64> = (0..=decades).map(|j| hi * 10f64.powi(-j)).collect();
    lambdas.extend(trend_levels.iter().copied());
    lambdas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    lambdas.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * *b);

    let volumes: Vec<f64> = lambdas
        .par_iter()
        .map(|&lam| {
            let inner = samples.inner.iter().filter(|v| **v > lam).count() as f64 * vol;
            let outer: f64 = samples
                .rays
                .iter()
                .map(|(w, nodes)| w * superlevel_length(nodes, lam, dim))
                .sum();
            inner + outer
        })
        .collect();
    let products: Vec<f64> = lambdas.iter().zip(&volumes).map(|(l, v)| l * v).collect();
    let weak_quasinorm = products.iter().copied().fold(0.0, f64::max);
    let trend_values: Vec<f64> = trend_levels
        .iter()
        .map(|t| {
            lambdas
                .iter()
                .zip(&products)
                .filter(|(l, _)| **l >= *t * (1.0 - 1e-12))
                .map(|(_, p)| *p)
                .fold(0.0, f64::max)
        })
        .collect();
    let truncated = samples
        .rays
        .iter()
        .any(|(_, n)| n.last().is_some_and(|x| x.1 > lambdas[lambdas.len() - 1] * (1.0 + 1e-9)));
    let trend = Trend::assess(trend_levels, trend_values);
    Ok(WeakEnergyReport {
        lambdas,
        volumes,
        weak_quasinorm,
        divergent: trend.divergent,
        trend,
        truncated,
        r_max,
    })
}

/// `int_{r : |I(r theta)| > lambda} r^{N-1} dr` with linear interpolation
/// of crossings in `log r`.
fn superlevel_length(nodes: &[(f64, f64)], lam: f64, dim: usize) -> f64 {
    let shell = |a: f64, b: f64| (b.powi(dim as i32) - a.powi(dim as i32)) / dim as f64;
    let mut total = 0.0;
    for w in nodes.windows(2) {
        let (r0, v0) = w[0];
        let (r1, v1) = w[1];
        match (v0 > lam, v1 > lam) {
            (true, true) => total += shell(r0, r1),
            (false, false) => {}
            (a, _) => {
                let t = (lam - v0) / (v1 - v0);
                let rc = (r0.ln() + t * (r1 / r0).ln()).exp();
                total += if a { shell(r0, rc) } else { shell(rc, r1) };
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_measure_has_zero_energy() {
        let grid = Grid::cube(2, 1.0, 16).unwrap();
        let z = VectorMeasure::zero_gridded(grid, 1).unwrap();
        let e = energy(&z, 1, 2.0, &[10.0, 100.0]).unwrap();
        assert!(e.truncated_energies.iter().all(|(_, v)| *v == 0.0));
        assert!(!e.divergent);
        let w = weak_energy(&z, 1, 10, None).unwrap();
        assert_eq!(w.weak_quasinorm, 0.0);
    }

    #[test]
    fn superlevel_of_decaying_ray() {
        // |I| = 1/r on [1, 100], lambda = 0.1: r in [1, 10), length int r dr = 49.5 in 2-D.
        let nodes: Vec<(f64, f64)> = log_spaced(1.0, 100.0, 2001).into_iter().map(|r| (r, 1.0 / r)).collect();
        assert!((superlevel_length(&nodes, 0.1, 2) - 49.5).abs() < 1e-2);
    }

    #[test]
    fn disc_energy_grows_logarithmically_for_p2() {
        let grid = Grid::cube(2, 1.0, 32).unwrap();
        let disc = VectorMeasure::uniform_ball(grid, &[0.0, 0.0], 0.5, 1.0).unwrap();
        let e = energy(&disc, 1, 2.0, &[10.0, 100.0, 1000.0]).unwrap();
        let at = |r: f64| e.truncated_energies.iter().find(|(s, _)| (s - r).abs() < 1e-9).unwrap().1;
        let slope = (2.0 * PI).recip() * 10f64.ln();
        for (a, b) in [(10.0, 100.0), (100.0, 1000.0)] {
            assert!(((at(b) - at(a)) / slope - 1.0).abs() < 0.02);
        }
        assert!(e.divergent);
    }
}
