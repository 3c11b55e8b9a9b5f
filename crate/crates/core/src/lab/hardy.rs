//! The two-weight Hardy inequality
//! `(int (int_{B_{|x|/2}} g)^q u dnu)^{1/q} <= C int g v`
//! and its condition `sup_R (int_{|x| >= R} u dnu)^{1/q} sup_{B_R} 1/v`.
//!
//! `nu` is a positive measure (atoms or a gridded density) and `g >= 0`
//! lives on a grid. Everything is a sum over points, so the discrete
//! inequality holds with the discrete constant exactly: the Minkowski chain
//! only needs `sup_{B_{2|y|}} 1/v >= 1/v(y)` at cell centres `y`.

use super::report::{InequalityReport, Sample};
use super::{require_members, FieldSource};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridField};
use crate::measures::{total_variation, VectorMeasure};
use crate::numerics::{log_spaced, norm};
use crate::trend::Trend;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct HardyCondition {
    pub q: f64,
    /// Supremum over the radius grid and every `2|y|`, `y` a cell centre.
    pub constant: f64,
    pub argmax_radius: Option<f64>,
    /// `(R, (int_{|x| >= R} u dnu)^{1/q} sup_{B_R} 1/v)` on the radius grid.
    pub per_radius: Vec<(f64, f64)>,
    /// Running sup as the smallest admitted radius drops decade by decade.
    pub trend: Trend,
    pub divergent: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct HardyWitness {
    pub radius: f64,
    /// Level index: the set is `{1/v > S(R) - 1/n}` inside `B_R`.
    pub n: usize,
    pub cells: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Weights, measure and grid with the sorted sums the checks share.
#[derive(Debug, Clone)]
pub struct HardyProblem {
    q: f64,
    grid: Grid,
    /// `|x|` of the points of `nu`, ascending, and `u(x) nu({x})`.
    nu_r: Vec<f64>,
    nu_uw: Vec<f64>,
    /// `tail[i] = sum_{j >= i} nu_uw[j]`.
    tail: Vec<f64>,
    /// Cells sorted by `|y|`.
    order: Vec<usize>,
    cell_r: Vec<f64>,
    /// `1/v` per sorted cell and its running max.
    inv_v: Vec<f64>,
    inv_v_max: Vec<f64>,
    /// `v` per cell in grid order.
    v: Vec<f64>,
}

impl HardyProblem {
    pub fn new(
        u: impl Fn(&[f64]) -> f64 + Sync,
        v: impl Fn(&[f64]) -> f64 + Sync,
        nu: &VectorMeasure,
        q: f64,
        grid: &Grid,
    ) -> Result<Self> {
        if !(q >= 1.0 && q.is_finite()) {
            return Err(Error::InvalidArgument(format!("q = {q} must satisfy 1 <= q < inf")));
        }
        if nu.dim() != grid.dim() {
            return Err(Error::DimensionMismatch("measure and grid dimensions differ".into()));
        }
        let var = total_variation(nu);
        let mut pts: Vec<(f64, f64)> = match (var.atoms(), var.grid()) {
            (Some(atoms), _) => atoms
                .iter()
                .map(|a| (norm(&a.point), u(&a.point) * a.weight[0].re))
                .collect(),
            (None, Some(g)) => {
                let vol = g.cell_volume();
                let d = &var.density().unwrap()[0];
                (0..g.len())
                    .into_par_iter()
                    .filter(|&k| d[k].re > 0.0)
                    .map(|k| {
                        let x = g.point(k);
                        (norm(&x), u(&x) * d[k].re * vol)
                    })
                    .collect()
            }
            _ => unreachable!("a measure is atomic or gridded"),
        };
        if pts.iter().any(|p| !(p.1 >= 0.0)) {
            return Err(Error::InvalidArgument("u must be nonnegative on the support of nu".into()));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let nu_r: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let nu_uw: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let mut tail = vec![0.0; nu_uw.len() + 1];
        for i in (0..nu_uw.len()).rev() {
            tail[i] = tail[i + 1] + nu_uw[i];
        }

        let v_cells: Vec<f64> = (0..grid.len()).into_par_iter().map(|k| v(&grid.point(k))).collect();
        if v_cells.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::InvalidArgument("v must be positive at every cell centre".into()));
        }
        let mut order: Vec<usize> = (0..grid.len()).collect();
        let radii: Vec<f64> = (0..grid.len()).map(|k| norm(&grid.point(k))).collect();
        order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
        let cell_r: Vec<f64> = order.iter().map(|&k| radii[k]).collect();
        let inv_v: Vec<f64> = order.iter().map(|&k| 1.0 / v_cells[k]).collect();
        let mut inv_v_max = inv_v.clone();
        for i in 1..inv_v_max.len() {
            inv_v_max[i] = inv_v_max[i].max(inv_v_max[i - 1]);
        }
        Ok(HardyProblem {
            q,
            grid: grid.clone(),
            nu_r,
            nu_uw,
            tail,
            order,
            cell_r,
            inv_v,
            inv_v_max,
            v: v_cells,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `int_{|x| >= R} u dnu`.
    fn tail_at(&self, r: f64) -> f64 {
        self.tail[self.nu_r.partition_point(|x| *x < r)]
    }

    /// `sup_{B_R} 1/v` over cell centres; 0 when `B_R` holds none.
    fn sup_inv_v(&self, r: f64) -> f64 {
        let k = self.cell_r.partition_point(|x| *x < r);
        if k == 0 {
            0.0
        } else {
            self.inv_v_max[k - 1]
        }
    }

    fn value_at(&self, r: f64) -> f64 {
        let t = self.tail_at(r);
        if t == 0.0 {
            0.0
        } else {
            t.powf(1.0 / self.q) * self.sup_inv_v(r)
        }
    }

    /// Default radius grid: 64 log-spaced radii from half a cell to the box
    /// diagonal.
    pub fn default_radii(&self) -> Vec<f64> {
        let h = self.grid.max_spacing();
        let far = self
            .grid
            .bounds()
            .iter()
            .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
            .sum::<f64>()
            .sqrt();
        let top = far.max(self.nu_r.last().copied().unwrap_or(0.0)) * 2.0;
        log_spaced(0.5 * h, top, 64)
    }

    pub fn condition(&self, r_grid: Option<&[f64]>) -> Result<HardyCondition> {
        let radii: Vec<f64> = match r_grid {
            Some(r) => r.to_vec(),
            None => self.default_radii(),
        };
        if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument("radius grid must be nonempty and positive".into()));
        }
        let per_radius: Vec<(f64, f64)> = radii.iter().map(|&r| (r, self.value_at(r))).collect();
        let mut all: Vec<(f64, f64)> = per_radius.clone();
        all.extend(self.cell_r.iter().map(|&y| (2.0 * y, self.value_at(2.0 * y))));
        let (argmax, constant) = all
            .iter()
            .fold((None, 0.0), |(a, c), &(r, v)| if v > c { (Some(r), v) } else { (a, c) });

        // Running sup over R >= cutoff, cutoffs a decade apart.
        let top = radii.iter().copied().fold(0.0, f64::max);
        let bottom = radii.iter().copied().fold(f64::INFINITY, f64::min);
        let mut parameter = Vec::new();
        let mut values = Vec::new();
        let mut cut = top;
        while cut >= bottom * (1.0 - 1e-12) {
            parameter.push(cut);
            values.push(all.iter().filter(|p| p.0 >= cut).map(|p| p.1).fold(0.0, f64::max));
            cut /= 10.0;
        }
        let trend = Trend::assess(parameter, values);
        Ok(HardyCondition {
            q: self.q,
            constant,
            argmax_radius: argmax,
            per_radius,
            divergent: trend.divergent || !constant.is_finite(),
            trend,
        })
    }

    /// `(LHS, RHS)` for `g >= 0` given per cell (grid order).
    fn sides(&self, g: &[f64]) -> Sample {
        let vol = self.grid.cell_volume();
        let mut prefix = vec![0.0; self.order.len() + 1];
        for (i, &k) in self.order.iter().enumerate() {
            prefix[i + 1] = prefix[i] + g[k] * vol;
        }
        let lhs: f64 = self
            .nu_r
            .iter()
            .zip(&self.nu_uw)
            .map(|(&r, &w)| {
                let inner = prefix[self.cell_r.partition_point(|y| *y < r / 2.0)];
                if inner > 0.0 {
                    w * inner.powf(self.q)
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            .powf(1.0 / self.q);
        let rhs: f64 = g.iter().zip(&self.v).map(|(g, v)| g * v).sum::<f64>() * vol;
        Sample { lhs, rhs }
    }

    /// `(LHS, RHS)` for the magnitude of `g`.
    pub fn evaluate(&self, g: &GridField) -> Result<Sample> {
        if !g.grid().same_geometry(&self.grid) {
            return Err(Error::DimensionMismatch("g must live on the problem grid".into()));
        }
        Ok(self.sides(&g.magnitudes()))
    }

    pub fn forward(&self, ensemble: &dyn FieldSource, slack: f64) -> Result<InequalityReport> {
        require_members(ensemble)?;
        let cond = self.condition(None)?;
        let samples: Vec<Sample> = (0..ensemble.count())
            .into_par_iter()
            .map(|i| self.evaluate(&ensemble.field(i)))
            .collect::<Result<_>>()?;
        let mut report = InequalityReport::assemble("hardy", &samples, Some(cond.constant), slack);
        report.seed = ensemble.seed();
        report.functional = Some(cond.constant);
        report.notes.push("g is the pointwise magnitude of each member".into());
        if cond.divergent {
            report.notes.push("the condition shows a divergence trend".into());
        }
        Ok(report)
    }

    /// The converse construction: indicators of near-maximal sets of `1/v`
    /// in `B_R`, tried for each `R` and `n = 1, 2, 4, ..`.
    pub fn converse(&self, candidate: f64, r_grid: &[f64], levels: usize) -> Option<HardyWitness> {
        for &r in r_grid {
            let k = self.cell_r.partition_point(|y| *y < r);
            if k == 0 {
                continue;
            }
            let s = self.inv_v_max[k - 1];
            for level in 0..levels.max(1) {
                let n = 1usize << level;
                let cut = s - 1.0 / n as f64;
                let mut g = vec![0.0; self.grid.len()];
                let mut cells = 0;
                for i in 0..k {
                    if self.inv_v[i] > cut {
                        g[self.order[i]] = 1.0;
                        cells += 1;
                    }
                }
                let sample = self.sides(&g);
                let ratio = sample.ratio();
                if ratio > candidate {
                    return Some(HardyWitness {
                        radius: r,
                        n,
                        cells,
                        lhs: sample.lhs,
                        rhs: sample.rhs,
                        ratio,
                    });
                }
            }
        }
        None
    }
}

/// Estimate of the Hardy condition constant over `r_grid` (default grid if
/// `None`), with `sup 1/v` taken over the cell centres of `grid`.
pub fn hardy_condition(
    u: impl Fn(&[f64]) -> f64 + Sync,
    v: impl Fn(&[f64]) -> f64 + Sync,
    nu: &VectorMeasure,
    q: f64,
    grid: &Grid,
    r_grid: Option<&[f64]>,
) -> Result<HardyCondition> {
    HardyProblem::new(u, v, nu, q, grid)?.condition(r_grid)
}

/// The forward inequality over an ensemble; the prediction is the condition
/// constant itself.
pub fn hardy_forward(
    u: impl Fn(&[f64]) -> f64 + Sync,
    v: impl Fn(&[f64]) -> f64 + Sync,
    nu: &VectorMeasure,
    q: f64,
    ensemble: &dyn FieldSource,
    slack: f64,
) -> Result<InequalityReport> {
    let grid = ensemble_grid(ensemble)?;
    HardyProblem::new(u, v, nu, q, &grid)?.forward(ensemble, slack)
}

/// First witness `g` with `LHS / RHS > candidate`, if any.
pub fn hardy_converse(
    u: impl Fn(&[f64]) -> f64 + Sync,
    v: impl Fn(&[f64]) -> f64 + Sync,
    nu: &VectorMeasure,
    q: f64,
    grid: &Grid,
    candidate: f64,
    r_grid: &[f64],
) -> Result<Option<HardyWitness>> {
    Ok(HardyProblem::new(u, v, nu, q, grid)?.converse(candidate, r_grid, 12))
}

fn ensemble_grid(ensemble: &dyn FieldSource) -> Result<Grid> {
    require_members(ensemble)?;
    Ok(ensemble.field(0).grid().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{EnsembleSpec, TestEnsemble};
    use std::f64::consts::{E, PI};

    fn disc(n: usize) -> (Grid, VectorMeasure) {
        let grid = Grid::cube(2, 1.0, n).unwrap();
        let nu = VectorMeasure::from_density_fn(grid.clone(), 4, |x| if norm(x) < 1.0 { 1.0 } else { 0.0 }).unwrap();
        (grid, nu)
    }

    #[test]
    fn log_weight_pair_matches_the_radial_oracle() {
        // u = |x|^{-2}, v = |x|^{-1} on the unit disc:
        // R * int_{R<|x|<1} |x|^{-2} dx = 2 pi R ln(1/R), maximal 2 pi / e at R = 1/e.
        let (grid, nu) = disc(256);
        let c = hardy_condition(|x| norm(x).powi(-2), |x| 1.0 / norm(x), &nu, 1.0, &grid, None).unwrap();
        let oracle = 2.0 * PI / E;
        assert!((c.constant / oracle - 1.0).abs() < 0.02, "{} vs {oracle}", c.constant);
        assert!((c.argmax_radius.unwrap() - 1.0 / E).abs() < 0.05);
        assert!(!c.divergent);
    }

    #[test]
    fn zero_measure_has_zero_constant() {
        let grid = Grid::cube(2, 1.0, 32).unwrap();
        let nu = VectorMeasure::zero_gridded(grid.clone(), 1).unwrap();
        let c = hardy_condition(|_| 1.0, |_| 1.0, &nu, 1.0, &grid, None).unwrap();
        assert_eq!(c.constant, 0.0);
        assert!(hardy_converse(|_| 1.0, |_| 1.0, &nu, 1.0, &grid, 0.0, &[0.1, 0.5]).unwrap().is_none());
    }

    #[test]
    fn unit_v_gives_the_full_integral() {
        // v = 1: C = (int u dnu)^{1/q} in the limit R -> 0.
        let (grid, nu) = disc(128);
        let u = |x: &[f64]| 1.0 + x[0] * x[0];
        let c = hardy_condition(u, |_| 1.0, &nu, 2.0, &grid, None).unwrap();
        // int_{disc} (1 + x^2) = pi + pi/4
        let direct = (PI * 1.25).sqrt();
        assert!((c.constant / direct - 1.0).abs() < 0.01, "{} vs {direct}", c.constant);
    }

    #[test]
    fn forward_bound_holds_with_the_proof_constant() {
        let (grid, nu) = disc(64);
        let e = TestEnsemble::new(grid, 1, EnsembleSpec::new(40, 3).with_random_support()).unwrap();
        let r = hardy_forward(|x| norm(x).powi(-2), |x| 1.0 / norm(x), &nu, 1.0, &e, 1.0).unwrap();
        assert!(r.pass, "{:?}", r.violations.first());
        assert!(r.empirical_best_constant > 0.0);
    }

    #[test]
    fn g_away_from_the_origin_reaches_no_mass() {
        // nu supported in |x| < 0.3 sees only the mass of g inside |y| < 0.15.
        let grid = Grid::cube(2, 1.0, 64).unwrap();
        let nu = VectorMeasure::uniform_ball(grid.clone(), &[0.0, 0.0], 0.3, 1.0).unwrap();
        let p = HardyProblem::new(|_| 1.0, |_| 1.0, &nu, 1.0, &grid).unwrap();
        let g = GridField::from_real_fn(grid, |x| if norm(x) > 0.5 { 1.0 } else { 0.0 }).unwrap();
        let s = p.evaluate(&g).unwrap();
        assert_eq!(s.lhs, 0.0);
        assert!(s.rhs > 0.0);
    }

    #[test]
    fn converse_finds_witnesses_for_a_divergent_pair() {
        // u = |x|^{-4}, v = 1: the tail grows like pi / R^2.
        let (grid, nu) = disc(128);
        let u = |x: &[f64]| norm(x).powi(-4);
        let radii = log_spaced(0.02, 0.5, 12);
        let w = hardy_converse(u, |_| 1.0, &nu, 1.0, &grid, 100.0, &radii).unwrap();
        assert!(w.is_some());
        let c = hardy_condition(u, |_| 1.0, &nu, 1.0, &grid, None).unwrap();
        assert!(c.constant > 1e3);
        // A finite pair with candidate twice its constant has no witness.
        let v = |x: &[f64]| 1.0 / norm(x);
        let u2 = |x: &[f64]| norm(x).powi(-2);
        let c2 = hardy_condition(u2, v, &nu, 1.0, &grid, None).unwrap();
        assert!(hardy_converse(u2, v, &nu, 1.0, &grid, 2.0 * c2.constant, &radii).unwrap().is_none());
    }
}
