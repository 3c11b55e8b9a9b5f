//! Ahlfors-type and Wolff-type regularity functionals.
//!
//! * `||mu||_lambda = sup_{x, r} |mu|(B(x, r)) / r^lambda`
//! * `||mu||_{0,lambda}`: the same with `x = 0`
//! * `[[mu]]_lambda = sup_{y != 0} int_0^{|y|/2} |mu|(B(y, r)) r^{-lambda-1} dr`
//! * `W^t_{alpha,p} nu(x) = int_0^t (nu(B(x, r)) / r^{N - alpha p})^{1/(p-1)} dr / r`
//!
//! For atomic measures ball masses are step functions of `r`, so sups are
//! taken over the exact critical radii and integrals are summed in closed
//! form. For gridded measures radii are sampled and integrals use the
//! trapezoid rule in `log r`. Each functional also reports its value as the
//! lower radius cutoff moves down one decade at a time; the divergence flag
//! comes from that trend.

use super::{atom_distances, total_variation, MeasureKind, VectorMeasure};
use crate::error::{Error, Result};
use crate::numerics::{log_spaced, norm};
use crate::trend::Trend;
use rayon::prelude::*;
use serde::Serialize;

/// Log-spaced radii `[r_min, r_max]`.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct RadiusSample {
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
}

impl RadiusSample {
    /// `[1e-3, 1e3]` times the measure's length scale, 200 radii.
    pub fn default_for(mu: &VectorMeasure) -> Self {
        let s = mu.scale();
        RadiusSample {
            r_min: 1e-3 * s,
            r_max: 1e3 * s,
            count: 200,
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        log_spaced(self.r_min, self.r_max, self.count)
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::EmptySample("radius sample is empty".into()));
        }
        if !(self.r_min > 0.0 && self.r_max >= self.r_min && self.r_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "radius range [{}, {}] is invalid",
                self.r_min, self.r_max
            )));
        }
        Ok(())
    }

    /// Lower cutoffs, one per decade from `r_max` down, ending at `r_min`.
    fn cutoffs(&self) -> Vec<f64> {
        let mut c = vec![self.r_max];
        let mut r = self.r_max / 10.0;
        while r > self.r_min * (1.0 + 1e-12) {
            c.push(r);
            r /= 10.0;
        }
        if *c.last().unwrap() > self.r_min {
            c.push(self.r_min);
        }
        c
    }
}

/// Radial quadrature for the Wolff-type integrals: the lower cutoff moves
/// `decades` decades below the upper limit, with `points_per_decade` nodes
/// per decade (gridded measures only).
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct WolffQuadrature {
    pub decades: usize,
    pub points_per_decade: usize,
}

impl Default for WolffQuadrature {
    fn default() -> Self {
        WolffQuadrature {
            decades: 4,
            points_per_decade: 16,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FunctionalEstimate {
    /// Estimate at the smallest cutoff; a lower bound for sups.
    pub value: f64,
    pub argmax_center: Option<Vec<f64>>,
    pub argmax_radius: Option<f64>,
    /// Values as the lower cutoff shrinks decade by decade.
    pub trend: Trend,
    pub divergent: bool,
}

impl FunctionalEstimate {
    fn zero(parameter: Vec<f64>) -> Self {
        let values = vec![0.0; parameter.len()];
        FunctionalEstimate {
            value: 0.0,
            argmax_center: None,
            argmax_radius: None,
            trend: Trend::assess(parameter, values),
            divergent: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SamplingSpec {
    pub centers: usize,
    pub radii: RadiusSample,
    pub y_count: usize,
    pub quadrature: WolffQuadrature,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RegularityReport {
    pub lambda: f64,
    pub ahlfors: FunctionalEstimate,
    pub origin_ahlfors: FunctionalEstimate,
    pub wolff_bracket: FunctionalEstimate,
    pub sampling: SamplingSpec,
}

/// Centres for Ahlfors sups: the origin, a `per_axis^N` lattice over the
/// measure's box (or the atoms' bounding box), and for atomic measures the
/// atoms themselves.
pub fn default_centers(mu: &VectorMeasure, per_axis: usize) -> Vec<Vec<f64>> {
    let dim = mu.dim();
    let mut out = vec![vec![0.0; dim]];
    let bounds: Vec<(f64, f64)> = match mu.kind() {
        MeasureKind::Gridded(g) => g.grid.bounds().to_vec(),
        MeasureKind::Atomic(_) => vec![(-mu.scale(), mu.scale()); dim],
    };
    out.extend(lattice(&bounds, per_axis));
    if let Some(atoms) = mu.atoms() {
        let stride = (atoms.len() / 256).max(1);
        out.extend(atoms.iter().step_by(stride).map(|a| a.point.clone()));
    }
    out
}

/// Sample of `y != 0` for the Wolff bracket: a lattice inside the ball of
/// radius two thirds of the scale plus points on every coordinate axis.
pub fn default_y_sample(mu: &VectorMeasure, per_axis: usize) -> Vec<Vec<f64>> {
    let dim = mu.dim();
    let s = match mu.kind() {
        MeasureKind::Gridded(g) => g.grid.min_half_width(),
        MeasureKind::Atomic(_) => mu.scale(),
    };
    let reach = 2.0 * s / 3.0;
    let mut out: Vec<Vec<f64>> = lattice(&vec![(-reach, reach); dim], per_axis)
        .into_iter()
        .filter(|y| {
            let n = norm(y);
            n > 0.0 && n <= reach
        })
        .collect();
    for a in 0..dim {
        for t in [-0.5, -1.0 / 3.0, 1.0 / 3.0, 0.5] {
            let mut y = vec![0.0; dim];
            y[a] = t * s;
            out.push(y);
        }
    }
    out
}

fn lattice(bounds: &[(f64, f64)], per_axis: usize) -> Vec<Vec<f64>> {
    let dim = bounds.len();
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|mut k| {
            (0..dim)
                .map(|a| {
                    let i = k % per_axis;
                    k /= per_axis;
                    let (lo, hi) = bounds[a];
                    lo + (i as f64 + 0.5) * (hi - lo) / per_axis as f64
                })
                .collect()
        })
        .collect()
}

/// Sup of `M(r) / r^lambda` over `r` in `[lo, hi]` for the step function
/// `M(r) = sum_{d_k < r} w_k`, exactly.
fn atomic_sup(dists: &[(f64, f64)], lambda: f64, lo: f64, hi: f64) -> (f64, f64) {
    let mass_below = |r: f64| -> f64 { dists.iter().take_while(|d| d.0 < r).map(|d| d.1).sum() };
    let mut best = (mass_below(lo) / lo.powf(lambda), lo);
    let at_hi = mass_below(hi) / hi.powf(lambda);
    if at_hi > best.0 {
        best = (at_hi, hi);
    }
    // Just past each critical radius the atom at that distance is inside.
    let mut acc = 0.0;
    for (k, &(d, w)) in dists.iter().enumerate() {
        acc += w;
        let last_at_d = dists.get(k + 1).is_none_or(|n| n.0 > d);
        if last_at_d && d >= lo && d < hi {
            let v = acc / d.powf(lambda);
            if v > best.0 {
                best = (v, d);
            }
        }
    }
    best
}

struct SupTrend {
    values: Vec<f64>,
    argmax: Vec<(Vec<f64>, f64)>,
}

fn ahlfors_over(
    var: &VectorMeasure,
    lambda: f64,
    centers: &[Vec<f64>],
    radii: &RadiusSample,
) -> SupTrend {
    let cutoffs = radii.cutoffs();
    let per_center: Vec<Vec<(f64, f64)>> = match var.kind() {
        MeasureKind::Atomic(_) => centers
            .par_iter()
            .map(|x| {
                let d = atom_distances(var, x);
                cutoffs
                    .iter()
                    .map(|&c| atomic_sup(&d, lambda, c, radii.r_max))
                    .collect()
            })
            .collect(),
        MeasureKind::Gridded(_) => {
            let rs = radii.radii();
            centers
                .par_iter()
                .map(|x| {
                    let ratios: Vec<f64> = rs
                        .iter()
                        .map(|&r| var.ball_variation(x, r) / r.powf(lambda))
                        .collect();
                    cutoffs
                        .iter()
                        .map(|&c| {
                            rs.iter()
                                .zip(&ratios)
                                .filter(|(r, _)| **r >= c * (1.0 - 1e-12))
                                .fold((0.0, c), |b, (r, v)| if *v > b.0 { (*v, *r) } else { b })
                        })
                        .collect()
                })
                .collect()
        }
    };
    let mut values = vec![0.0; cutoffs.len()];
    let mut argmax = vec![(Vec::new(), 0.0); cutoffs.len()];
    for (x, row) in centers.iter().zip(&per_center) {
        for (j, &(v, r)) in row.iter().enumerate() {
            if v > values[j] {
                values[j] = v;
                argmax[j] = (x.clone(), r);
            }
        }
    }
    SupTrend { values, argmax }
}

fn estimate_from(cutoffs: Vec<f64>, sup: SupTrend) -> FunctionalEstimate {
    let value = *sup.values.last().unwrap();
    let (c, r) = sup.argmax.last().cloned().unwrap();
    let trend = Trend::assess(cutoffs, sup.values);
    FunctionalEstimate {
        value,
        argmax_center: if value > 0.0 { Some(c) } else { None },
        argmax_radius: if value > 0.0 { Some(r) } else { None },
        divergent: trend.divergent,
        trend,
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be >= 0")));
    }
    Ok(())
}

/// Estimate of `||mu||_lambda` over the given centres and radii.
pub fn ahlfors_constant(
    mu: &VectorMeasure,
    lambda: f64,
    centers: &[Vec<f64>],
    radii: &RadiusSample,
) -> Result<FunctionalEstimate> {
    check_lambda(lambda)?;
    radii.validate()?;
    if centers.is_empty() {
        return Err(Error::EmptySample("no centres".into()));
    }
    if centers.iter().any(|c| c.len() != mu.dim()) {
        return Err(Error::DimensionMismatch("centre dimension differs from N".into()));
    }
    let var = total_variation(mu);
    let cutoffs = radii.cutoffs();
    if var.is_zero() {
        return Ok(FunctionalEstimate::zero(cutoffs));
    }
    let sup = ahlfors_over(&var, lambda, centers, radii);
    Ok(estimate_from(cutoffs, sup))
}

/// Estimate of `||mu||_{0,lambda}`: balls centred at the origin.
pub fn origin_ahlfors(mu: &VectorMeasure, lambda: f64, radii: &RadiusSample) -> Result<FunctionalEstimate> {
    ahlfors_constant(mu, lambda, &[vec![0.0; mu.dim()]], radii)
}

/// `int_lo^hi g(M(r)) r^{e-1} dr` for the atomic step function `M`.
fn atomic_radial_integral(
    dists: &[(f64, f64)],
    lo: f64,
    hi: f64,
    e: f64,
    g: impl Fn(f64) -> f64,
) -> f64 {
    let power = |a: f64, b: f64| -> f64 {
        if e.abs() < 1e-14 {
            (b / a).ln()
        } else {
            (b.powf(e) - a.powf(e)) / e
        }
    };
    let mut total = 0.0;
    let mut mass: f64 = dists.iter().take_while(|d| d.0 < lo).map(|d| d.1).sum();
    let mut a = lo;
    for &(d, w) in dists.iter().skip_while(|d| d.0 < lo) {
        if d >= hi {
            break;
        }
        if d > a {
            if mass > 0.0 {
                total += g(mass) * power(a, d);
            }
            a = d;
        }
        mass += w;
    }
    if mass > 0.0 && hi > a {
        total += g(mass) * power(a, hi);
    }
    total
}

/// Values of `int_{cutoff}^{hi} f(r) dr` for cutoffs `hi 10^{-j}`,
/// `j = 1..=decades`, using the trapezoid rule in `log r` over shared nodes.
fn gridded_cutoff_integrals(
    hi: f64,
    quad: &WolffQuadrature,
    f: impl Fn(f64) -> f64 + Sync,
) -> Vec<f64> {
    let ppd = quad.points_per_decade.max(1);
    let nodes = log_spaced(hi * 10f64.powi(-(quad.decades as i32)), hi, quad.decades * ppd + 1);
    let values: Vec<f64> = nodes.iter().map(|&r| f(r) * r).collect();
    let step = (nodes[1] / nodes[0]).ln();
    // Suffix sums of trapezoid panels.
    let mut suffix = vec![0.0; nodes.len()];
    for i in (0..nodes.len() - 1).rev() {
        suffix[i] = suffix[i + 1] + 0.5 * (values[i] + values[i + 1]) * step;
    }
    (1..=quad.decades)
        .map(|j| suffix[(quad.decades - j) * ppd])
        .collect()
}

fn check_quad(quad: &WolffQuadrature) -> Result<()> {
    if quad.decades == 0 || quad.points_per_decade == 0 {
        return Err(Error::InvalidArgument("quadrature needs decades and points per decade".into()));
    }
    Ok(())
}

/// Estimate of `[[mu]]_lambda` over the sample of `y`.
pub fn wolff_condition(
    mu: &VectorMeasure,
    lambda: f64,
    ys: &[Vec<f64>],
    quad: &WolffQuadrature,
) -> Result<FunctionalEstimate> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be > 0")));
    }
    check_quad(quad)?;
    if ys.is_empty() {
        return Err(Error::EmptySample("no y points".into()));
    }
    if ys.iter().any(|y| y.len() != mu.dim() || norm(y) == 0.0) {
        return Err(Error::InvalidArgument("y points must be nonzero N-vectors".into()));
    }
    let parameter: Vec<f64> = (1..=quad.decades).map(|j| 10f64.powi(-(j as i32))).collect();
    let var = total_variation(mu);
    if var.is_zero() {
        return Ok(FunctionalEstimate::zero(parameter));
    }
    let per_y: Vec<Vec<f64>> = ys
        .par_iter()
        .map(|y| {
            let hi = norm(y) / 2.0;
            match var.kind() {
                MeasureKind::Atomic(_) => {
                    let d = atom_distances(&var, y);
                    (1..=quad.decades)
                        .map(|j| {
                            let lo = hi * 10f64.powi(-(j as i32));
                            atomic_radial_integral(&d, lo, hi, -lambda, |m| m)
                        })
                        .collect()
                }
                MeasureKind::Gridded(_) => gridded_cutoff_integrals(hi, quad, |r| {
                    var.ball_variation(y, r) / r.powf(lambda + 1.0)
                }),
            }
        })
        .collect();
    let sup = sup_over(ys, &per_y);
    Ok(estimate_from(parameter, sup))
}

fn sup_over(points: &[Vec<f64>], rows: &[Vec<f64>]) -> SupTrend {
    let n = rows[0].len();
    let mut values = vec![0.0; n];
    let mut argmax = vec![(points[0].clone(), 0.0); n];
    for (p, row) in points.iter().zip(rows) {
        for j in 0..n {
            if row[j] > values[j] {
                values[j] = row[j];
                argmax[j] = (p.clone(), norm(p) / 2.0);
            }
        }
    }
    SupTrend { values, argmax }
}

/// Truncated Wolff potential `W^t_{alpha,p} nu(x)` of `|nu|`.
pub fn wolff_potential(
    nu: &VectorMeasure,
    alpha: f64,
    p: f64,
    t: f64,
    x: &[f64],
    quad: &WolffQuadrature,
) -> Result<FunctionalEstimate> {
    if !(alpha > 0.0 && p > 1.0 && t > 0.0) || !(alpha.is_finite() && p.is_finite() && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need alpha > 0, p > 1, t > 0; got alpha = {alpha}, p = {p}, t = {t}"
        )));
    }
    check_quad(quad)?;
    if x.len() != nu.dim() {
        return Err(Error::DimensionMismatch("point dimension differs from N".into()));
    }
    let parameter: Vec<f64> = (1..=quad.decades).map(|j| t * 10f64.powi(-(j as i32))).collect();
    let var = total_variation(nu);
    if var.is_zero() {
        return Ok(FunctionalEstimate::zero(parameter));
    }
    let s = nu.dim() as f64 - alpha * p;
    let q = 1.0 / (p - 1.0);
    let values: Vec<f64> = match var.kind() {
        MeasureKind::Atomic(_) => {
            let d = atom_distances(&var, x);
            parameter
                .iter()
                .map(|&lo| atomic_radial_integral(&d, lo, t, -s * q, |m| m.powf(q)))
                .collect()
        }
        MeasureKind::Gridded(_) => gridded_cutoff_integrals(t, quad, |r| {
            (var.ball_variation(x, r) / r.powf(s)).powf(q) / r
        }),
    };
    let value = *values.last().unwrap();
    let trend = Trend::assess(parameter, values);
    Ok(FunctionalEstimate {
        value,
        argmax_center: Some(x.to_vec()),
        argmax_radius: None,
        divergent: trend.divergent,
        trend,
    })
}

/// All three functionals with default samples.
pub fn regularity_report(
    mu: &VectorMeasure,
    lambda: f64,
    radii: Option<RadiusSample>,
    quad: WolffQuadrature,
) -> Result<RegularityReport> {
    let radii = radii.unwrap_or_else(|| RadiusSample::default_for(mu));
    let centers = default_centers(mu, 8);
    let ys = default_y_sample(mu, 8);
    let ahlfors = ahlfors_constant(mu, lambda, &centers, &radii)?;
    let origin = origin_ahlfors(mu, lambda, &radii)?;
    let wolff = if lambda > 0.0 {
        wolff_condition(mu, lambda, &ys, &quad)?
    } else {
        return Err(Error::InvalidArgument("the Wolff bracket needs lambda > 0".into()));
    };
    Ok(RegularityReport {
        lambda,
        ahlfors,
        origin_ahlfors: origin,
        wolff_bracket: wolff,
        sampling: SamplingSpec {
            centers: centers.len(),
            radii,
            y_count: ys.len(),
            quadrature: quad,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn lebesgue(half: f64, n: usize) -> VectorMeasure {
        let g = Grid::cube(2, half, n).unwrap();
        VectorMeasure::gridded(g.clone(), vec![vec![Complex64::new(1.0, 0.0); g.len()]]).unwrap()
    }

    #[test]
    fn lebesgue_ahlfors_is_pi() {
        let leb = lebesgue(1.0, 64);
        let radii = RadiusSample { r_min: 1e-3, r_max: 1.0, count: 60 };
        let e = ahlfors_constant(&leb, 2.0, &default_centers(&leb, 4), &radii).unwrap();
        assert!((e.value / PI - 1.0).abs() < 0.05);
        assert!(!e.divergent);
    }

    #[test]
    fn dirac_is_not_one_regular() {
        let d = VectorMeasure::dirac(vec![0.0, 0.0], 1.0).unwrap();
        let radii = RadiusSample::default_for(&d);
        let e = origin_ahlfors(&d, 1.0, &radii).unwrap();
        assert!(e.divergent);
        assert_eq!(e.trend.signature, Some("power"));
    }

    #[test]
    fn zero_measure_is_zero() {
        let z = VectorMeasure::atomic(2, 1, vec![]).unwrap();
        let e = ahlfors_constant(&z, 1.0, &[vec![0.0, 0.0]], &RadiusSample::default_for(&z)).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn atomic_sup_matches_enumeration() {
        let d = vec![(0.5, 1.0), (1.0, 2.0), (2.0, 0.5)];
        // Right limits at 0.5, 1, 2 give 2, 3, 0.875 for lambda = 1.
        let (v, r) = atomic_sup(&d, 1.0, 0.1, 10.0);
        assert!((v - 3.0).abs() < 1e-15 && r == 1.0);
    }

    #[test]
    fn wolff_potential_of_lebesgue() {
        let leb = lebesgue(2.0, 128);
        let w = wolff_potential(&leb, 1.0, 2.0, 1.0, &[0.0, 0.0], &WolffQuadrature { decades: 5, points_per_decade: 24 }).unwrap();
        assert!((w.value / (PI / 2.0) - 1.0).abs() < 0.01, "{}", w.value);
        assert!(!w.divergent);
    }

    #[test]
    fn wolff_potential_of_dirac_diverges() {
        let d = VectorMeasure::dirac(vec![0.0, 0.0], 1.0).unwrap();
        let w = wolff_potential(&d, 1.0, 2.0, 1.0, &[0.0, 0.0], &WolffQuadrature::default()).unwrap();
        assert!(w.divergent);
        assert!((w.value - 4.0 * 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn atomic_radial_integral_closed_form() {
        // Single atom at distance 0.2, weight 3: int_{0.2}^{1} 3 r^{-2} dr = 12.
        let v = atomic_radial_integral(&[(0.2, 3.0)], 0.01, 1.0, -1.0, |m| m);
        assert!((v - 12.0).abs() < 1e-12);
    }
}
