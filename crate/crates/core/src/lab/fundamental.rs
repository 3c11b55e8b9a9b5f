//! Kernel estimates against a positive measure:
//!
//! * the fundamental estimate `(int |K * g|^q dnu)^{1/q} <= C int |g|` for
//!   `g = A(D)u`, with the split `K = K_1 + K_2`,
//!   `K_1(x, y) = psi(|y|/|x|) K(x)`;
//! * the duality inequality `|int u . dmu| <= C ||A(D)u||_1`;
//! * the trace inequalities for `D^{m-1}u` and `(-Delta)^{(m-l)/2}u`.
//!
//! Predictions are `c (||nu||_{0,lambda} + [[nu]]_lambda)^{1/q}` with one
//! calibration scalar `c` per inequality.

use super::report::{InequalityReport, Sample};
use super::{l1, require_members, FieldSource, NuPoints};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridField};
use crate::measures::regularity::default_y_sample;
use crate::measures::{origin_ahlfors, wolff_condition, FunctionalEstimate, RadiusSample, VectorMeasure, WolffQuadrature};
use crate::numerics::{norm, smoothstep};
use crate::operator::{apply_operator, catalog, check_canceling, structure, HomogeneousOperator};
use crate::solver::{apply_kernel, require_elliptic, smoothed_kernel_on_cells};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct CheckOptions {
    /// The kernel is applied on the ensemble box enlarged this many times.
    pub padding: usize,
    pub slack: f64,
    /// Frozen calibration scalar; without it no bound is predicted.
    pub calibration: Option<f64>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            padding: 2,
            slack: 1.25,
            calibration: None,
        }
    }
}

impl CheckOptions {
    pub fn calibrated(mut self, c: f64) -> Self {
        self.calibration = Some(c);
        self
    }
}

/// `||nu||_{0,lambda}` and `[[nu]]_lambda` with default samples.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MeasureHypotheses {
    pub lambda: f64,
    pub origin_ahlfors: FunctionalEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wolff_bracket: Option<FunctionalEstimate>,
    /// `||nu||_{0,lambda} + [[nu]]_lambda`.
    pub sum: f64,
    pub met: bool,
    pub failing: Vec<String>,
}

pub fn measure_hypotheses(nu: &VectorMeasure, lambda: f64) -> Result<MeasureHypotheses> {
    let origin = origin_ahlfors(nu, lambda, &RadiusSample::default_for(nu))?;
    let mut failing = Vec::new();
    if origin.divergent || !origin.value.is_finite() {
        failing.push(format!("origin Morrey control ||nu||_(0,{lambda}) diverges"));
    }
    let wolff = if lambda > 0.0 {
        let w = wolff_condition(nu, lambda, &default_y_sample(nu, 8), &WolffQuadrature::default())?;
        if w.divergent || !w.value.is_finite() {
            failing.push(format!("uniform potential condition [[nu]]_{lambda} diverges"));
        }
        Some(w)
    } else {
        failing.push("the uniform potential condition needs lambda > 0".into());
        None
    };
    let sum = origin.value + wolff.as_ref().map_or(0.0, |w| w.value);
    Ok(MeasureHypotheses {
        lambda,
        origin_ahlfors: origin,
        wolff_bracket: wolff,
        sum,
        met: failing.is_empty(),
        failing,
    })
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct SplitSample {
    pub member: usize,
    pub lhs: f64,
    pub j1: f64,
    pub j2: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FundamentalReport {
    pub inequality: InequalityReport,
    pub hypotheses: MeasureHypotheses,
    /// Only present for the fundamental estimate.
    pub split: Vec<SplitSample>,
    /// `LHS <= J_1 + J_2` on every member, up to rounding.
    pub split_triangle_holds: bool,
}

/// Shared state: ensemble grid, padded working grid and the points of `nu`.
struct Frame {
    inner: Grid,
    work: Grid,
    nu: NuPoints,
}

impl Frame {
    fn new(op: &HomogeneousOperator, nu: &VectorMeasure, ensemble: &dyn FieldSource, padding: usize) -> Result<Self> {
        require_members(ensemble)?;
        let inner = ensemble.field(0).grid().clone();
        if inner.dim() != op.dim() || nu.dim() != op.dim() {
            return Err(Error::DimensionMismatch("operator, measure and ensemble dimensions differ".into()));
        }
        let work = inner.padded(padding.max(1))?;
        let nu = NuPoints::locate(nu, &inner, &work)?;
        Ok(Frame { inner, work, nu })
    }

    /// `u` embedded in the working grid, `g = A(D)u` and `||g||_1`.
    fn member(&self, op: &HomogeneousOperator, ensemble: &dyn FieldSource, i: usize) -> Result<(GridField, GridField, f64)> {
        let u = ensemble.field(i);
        if !u.grid().same_geometry(&self.inner) || u.value_dim() != op.dim_e() {
            return Err(Error::DimensionMismatch("ensemble member does not match the operator".into()));
        }
        let u = u.embed(&self.work)?;
        let g = apply_operator(op, &u)?;
        let rhs = l1(&g);
        Ok((u, g, rhs))
    }
}

fn check_exponents(dim: usize, q: f64, ell: usize) -> Result<()> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("q = {q} must satisfy 1 <= q < inf")));
    }
    if ell == 0 || ell >= dim {
        return Err(Error::InvalidArgument(format!("l = {ell} must satisfy 0 < l < N = {dim}")));
    }
    Ok(())
}

/// `psi(t) = 1 - s(4t - 1)` on `[1/4, 1/2]` as a polynomial in `t`, with
/// `s` the quintic smoothstep.
fn psi_coefficients() -> [f64; 6] {
    // s(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5, tau = 4t - 1.
    let s = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];
    let mut out = [0.0; 6];
    out[0] = 1.0;
    // (4t - 1)^j expanded by repeated multiplication.
    let mut power = vec![1.0];
    for (j, &sj) in s.iter().enumerate() {
        if j > 0 {
            let mut next = vec![0.0; power.len() + 1];
            for (k, &p) in power.iter().enumerate() {
                next[k] -= p;
                next[k + 1] += 4.0 * p;
            }
            power = next;
        }
        for (k, &p) in power.iter().enumerate() {
            out[k] -= sj * p;
        }
    }
    out
}

/// Radial cutoff: 1 on `t <= 1/4`, 0 on `t >= 1/2`, `C^2`.
pub fn cutoff(t: f64) -> f64 {
    1.0 - smoothstep(4.0 * t - 1.0)
}

/// Cells of a grid sorted by distance from the origin.
struct RadialOrder {
    order: Vec<usize>,
    radius: Vec<f64>,
}

impl RadialOrder {
    fn new(grid: &Grid) -> Self {
        let r: Vec<f64> = (0..grid.len()).map(|k| norm(&grid.point(k))).collect();
        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_by(|&a, &b| r[a].total_cmp(&r[b]));
        let radius = order.iter().map(|&k| r[k]).collect();
        RadialOrder { order, radius }
    }

    /// `Psi(x) = int psi(|y|/rho) g(y) dy` at each `rho`, from prefix sums
    /// of the radial moments `|y|^k g(y)`.
    fn cutoff_integrals(&self, g: &GridField, rhos: &[f64]) -> Vec<Vec<Complex64>> {
        let d = g.value_dim();
        let vol = g.grid().cell_volume();
        let c = psi_coefficients();
        let n = self.order.len();
        let mut prefix = vec![vec![Complex64::new(0.0, 0.0); d]; 6 * (n + 1)];
        for (i, &k) in self.order.iter().enumerate() {
            let r = self.radius[i];
            let mut rk = 1.0;
            for m in 0..6 {
                for a in 0..d {
                    prefix[m * (n + 1) + i + 1][a] = prefix[m * (n + 1) + i][a] + g.component(a)[k] * (rk * vol);
                }
                rk *= r;
            }
        }
        rhos.iter()
            .map(|&rho| {
                let mut out = vec![Complex64::new(0.0, 0.0); d];
                if rho <= 0.0 {
                    return out;
                }
                let lo = self.radius.partition_point(|y| *y <= rho / 4.0);
                let hi = self.radius.partition_point(|y| *y < rho / 2.0);
                for a in 0..d {
                    out[a] = prefix[lo][a];
                }
                let mut inv = 1.0;
                for (m, &cm) in c.iter().enumerate() {
                    for a in 0..d {
                        out[a] += (prefix[m * (n + 1) + hi][a] - prefix[m * (n + 1) + lo][a]) * (cm * inv);
                    }
                    inv /= rho;
                }
                out
            })
            .collect()
    }
}

/// Assemble a report once the prediction is known.
fn finish(id: &str, samples: &[Sample], hyp: &MeasureHypotheses, q: f64, opts: &CheckOptions, seed: Option<u64>) -> InequalityReport {
    let functional = hyp.sum.powf(1.0 / q);
    let predicted = if hyp.met { opts.calibration.map(|c| c * functional) } else { None };
    let mut report = InequalityReport::assemble(id, samples, predicted, opts.slack);
    report.seed = seed;
    report.functional = Some(functional);
    report.calibration = opts.calibration;
    for f in &hyp.failing {
        report.hypothesis_failed(f, hyp.sum);
    }
    if hyp.met && opts.calibration.is_none() {
        report.notes.push("uncalibrated: no bound predicted".into());
    }
    report
}

/// The fundamental estimate with the kernel of `op` (`l = m`), over
/// `g = A(D)u` for the members `u`.
pub fn fundamental_lemma_check(
    op: &HomogeneousOperator,
    nu: &VectorMeasure,
    q: f64,
    ell: usize,
    ensemble: &dyn FieldSource,
    opts: &CheckOptions,
) -> Result<FundamentalReport> {
    check_exponents(op.dim(), q, ell)?;
    if ell != op.order() {
        return Err(Error::InvalidArgument(format!(
            "the kernel of an order-{} operator has l = {}, not {ell}",
            op.order(),
            op.order()
        )));
    }
    let frame = Frame::new(op, nu, ensemble, opts.padding)?;
    let hyp = measure_hypotheses(nu, (op.dim() - ell) as f64 * q)?;
    let radial = RadialOrder::new(&frame.work);
    let k_cells = smoothed_kernel_on_cells(op, &frame.work)?;
    let k_field = GridField::new(frame.work.clone(), k_cells)?;
    let k_at = frame.nu.values(&k_field);
    let rhos: Vec<f64> = frame.nu.points.iter().map(|x| norm(x)).collect();
    let (de, df) = (op.dim_e(), op.dim_f());

    let rows: Vec<(Sample, SplitSample)> = (0..ensemble.count())
        .into_par_iter()
        .map(|i| {
            let (_, g, rhs) = frame.member(op, ensemble, i)?;
            let w = apply_kernel(op, &g)?;
            let w_at = frame.nu.values(&w);
            let lhs = frame.nu.lq(&w_at, q);
            let psi = radial.cutoff_integrals(&g, &rhos);
            let mut part1 = Vec::with_capacity(psi.len());
            let mut part2 = Vec::with_capacity(psi.len());
            for ((kx, p), wx) in k_at.iter().zip(&psi).zip(&w_at) {
                let k1: Vec<Complex64> = (0..de)
                    .map(|r| (0..df).map(|c| kx[r * df + c] * p[c]).sum())
                    .collect();
                let k2: Vec<Complex64> = wx.iter().zip(&k1).map(|(a, b)| a - b).collect();
                part1.push(k1);
                part2.push(k2);
            }
            let j1 = frame.nu.lq(&part1, q);
            let j2 = frame.nu.lq(&part2, q);
            Ok((Sample { lhs, rhs }, SplitSample { member: i, lhs, j1, j2 }))
        })
        .collect::<Result<_>>()?;
    let samples: Vec<Sample> = rows.iter().map(|r| r.0).collect();
    let split: Vec<SplitSample> = rows.into_iter().map(|r| r.1).collect();
    let triangle = split.iter().all(|s| s.lhs <= (s.j1 + s.j2) * (1.0 + 1e-12) + 1e-300);
    let mut report = finish("fundamental-lemma", &samples, &hyp, q, opts, ensemble.seed());
    report.notes.push(format!("kernel applied on a grid padded {} times", opts.padding.max(1)));
    Ok(FundamentalReport {
        inequality: report,
        hypotheses: hyp,
        split,
        split_triangle_holds: triangle,
    })
}

/// `|int u . dmu| <= C ||A(D)u||_1` with `lambda = N - m`. Ellipticity and
/// canceling are checked as hypotheses.
pub fn measure_duality_check(
    op: &HomogeneousOperator,
    mu: &VectorMeasure,
    ensemble: &dyn FieldSource,
    opts: &CheckOptions,
) -> Result<FundamentalReport> {
    require_members(ensemble)?;
    if mu.dim_e() != op.dim_e() {
        return Err(Error::DimensionMismatch("measure values must pair with the operator's domain".into()));
    }
    let frame = Frame::new(op, mu, ensemble, 1)?;
    let lambda = op.dim() as f64 - op.order() as f64;
    let mut hyp = measure_hypotheses(mu, lambda.max(0.0))?;
    if require_elliptic(op, structure::DEFAULT_SAMPLES, structure::DEFAULT_TOL).is_err() {
        hyp.failing.push("operator is not elliptic".into());
    }
    let cert = check_canceling(op, structure::DEFAULT_SAMPLES, structure::DEFAULT_TOL, 0)?;
    if cert.canceling != Some(true) {
        hyp.failing.push("operator is not canceling".into());
    }
    hyp.met = hyp.failing.is_empty();

    // Signed pairing weights: density times cell volume, or atom weights.
    let pairing: Vec<(Vec<Complex64>, Option<usize>, Vec<f64>)> = match (mu.atoms(), mu.density()) {
        (Some(atoms), _) => atoms.iter().map(|a| (a.weight.clone(), None, a.point.clone())).collect(),
        (None, Some(d)) => {
            let vol = frame.inner.cell_volume();
            (0..frame.inner.len())
                .filter(|&k| d.iter().any(|c| c[k].norm() > 0.0))
                .map(|k| (d.iter().map(|c| c[k] * vol).collect(), Some(k), Vec::new()))
                .collect()
        }
        _ => unreachable!("a measure is atomic or gridded"),
    };
    let samples: Vec<Sample> = (0..ensemble.count())
        .into_par_iter()
        .map(|i| {
            let u = ensemble.field(i);
            if !u.grid().same_geometry(&frame.inner) || u.value_dim() != op.dim_e() {
                return Err(Error::DimensionMismatch("ensemble member does not match the operator".into()));
            }
            let rhs = l1(&apply_operator(op, &u)?);
            let spec = if mu.atoms().is_some() { Some(u.spectrum()) } else { None };
            let total: Complex64 = pairing
                .iter()
                .map(|(w, cell, x)| {
                    let val = match cell {
                        Some(k) => u.value(*k),
                        None => spec.as_ref().unwrap().evaluate(x),
                    };
                    w.iter().zip(&val).map(|(a, b)| a * b).sum::<Complex64>()
                })
                .sum();
            Ok(Sample { lhs: total.norm(), rhs })
        })
        .collect::<Result<_>>()?;
    let report = finish("duality", &samples, &hyp, 1.0, opts, ensemble.seed());
    Ok(FundamentalReport {
        inequality: report,
        hypotheses: hyp,
        split: Vec::new(),
        split_triangle_holds: true,
    })
}

/// Left side of a trace inequality.
#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum TraceForm {
    /// `int |D^{m-1} u| dnu` (requires `l = 1`, `q = 1`).
    Derivative,
    /// `(int |(-Delta)^{(m-l)/2} u|^q dnu)^{1/q}` via the multiplier `|xi|^{m-l}`.
    Fractional,
}

pub fn trace_inequality_check(
    op: &HomogeneousOperator,
    nu: &VectorMeasure,
    q: f64,
    ell: usize,
    form: TraceForm,
    ensemble: &dyn FieldSource,
    opts: &CheckOptions,
) -> Result<FundamentalReport> {
    check_exponents(op.dim(), q, ell)?;
    let m = op.order();
    if ell > m {
        return Err(Error::InvalidArgument(format!("l = {ell} must not exceed m = {m}")));
    }
    if form == TraceForm::Derivative && (ell != 1 || q != 1.0) {
        return Err(Error::InvalidArgument("the derivative form needs l = 1 and q = 1".into()));
    }
    let frame = Frame::new(op, nu, ensemble, opts.padding)?;
    let hyp = measure_hypotheses(nu, (op.dim() - ell) as f64 * q)?;
    let samples: Vec<Sample> = (0..ensemble.count())
        .into_par_iter()
        .map(|i| {
            let (_, g, rhs) = frame.member(op, ensemble, i)?;
            let w = apply_kernel(op, &g)?;
            let t = match form {
                TraceForm::Derivative => derivative_stack(&w, m - 1)?,
                TraceForm::Fractional => fractional(&w, (m - ell) as f64),
            };
            let lhs = frame.nu.lq(&frame.nu.values(&t), q);
            Ok(Sample { lhs, rhs })
        })
        .collect::<Result<_>>()?;
    let id = match form {
        TraceForm::Derivative => "trace-derivative",
        TraceForm::Fractional => "trace-fractional",
    };
    let mut report = finish(id, &samples, &hyp, q, opts, ensemble.seed());
    report.notes.push("u is recovered as K * A(D)u on the padded grid".into());
    Ok(FundamentalReport {
        inequality: report,
        hypotheses: hyp,
        split: Vec::new(),
        split_triangle_holds: true,
    })
}

/// All components of `D^j w`, stacked.
fn derivative_stack(w: &GridField, j: usize) -> Result<GridField> {
    if j == 0 {
        return Ok(w.clone());
    }
    let dj = catalog::total_derivative(w.grid().dim(), j);
    let mut comps = Vec::new();
    for c in 0..w.value_dim() {
        let single = GridField::new(w.grid().clone(), vec![w.component(c).to_vec()])?;
        comps.extend(apply_operator(&dj, &single)?.into_components());
    }
    GridField::new(w.grid().clone(), comps)
}

fn fractional(w: &GridField, s: f64) -> GridField {
    if s == 0.0 {
        return w.clone();
    }
    w.spectrum()
        .apply(w.value_dim(), |xi, input, out| {
            let f = norm(xi).powf(s);
            for (o, i) in out.iter_mut().zip(input) {
                *o = i * f;
            }
        })
        .to_field()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{EnsembleSpec, TestEnsemble};
    use crate::measures::Atom;

    fn example_measure(grid: &Grid) -> VectorMeasure {
        VectorMeasure::from_density_fn(grid.clone(), 4, |x| 1.0 / norm(x)).unwrap()
    }

    #[test]
    fn cutoff_polynomial_matches_the_smoothstep() {
        let c = psi_coefficients();
        for i in 0..=50 {
            let t = 0.25 + 0.25 * i as f64 / 50.0;
            let p: f64 = c.iter().enumerate().map(|(k, ck)| ck * t.powi(k as i32)).sum();
            assert!((p - cutoff(t)).abs() < 1e-11, "t = {t}");
        }
        assert_eq!(cutoff(0.2), 1.0);
        assert_eq!(cutoff(0.6), 0.0);
    }

    #[test]
    fn cutoff_integrals_match_direct_sums() {
        let grid = Grid::cube(2, 1.0, 32).unwrap();
        let e = TestEnsemble::new(grid.clone(), 2, EnsembleSpec::new(1, 8)).unwrap();
        let g = e.member(0);
        let radial = RadialOrder::new(&grid);
        let rhos = [0.3, 0.77, 1.4];
        let fast = radial.cutoff_integrals(&g, &rhos);
        for (rho, f) in rhos.iter().zip(&fast) {
            for a in 0..2 {
                let direct: Complex64 = (0..grid.len())
                    .map(|k| g.component(a)[k] * cutoff(norm(&grid.point(k)) / rho))
                    .sum::<Complex64>()
                    * grid.cell_volume();
                assert!((direct - f[a]).norm() < 1e-10 * (1.0 + direct.norm()), "{direct} vs {}", f[a]);
            }
        }
    }

    #[test]
    fn gradient_example_passes_after_calibration() {
        let grid = Grid::cube(2, 1.0, 64).unwrap();
        let nu = example_measure(&grid);
        let op = catalog::gradient(2);
        let calib = TestEnsemble::new(grid.clone(), 1, EnsembleSpec::new(24, 100).with_random_support()).unwrap();
        let base = fundamental_lemma_check(&op, &nu, 1.0, 1, &calib, &CheckOptions::default()).unwrap();
        assert!(base.hypotheses.met, "{:?}", base.hypotheses.failing);
        assert!(base.split_triangle_holds);
        let c = super::super::Calibration::fit(&base.inequality).unwrap();
        let test = TestEnsemble::new(grid, 1, EnsembleSpec::new(24, 7).with_random_support()).unwrap();
        let r = fundamental_lemma_check(&op, &nu, 1.0, 1, &test, &CheckOptions::default().calibrated(c.scalar)).unwrap();
        assert!(r.inequality.pass, "{:?}", r.inequality);
        assert!(r.split_triangle_holds);
        assert!(r.split.iter().all(|s| s.j1.is_finite() && s.j2.is_finite()));
    }

    #[test]
    fn zero_g_gives_zero() {
        let grid = Grid::cube(2, 1.0, 32).unwrap();
        let nu = example_measure(&grid);
        let zeros = vec![GridField::zeros(grid, 1)];
        let r = fundamental_lemma_check(&catalog::gradient(2), &nu, 1.0, 1, &zeros, &CheckOptions::default()).unwrap();
        assert_eq!(r.inequality.empirical_best_constant, 0.0);
    }

    #[test]
    fn line_measure_fails_the_hypotheses() {
        let grid = Grid::cube(2, 1.0, 32).unwrap();
        let atoms: Vec<Atom> = (0..64)
            .map(|i| Atom {
                point: vec![-0.5 + (i as f64 + 0.5) / 64.0, 0.0],
                weight: vec![Complex64::new(1.0 / 64.0, 0.0)],
            })
            .collect();
        let nu = VectorMeasure::atomic(2, 1, atoms).unwrap();
        let e = TestEnsemble::new(grid, 1, EnsembleSpec::new(4, 1)).unwrap();
        let r = fundamental_lemma_check(&catalog::gradient(2), &nu, 1.0, 1, &e, &CheckOptions::default().calibrated(1.0)).unwrap();
        assert!(!r.hypotheses.met);
        assert!(!r.inequality.pass);
        assert!(r.inequality.predicted_constant.is_none());
        assert!(r.inequality.violations.iter().any(|v| v.detail.as_deref().unwrap_or("").contains("hypotheses not met")));
    }

    #[test]
    fn duality_with_a_gradient_and_the_example_measure() {
        let grid = Grid::cube(2, 1.0, 64).unwrap();
        let mu = example_measure(&grid);
        let e = TestEnsemble::new(grid, 1, EnsembleSpec::new(16, 3).with_random_support()).unwrap();
        let r = measure_duality_check(&catalog::gradient(2), &mu, &e, &CheckOptions::default()).unwrap();
        assert!(r.hypotheses.met, "{:?}", r.hypotheses.failing);
        assert!(r.inequality.empirical_best_constant > 0.0);
        let lap = measure_duality_check(&catalog::laplacian(2), &mu, &e, &CheckOptions::default()).unwrap();
        assert!(!lap.hypotheses.met);
    }

    #[test]
    fn trace_forms_agree_for_first_order() {
        // m = 1, l = 1: both forms are int |u| dnu.
        let grid = Grid::cube(2, 1.0, 32).unwrap();
        let nu = example_measure(&grid);
        let e = TestEnsemble::new(grid, 1, EnsembleSpec::new(6, 2)).unwrap();
        let op = catalog::gradient(2);
        let a = trace_inequality_check(&op, &nu, 1.0, 1, TraceForm::Derivative, &e, &CheckOptions::default()).unwrap();
        let b = trace_inequality_check(&op, &nu, 1.0, 1, TraceForm::Fractional, &e, &CheckOptions::default()).unwrap();
        assert!((a.inequality.empirical_best_constant - b.inequality.empirical_best_constant).abs() < 1e-12);
        assert!(trace_inequality_check(&op, &nu, 1.0, 2, TraceForm::Fractional, &e, &CheckOptions::default()).is_err());
    }
}
