//! Numerical checks of the inequalities behind the solvability theory:
//! the two-weight Hardy lemma, the cocanceling moment estimate, the
//! fundamental kernel estimate, the measure duality and trace inequalities,
//! the triviality dichotomy and first-order necessity.
//!
//! Every check evaluates `LHS / RHS` over an ensemble of fields and compares
//! the worst ratio with a predicted bound times a slack factor. Bounds that
//! the theory only states up to a constant carry one calibration scalar,
//! fitted on a calibration ensemble and then frozen.

mod fundamental;
mod hardy;
mod moment;
mod necessity;
mod report;
mod triviality;

pub use fundamental::{
    cutoff, fundamental_lemma_check, measure_duality_check, measure_hypotheses, trace_inequality_check,
    CheckOptions, FundamentalReport, MeasureHypotheses, SplitSample, TraceForm,
};
pub use hardy::{hardy_condition, hardy_converse, hardy_forward, HardyCondition, HardyProblem, HardyWitness};
pub use moment::{cocanceling_moment_check, project_onto_kernel};
pub use necessity::{first_order_necessity, necessity_constant, NecessityOptions, NecessityReport};
pub use report::{Calibration, InequalityReport, RatioSummary, Sample, Violation, ViolationKind};
pub use triviality::{triviality_check, EnergyCrossCheck, TrivialityReport, WeakLowerBound};

use crate::ensemble::TestEnsemble;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridField};
use crate::measures::{total_variation, MeasureKind, VectorMeasure};
use num_complex::Complex64;

/// A finite family of fields on one grid.
pub trait FieldSource: Sync {
    fn count(&self) -> usize;
    fn field(&self, index: usize) -> GridField;
    /// Generator seed, when the family is random.
    fn seed(&self) -> Option<u64> {
        None
    }
}

impl FieldSource for TestEnsemble {
    fn count(&self) -> usize {
        self.len()
    }

    fn field(&self, index: usize) -> GridField {
        self.member(index)
    }

    fn seed(&self) -> Option<u64> {
        Some(self.summary().seed)
    }
}

impl FieldSource for [GridField] {
    fn count(&self) -> usize {
        self.len()
    }

    fn field(&self, index: usize) -> GridField {
        self[index].clone()
    }
}

impl FieldSource for Vec<GridField> {
    fn count(&self) -> usize {
        self.len()
    }

    fn field(&self, index: usize) -> GridField {
        self[index].clone()
    }
}

/// Every member multiplied by `factor`.
pub struct Scaled<'a> {
    pub inner: &'a dyn FieldSource,
    pub factor: f64,
}

impl FieldSource for Scaled<'_> {
    fn count(&self) -> usize {
        self.inner.count()
    }

    fn field(&self, index: usize) -> GridField {
        self.inner.field(index).scale(self.factor)
    }

    fn seed(&self) -> Option<u64> {
        self.inner.seed()
    }
}

fn require_members(src: &dyn FieldSource) -> Result<()> {
    if src.count() == 0 {
        return Err(Error::EmptySample("ensemble size is 0".into()));
    }
    Ok(())
}

/// The points carrying `|nu|`, with weights, located on a working grid.
#[derive(Debug, Clone)]
pub(crate) struct NuPoints {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Flat index in the working grid for gridded measures; atoms are
    /// evaluated by trigonometric interpolation instead.
    pub cells: Option<Vec<usize>>,
}

impl NuPoints {
    /// `nu` must be gridded on `inner` or atomic; `work` contains `inner`.
    pub fn locate(nu: &VectorMeasure, inner: &Grid, work: &Grid) -> Result<Self> {
        if nu.dim() != inner.dim() {
            return Err(Error::DimensionMismatch("measure and grid dimensions differ".into()));
        }
        let var = total_variation(nu);
        match var.kind() {
            MeasureKind::Gridded(_) => {
                let g = var.grid().expect("gridded");
                if !g.same_geometry(inner) {
                    return Err(Error::DimensionMismatch(
                        "a gridded measure must live on the ensemble grid".into(),
                    ));
                }
                let offset = inner.offset_in(work)?;
                let vol = inner.cell_volume();
                let density = &var.density().expect("gridded")[0];
                let mut out = NuPoints {
                    points: Vec::new(),
                    weights: Vec::new(),
                    cells: Some(Vec::new()),
                };
                for (k, d) in density.iter().enumerate() {
                    if d.re > 0.0 {
                        let idx: Vec<usize> = inner.unflatten(k).iter().zip(&offset).map(|(i, o)| i + o).collect();
                        out.points.push(inner.point(k));
                        out.weights.push(d.re * vol);
                        out.cells.as_mut().unwrap().push(work.flatten(&idx));
                    }
                }
                Ok(out)
            }
            MeasureKind::Atomic(_) => {
                let atoms = var.atoms().expect("atomic");
                Ok(NuPoints {
                    points: atoms.iter().map(|a| a.point.clone()).collect(),
                    weights: atoms.iter().map(|a| a.weight[0].re).collect(),
                    cells: None,
                })
            }
        }
    }

    /// Values of `field` at every point.
    pub fn values(&self, field: &GridField) -> Vec<Vec<Complex64>> {
        match &self.cells {
            Some(cells) => cells.iter().map(|&k| field.value(k)).collect(),
            None => {
                let spec = field.spectrum();
                self.points.iter().map(|x| spec.evaluate(x)).collect()
            }
        }
    }

    /// `(sum_i w_i |v_i|^q)^{1/q}`.
    pub fn lq(&self, values: &[Vec<Complex64>], q: f64) -> f64 {
        let s: f64 = self
            .weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * vec_norm(v).powf(q))
            .sum();
        s.powf(1.0 / q)
    }
}

pub(crate) fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `int |g| dx` with the Euclidean norm of the values.
pub(crate) fn l1(g: &GridField) -> f64 {
    g.lp_norm(1.0)
}
