//! Batch front end: operator certificates, measure analyses, solves and the
//! inequality checks, each written as one JSON document with a run manifest.
//!
//! Inputs are file paths or `catalog:NAME` for a built-in operator or
//! measure (see `measolv catalog`).

use clap::{Args, Parser, Subcommand, ValueEnum};
use measolv::ensemble::{EnsembleSpec, TestEnsemble};
use measolv::grid::Grid;
use measolv::lab::{self, Calibration, CheckOptions, NecessityOptions, TraceForm};
use measolv::measures::{regularity_report, Atom, MeasureDocument, VectorMeasure, WolffQuadrature};
use measolv::numerics::{norm, unit_ball_volume};
use measolv::operator::{self, catalog, HomogeneousOperator, OperatorDocument};
use measolv::potentials::{energy, EnergyReport};
use measolv::solver::{solve_density, solve_measure, SolveOptions};
use measolv::{io, Complex64, Error, ErrorClass};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Seed of the ensemble that fixes the fundamental-lemma calibration.
pub const CALIBRATION_SEED: u64 = 0x5eed_ca11;
const CALIBRATION_MEMBERS: usize = 64;

#[derive(Debug, Parser)]
#[command(name = "measolv", version, about = "Certificates, solves and inequality checks for A*(D)f = mu")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ellipticity, canceling and cocanceling certificate for an operator.
    Operator {
        operator: String,
        #[command(flatten)]
        common: Common,
    },
    /// Regularity functionals and energies of a measure.
    Measure {
        measure: String,
        #[command(flatten)]
        common: Common,
    },
    /// Solve A*(D) f = mu - mean.
    Solve {
        operator: String,
        measure: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run one inequality check.
    Verify {
        #[arg(value_enum)]
        check: Check,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        verify: VerifyArgs,
    },
    /// Print a built-in operator or measure document.
    Catalog {
        #[arg(value_enum)]
        kind: CatalogKind,
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Hardy,
    Moment,
    FundamentalLemma,
    Duality,
    Trace,
    Triviality,
    Necessity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CatalogKind {
    Operator,
    Measure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormArg {
    Derivative,
    Fractional,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Directions sampled on the unit sphere.
    #[arg(long, default_value_t = operator::structure::DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Relative singular-value tolerance.
    #[arg(long, default_value_t = operator::structure::DEFAULT_TOL)]
    pub tol: f64,
    /// Cells per axis for built-in measures and ensembles; for `solve`, a
    /// multiple of the measure's resolution refines it.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Box enlargement factor for solves and kernel applications.
    #[arg(long)]
    pub padding: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Test ensemble size.
    #[arg(long, default_value_t = 100)]
    pub ensemble: usize,
    /// Morrey exponent; defaults to N - m.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Potential order.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Exponents, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    /// Space dimension for catalog inputs.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Output file; standard output if absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Operator document or catalog name.
    #[arg(long)]
    pub operator: Option<String>,
    /// Measure document or catalog name.
    #[arg(long)]
    pub measure: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Order of the trace; defaults to the operator order.
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long, value_enum, default_value_t = FormArg::Fractional)]
    pub form: FormArg,
    /// Allowed excess of the empirical constant over the prediction.
    #[arg(long)]
    pub slack: Option<f64>,
    /// Hardy weights `u = |x|^-a`, `v = |x|^-b`.
    #[arg(long, default_value_t = 2.0)]
    pub u_power: f64,
    #[arg(long, default_value_t = 1.0)]
    pub v_power: f64,
    /// Candidate constant for the Hardy converse search.
    #[arg(long)]
    pub candidate: Option<f64>,
    /// Outer radii for triviality, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub radii: Vec<f64>,
}

/// A failed run: exit class and message.
#[derive(Debug)]
pub struct CliError {
    pub class: ErrorClass,
    pub message: String,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        exit_code(self.class)
    }

    fn input(message: impl Into<String>) -> Self {
        CliError { class: ErrorClass::Input, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError { class: e.class(), message: e.to_string() }
    }
}

pub fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Input => 2,
        ErrorClass::Numeric => 3,
        ErrorClass::Precondition => 4,
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct InputDigest {
    pub name: String,
    /// SHA-256 of the file bytes; `None` for catalog inputs.
    pub sha256: Option<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GridSpec {
    pub bounds: Vec<(f64, f64)>,
    pub resolution: Vec<usize>,
}

impl From<&Grid> for GridSpec {
    fn from(g: &Grid) -> Self {
        GridSpec { bounds: g.bounds().to_vec(), resolution: g.resolution().to_vec() }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub flags: BTreeMap<String, serde_json::Value>,
    pub inputs: Vec<InputDigest>,
    pub seed: u64,
    pub grid: Option<GridSpec>,
    pub outputs: Vec<String>,
    pub tool_version: String,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    manifest: &'a RunManifest,
    report: &'a T,
}

/// Render `report` under `manifest`.
pub fn render<T: Serialize>(manifest: &RunManifest, report: &T) -> CliResult<String> {
    Ok(io::to_json(&Document { manifest, report })?)
}

pub struct Inputs {
    digests: Vec<InputDigest>,
    dim: usize,
    resolution: Option<usize>,
}

impl Inputs {
    pub fn new(dim: usize, resolution: Option<usize>) -> Self {
        Inputs { digests: Vec::new(), dim, resolution }
    }

    fn read(&mut self, name: &str) -> CliResult<Option<String>> {
        if name.starts_with("catalog:") {
            self.digests.push(InputDigest { name: name.into(), sha256: None });
            return Ok(None);
        }
        let bytes = std::fs::read(name).map_err(|e| CliError::input(format!("cannot read {name}: {e}")))?;
        self.digests.push(InputDigest { name: name.into(), sha256: Some(hex::encode(Sha256::digest(&bytes))) });
        let text = String::from_utf8(bytes).map_err(|_| CliError::input(format!("{name} is not UTF-8")))?;
        Ok(Some(text))
    }

    fn operator(&mut self, name: &str) -> CliResult<HomogeneousOperator> {
        match self.read(name)? {
            Some(text) => Ok(operator::parse_operator(&text)?),
            None => catalog_operator(&name["catalog:".len()..], self.dim),
        }
    }

    fn measure(&mut self, name: &str, ell: usize) -> CliResult<VectorMeasure> {
        match self.read(name)? {
            Some(text) => Ok(measolv::measures::parse_measure(&text)?),
            None => catalog_measure(&name["catalog:".len()..], self.dim, self.resolution.unwrap_or(64), ell),
        }
    }
}

pub fn catalog_operator(name: &str, dim: usize) -> CliResult<HomogeneousOperator> {
    catalog::by_name(name, dim).ok_or_else(|| {
        CliError::input(format!("unknown operator {name:?} in dimension {dim}; known: {}", catalog::NAMES.join(", ")))
    })
}

pub const MEASURE_NAMES: [&str; 6] = ["example", "line", "disc", "dirac", "zero", "bump"];

/// Built-in measures on `[-1, 1]^N` with `n` cells per axis:
/// `example` is `|x|^{-ell} dx`, `line` is arclength on a segment through
/// the origin as 64 atoms, `disc` the unit-density unit ball, `dirac` a unit
/// atom at the origin, `bump` a Gaussian density.
pub fn catalog_measure(name: &str, dim: usize, n: usize, ell: usize) -> CliResult<VectorMeasure> {
    if dim < 2 {
        return Err(CliError::input("measures need N >= 2"));
    }
    let grid = || Grid::cube(dim, 1.0, n);
    Ok(match name {
        "example" => VectorMeasure::from_density_fn(grid()?, 4, |x| norm(x).powi(-(ell as i32)))?,
        "line" => {
            let k = 64;
            let atoms = (0..k)
                .map(|i| {
                    let mut point = vec![0.0; dim];
                    point[0] = -0.5 + (i as f64 + 0.5) / k as f64;
                    Atom { point, weight: vec![Complex64::new(1.0 / k as f64, 0.0)] }
                })
                .collect();
            VectorMeasure::atomic(dim, 1, atoms)?
        }
        "disc" => VectorMeasure::uniform_ball(grid()?, &vec![0.0; dim], 1.0, unit_ball_volume(dim))?,
        "dirac" => VectorMeasure::dirac(vec![0.0; dim], 1.0)?,
        "zero" => VectorMeasure::zero_gridded(grid()?, 1)?,
        "bump" => VectorMeasure::from_density_fn(grid()?, 1, |x| (-20.0 * x.iter().map(|t| t * t).sum::<f64>()).exp())?,
        _ => return Err(CliError::input(format!("unknown measure {name:?}; known: {}", MEASURE_NAMES.join(", ")))),
    })
}

/// Piecewise-constant refinement of a gridded measure, or atoms deposited
/// on `[-1, 1]^N` with `n` cells per axis.
fn regrid(mu: &VectorMeasure, n: usize) -> CliResult<VectorMeasure> {
    if let Some(g) = mu.grid() {
        let base = g.resolution()[0];
        if g.resolution().iter().any(|&r| r != base) || n % base != 0 {
            return Err(CliError::input(format!("resolution {n} is not a multiple of the measure's {base}")));
        }
        let factor = n / base;
        let fine = g.refined(factor)?;
        let density = mu.density().unwrap();
        let comps = density
            .iter()
            .map(|c| {
                (0..fine.len())
                    .map(|k| {
                        let idx: Vec<usize> = fine.unflatten(k).iter().map(|i| i / factor).collect();
                        c[g.flatten(&idx)]
                    })
                    .collect()
            })
            .collect();
        return Ok(VectorMeasure::gridded(fine, comps)?);
    }
    let grid = Grid::cube(mu.dim(), 1.0, n)?;
    let mut comps = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; mu.dim_e()];
    let vol = grid.cell_volume();
    for a in mu.atoms().unwrap() {
        let k = grid
            .locate(&a.point)
            .ok_or_else(|| CliError::input(format!("atom at {:?} lies outside [-1, 1]^N", a.point)))?;
        for (c, w) in a.weight.iter().enumerate() {
            comps[c][k] += w / vol;
        }
    }
    Ok(VectorMeasure::gridded(grid, comps)?)
}

fn flags_of<T: Serialize>(value: &T) -> BTreeMap<String, serde_json::Value> {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::Object(map)) => map.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => BTreeMap::new(),
    }
}

fn manifest(command: &str, common: &Common, extra: Option<&VerifyArgs>, inputs: Inputs, grid: Option<&Grid>) -> RunManifest {
    let mut flags = flags_of(common);
    if let Some(v) = extra {
        flags.extend(flags_of(v));
    }
    RunManifest {
        command: command.into(),
        flags,
        inputs: inputs.digests,
        seed: common.seed,
        grid: grid.map(GridSpec::from),
        outputs: common.out.iter().map(|p| p.display().to_string()).collect(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
    }
}

/// Parse and run; returns the rendered document and the output path.
pub fn execute(cli: &Cli) -> CliResult<(String, Option<PathBuf>)> {
    match &cli.command {
        Command::Operator { operator, common } => {
            let mut inputs = Inputs::new(common.dim, common.resolution);
            let op = inputs.operator(operator)?;
            let report = cmd_operator(&op, common)?;
            let m = manifest("operator", common, None, inputs, None);
            Ok((render(&m, &report)?, common.out.clone()))
        }
        Command::Measure { measure, common } => {
            let mut inputs = Inputs::new(common.dim, common.resolution);
            let mu = inputs.measure(measure, common.m)?;
            let report = cmd_measure(&mu, common)?;
            let m = manifest("measure", common, None, inputs, mu.grid());
            Ok((render(&m, &report)?, common.out.clone()))
        }
        Command::Solve { operator, measure, common } => {
            let mut inputs = Inputs::new(common.dim, common.resolution);
            let op = inputs.operator(operator)?;
            let mu = inputs.measure(measure, op.order())?;
            let (report, grid) = cmd_solve(&op, &mu, common)?;
            let m = manifest("solve", common, None, inputs, Some(&grid));
            Ok((render(&m, &report)?, common.out.clone()))
        }
        Command::Verify { check, common, verify } => {
            let mut inputs = Inputs::new(common.dim, common.resolution);
            let (report, grid) = cmd_verify(*check, &mut inputs, common, verify)?;
            let name = check.to_possible_value().unwrap().get_name().to_string();
            let m = manifest(&format!("verify {name}"), common, Some(verify), inputs, grid.as_ref());
            Ok((render(&m, &report)?, common.out.clone()))
        }
        Command::Catalog { kind, name, common } => {
            let text = match kind {
                CatalogKind::Operator => io::to_json(&OperatorDocument::from_operator(&catalog_operator(name, common.dim)?))?,
                CatalogKind::Measure => {
                    let mu = catalog_measure(name, common.dim, common.resolution.unwrap_or(64), common.m)?;
                    io::to_json(&MeasureDocument::from_measure(&mu))?
                }
            };
            Ok((text, common.out.clone()))
        }
    }
}

pub fn cmd_operator(op: &HomogeneousOperator, common: &Common) -> CliResult<operator::StructureCertificate> {
    let mut cert = operator::certify(op, common.samples, common.tol, common.seed)?;
    let co = operator::check_cocanceling(op, common.samples, common.tol, common.seed)?;
    cert.cocanceling = co.cocanceling;
    cert.notes.extend(co.notes);
    Ok(cert)
}

#[derive(Debug, Serialize)]
pub struct MeasureAnalysis {
    pub regularity: measolv::measures::RegularityReport,
    pub energies: Vec<EnergyReport>,
    pub notes: Vec<String>,
}

pub fn cmd_measure(mu: &VectorMeasure, common: &Common) -> CliResult<MeasureAnalysis> {
    let dim = mu.dim();
    if common.m == 0 || common.m >= dim {
        return Err(CliError::input(format!("m = {} must satisfy 1 <= m < N = {dim}", common.m)));
    }
    let lambda = common.lambda.unwrap_or((dim - common.m) as f64);
    let regularity = regularity_report(mu, lambda, None, WolffQuadrature::default())?;
    let ps = if common.p.is_empty() { vec![dim as f64 / (dim - common.m) as f64] } else { common.p.clone() };
    let radii = [10.0, 100.0, 1000.0].map(|r| r * mu.scale());
    let mut energies = Vec::new();
    let mut notes = Vec::new();
    for p in ps {
        match energy(mu, common.m, p, &radii) {
            Ok(e) => energies.push(e),
            Err(e) if e.class() == ErrorClass::Input => notes.push(format!("energy at p = {p} skipped: {e}")),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(MeasureAnalysis { regularity, energies, notes })
}

pub fn cmd_solve(
    op: &HomogeneousOperator,
    mu: &VectorMeasure,
    common: &Common,
) -> CliResult<(measolv::solver::SolveResult, Grid)> {
    let mu = match (common.resolution, mu.grid()) {
        (Some(n), _) => regrid(mu, n)?,
        (None, Some(_)) => mu.clone(),
        (None, None) => regrid(mu, 64)?,
    };
    let mut opts = SolveOptions {
        samples: common.samples,
        tol: common.tol,
        ensemble: EnsembleSpec::new(common.ensemble, common.seed),
        ..SolveOptions::default()
    };
    if let Some(p) = common.padding {
        opts.padding = p;
    }
    let p_list = if common.p.is_empty() { vec![1.0, 2.0] } else { common.p.clone() };
    let result = solve_measure(op, &mu, &p_list, &opts)?;
    let grid = mu.grid().unwrap().clone();
    Ok((result, grid))
}

#[derive(Debug, Serialize)]
pub struct HardyRun {
    pub u_power: f64,
    pub v_power: f64,
    pub condition: lab::HardyCondition,
    pub forward: lab::InequalityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converse: Option<Option<lab::HardyWitness>>,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum VerifyReport {
    Hardy(HardyRun),
    Moment(lab::InequalityReport),
    Fundamental(lab::FundamentalReport),
    Triviality(lab::TrivialityReport),
    Necessity(lab::NecessityReport),
}

fn ensemble_grid(mu: Option<&VectorMeasure>, dim: usize, n: Option<usize>) -> CliResult<Grid> {
    match mu.and_then(|m| m.grid()) {
        Some(g) => {
            if let Some(n) = n {
                if g.resolution().iter().any(|&r| r != n) {
                    return Err(CliError::input("--resolution differs from the measure's grid"));
                }
            }
            Ok(g.clone())
        }
        None => Ok(Grid::cube(dim, 1.0, n.unwrap_or(64))?),
    }
}

fn check_options(common: &Common, verify: &VerifyArgs) -> CheckOptions {
    let mut opts = CheckOptions::default();
    if let Some(p) = common.padding {
        opts.padding = p;
    }
    if let Some(s) = verify.slack {
        opts.slack = s;
    }
    opts
}

/// Calibration scalar for `check`, fitted on the example measure
/// `|x|^{-ell}` with a fixed-seed ensemble on `grid`.
pub fn default_calibration(
    op: &HomogeneousOperator,
    ell: usize,
    grid: &Grid,
    check: impl Fn(&VectorMeasure, &TestEnsemble) -> measolv::Result<lab::FundamentalReport>,
) -> CliResult<f64> {
    let example = catalog_measure("example", op.dim(), grid.resolution()[0], ell)?;
    let calib = TestEnsemble::new(
        example.grid().unwrap().clone(),
        op.dim_e(),
        EnsembleSpec::new(CALIBRATION_MEMBERS, CALIBRATION_SEED).with_random_support(),
    )?;
    let base = check(&example, &calib)?;
    Calibration::fit(&base.inequality)
        .map(|c| c.scalar)
        .ok_or_else(|| CliError { class: ErrorClass::Numeric, message: "calibration produced no finite scalar".into() })
}

pub fn cmd_verify(
    check: Check,
    inputs: &mut Inputs,
    common: &Common,
    verify: &VerifyArgs,
) -> CliResult<(VerifyReport, Option<Grid>)> {
    let dim = common.dim;
    let spec = |random: bool| {
        let s = EnsembleSpec::new(common.ensemble, common.seed);
        if random { s.with_random_support() } else { s }
    };
    let operator_or = |inputs: &mut Inputs, default: &str| -> CliResult<HomogeneousOperator> {
        let name = verify.operator.clone().unwrap_or_else(|| format!("catalog:{default}"));
        inputs.operator(&name)
    };
    let measure_or = |inputs: &mut Inputs, default: &str, ell: usize| -> CliResult<VectorMeasure> {
        let name = verify.measure.clone().unwrap_or_else(|| format!("catalog:{default}"));
        inputs.measure(&name, ell)
    };
    match check {
        Check::Hardy => {
            let nu = measure_or(inputs, "disc", 1)?;
            let grid = ensemble_grid(Some(&nu), nu.dim(), common.resolution)?;
            let (a, b) = (verify.u_power, verify.v_power);
            let u = move |x: &[f64]| norm(x).powf(-a);
            let v = move |x: &[f64]| norm(x).powf(-b);
            let problem = lab::HardyProblem::new(u, v, &nu, verify.q, &grid)?;
            let condition = problem.condition(None)?;
            let e = TestEnsemble::new(grid.clone(), 1, spec(true))?;
            let forward = problem.forward(&e, verify.slack.unwrap_or(1.0))?;
            let converse = verify.candidate.map(|c| problem.converse(c, &problem.default_radii(), 12));
            Ok((VerifyReport::Hardy(HardyRun { u_power: a, v_power: b, condition, forward, converse }), Some(grid)))
        }
        Check::Moment => {
            let l = operator_or(inputs, "divergence")?;
            let grid = Grid::cube(l.dim(), 3.0, common.resolution.unwrap_or(64))?;
            let raw = match &verify.measure {
                Some(name) => {
                    let mu = inputs.measure(name, 1)?;
                    mu.density_field().ok_or_else(|| CliError::input("the moment check needs a gridded field"))?
                }
                None => TestEnsemble::new(grid.clone(), l.dim_e(), EnsembleSpec::new(1, common.seed))?.member(0),
            };
            let f = lab::project_onto_kernel(&l, &raw)?;
            let phi = TestEnsemble::new(f.grid().clone(), l.dim_e(), spec(true))?;
            let r = lab::cocanceling_moment_check(&l, &f, &phi)?;
            Ok((VerifyReport::Moment(r), Some(f.grid().clone())))
        }
        Check::FundamentalLemma | Check::Trace => {
            let op = operator_or(inputs, "gradient")?;
            let ell = verify.ell.unwrap_or(op.order());
            let nu = measure_or(inputs, "example", ell)?;
            let grid = ensemble_grid(Some(&nu), op.dim(), common.resolution)?;
            let e = TestEnsemble::new(grid.clone(), op.dim_e(), spec(true))?;
            let opts = check_options(common, verify);
            let q = verify.q;
            let r = if check == Check::FundamentalLemma {
                let run = |nu: &VectorMeasure, e: &TestEnsemble, o: &CheckOptions| lab::fundamental_lemma_check(&op, nu, q, ell, e, o);
                let c = default_calibration(&op, ell, &grid, |nu, e| run(nu, e, &opts))?;
                run(&nu, &e, &opts.calibrated(c))?
            } else {
                let form = match verify.form {
                    FormArg::Derivative => TraceForm::Derivative,
                    FormArg::Fractional => TraceForm::Fractional,
                };
                let run = |nu: &VectorMeasure, e: &TestEnsemble, o: &CheckOptions| lab::trace_inequality_check(&op, nu, q, ell, form, e, o);
                let c = default_calibration(&op, ell, &grid, |nu, e| run(nu, e, &opts))?;
                run(&nu, &e, &opts.calibrated(c))?
            };
            Ok((VerifyReport::Fundamental(r), Some(grid)))
        }
        Check::Duality => {
            let op = operator_or(inputs, "gradient")?;
            let mu = measure_or(inputs, "example", op.order())?;
            let grid = ensemble_grid(Some(&mu), op.dim(), common.resolution)?;
            let e = TestEnsemble::new(grid.clone(), op.dim_e(), spec(true))?;
            let r = lab::measure_duality_check(&op, &mu, &e, &check_options(common, verify))?;
            Ok((VerifyReport::Fundamental(r), Some(grid)))
        }
        Check::Triviality => {
            let mu = measure_or(inputs, "disc", 1)?;
            let p = common.p.first().copied().unwrap_or(mu.dim() as f64 / (mu.dim() - common.m.min(mu.dim() - 1)) as f64);
            let radii = if verify.radii.is_empty() { vec![10.0, 100.0, 1000.0] } else { verify.radii.clone() };
            let r = lab::triviality_check(&mu, common.m, p, &radii, mu.grid().is_some())?;
            Ok((VerifyReport::Triviality(r), mu.grid().cloned()))
        }
        Check::Necessity => {
            let op = operator_or(inputs, "gradient")?;
            let rho = match &verify.measure {
                Some(name) => {
                    let mu = inputs.measure(name, 1)?;
                    let mu = if mu.grid().is_some() { mu } else { regrid(&mu, common.resolution.unwrap_or(64))? };
                    mu.density_field().unwrap()
                }
                None => catalog_measure("bump", dim, common.resolution.unwrap_or(64), 1)?.density_field().unwrap(),
            };
            if rho.value_dim() != op.dim_e() {
                return Err(CliError::input("the measure must take values in the operator's domain"));
            }
            let f = solve_density(&op, &rho.mean_removed())?;
            let r = lab::first_order_necessity(&op, &f, &NecessityOptions::default())?;
            Ok((VerifyReport::Necessity(r), Some(f.grid().clone())))
        }
    }
}

/// Run with the given arguments; returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok((text, None)) => {
            print!("{text}");
            0
        }
        Ok((text, Some(path))) => match std::fs::write(&path, text) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                2
            }
        },
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.exit_code()
        }
    }
}
