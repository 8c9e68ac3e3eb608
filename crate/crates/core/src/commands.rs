//! Batch commands: problem files, run reports and exit codes.

use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::basegeo::{self, ChartSpec, FieldFile, Fields, GeometryError, SchemeOptions, DEFAULT_FD_STEP};
use crate::bundle::{self, BundleError, FiberDependence, PathJson, VelocitySource};
use crate::exterior::{self, ExteriorError};
use crate::fieldexpr::{EvalError, FieldError};
use crate::kkcurv::{self, CurvatureError};
use crate::liealg::{self, rows, AlgebraError, AlgebraJson, LieAlgebraSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_NUMERIC: i32 = 70;

/// Tolerances used when neither the problem nor the command line sets one.
pub const CONNECTION_TOL: f64 = 1e-10;
pub const CROSS_CHECK_TOL_ANALYTIC: f64 = 1e-6;
pub const CROSS_CHECK_TOL_FD: f64 = 1e-3;
pub const IDENTITY_TOL: f64 = 1e-12;
pub const DRIFT_TOL: f64 = 1e-8;
pub const MIN_ORDER: f64 = 3.8;
pub const DEEXTRA_TOL: f64 = 1e-6;
pub const GAUGE_TOL: f64 = 1e-5;
pub const ADJOINT_METRIC_TOL: f64 = 1e-8;
/// Coarsest step count of the Richardson sequence reported by `lift`.
pub const RICHARDSON_BASE_STEPS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommandError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Usage(_) | CommandError::Io { .. } => EXIT_USAGE,
            CommandError::Invariant(_) => EXIT_INVARIANT,
            CommandError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<AlgebraError> for CommandError {
    fn from(e: AlgebraError) -> Self {
        match e {
            AlgebraError::DegenerateMetric { .. } | AlgebraError::Invalid(_) => CommandError::Invariant(e.to_string()),
            _ => CommandError::Usage(e.to_string()),
        }
    }
}

impl From<GeometryError> for CommandError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::DegenerateCoframe { .. } | GeometryError::Eval { .. } | GeometryError::FdStep { .. } => {
                CommandError::Numeric(e.to_string())
            }
            _ => CommandError::Usage(e.to_string()),
        }
    }
}

impl From<BundleError> for CommandError {
    fn from(e: BundleError) -> Self {
        match e {
            BundleError::NotClosed { .. } | BundleError::Dependent(_) | BundleError::OffManifold { .. } => {
                CommandError::Invariant(e.to_string())
            }
            BundleError::IntegratorFailure { .. } | BundleError::Field(FieldError::Eval(_)) => {
                CommandError::Numeric(e.to_string())
            }
            _ => CommandError::Usage(e.to_string()),
        }
    }
}

impl From<CurvatureError> for CommandError {
    fn from(e: CurvatureError) -> Self {
        CommandError::Usage(e.to_string())
    }
}

impl From<ExteriorError> for CommandError {
    fn from(e: ExteriorError) -> Self {
        CommandError::Usage(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Problem files

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinAlgebraJson {
    pub builtin: String,
    pub n: usize,
    /// Fiber dimension; defaults to 3 for `su2`, 4 for `u1_su2`, 1 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgebraRef {
    Builtin(BuiltinAlgebraJson),
    Inline(AlgebraJson),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldsRef {
    /// Path relative to the problem file.
    File(String),
    Inline(FieldFile),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    /// `analytic` (default) or `fd4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Compare the direct and closed-form curvature at every point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub algebra: AlgebraRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<FieldsRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rep: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub paths: Vec<PathJson>,
    #[serde(default)]
    pub options: RunOptions,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self, CommandError> {
        serde_json::from_str(text).map_err(|e| CommandError::Usage(format!("invalid problem file: {e}")))
    }

    /// Read a problem and inline any referenced field file.
    pub fn load(path: &Path) -> Result<Self, CommandError> {
        let text = read(path)?;
        let mut problem = Self::from_json(&text)?;
        if let Some(FieldsRef::File(rel)) = &problem.fields {
            let full = path.parent().unwrap_or(Path::new(".")).join(rel);
            let text = read(&full)?;
            let ff: FieldFile = serde_json::from_str(&text)
                .map_err(|e| CommandError::Usage(format!("invalid field file {}: {e}", full.display())))?;
            problem.fields = Some(FieldsRef::Inline(ff));
        }
        Ok(problem)
    }

    pub fn algebra(&self) -> Result<LieAlgebraSpec, CommandError> {
        match &self.algebra {
            AlgebraRef::Inline(j) => Ok(j.into_spec()?),
            AlgebraRef::Builtin(j) => {
                let r = j.r.unwrap_or(match j.builtin.as_str() {
                    "su2" => 3,
                    "u1_su2" => 4,
                    _ => 1,
                });
                let b = match &j.b {
                    Some(m) => liealg::matrix_from_rows("b", m)?,
                    None => DMatrix::identity(j.n, j.n),
                };
                let k = match &j.k {
                    Some(m) => liealg::matrix_from_rows("k", m)?,
                    None => DMatrix::identity(r, r),
                };
                Ok(liealg::builtin_algebra(&j.builtin, &b, &k)?)
            }
        }
    }

    fn field_file(&self) -> Result<&FieldFile, CommandError> {
        match &self.fields {
            Some(FieldsRef::Inline(ff)) => Ok(ff),
            Some(FieldsRef::File(p)) => Err(CommandError::Usage(format!("field file `{p}` was not loaded"))),
            None => Err(CommandError::Usage("problem has no `fields`".into())),
        }
    }
}

fn read(path: &Path) -> Result<String, CommandError> {
    std::fs::read_to_string(path)
        .map_err(|e| CommandError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Command-line settings that take precedence over the problem's options.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub fd_step: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

/// Options after applying overrides and defaults. `jobs` is kept out of the
/// embedded config so reports do not depend on it.
#[derive(Debug, Clone, PartialEq, Serialize)]
struct Resolved {
    tol: Option<f64>,
    fd_step: f64,
    scheme: String,
    seed: u64,
    trials: usize,
    cross_check: bool,
    #[serde(skip)]
    jobs: usize,
}

fn resolve(opts: &RunOptions, ov: &Overrides) -> Result<Resolved, CommandError> {
    let r = Resolved {
        tol: ov.tol.or(opts.tol),
        fd_step: ov.fd_step.or(opts.fd_step).unwrap_or(DEFAULT_FD_STEP),
        scheme: opts.scheme.clone().unwrap_or_else(|| "analytic".into()),
        seed: ov.seed.or(opts.seed).unwrap_or(0),
        trials: ov.trials.or(opts.trials).unwrap_or(4),
        cross_check: opts.cross_check.unwrap_or(true),
        jobs: ov.jobs.or(opts.jobs).unwrap_or(0),
    };
    if let Some(t) = r.tol {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CommandError::Usage(format!("tolerance {t} must be finite and nonnegative")));
        }
    }
    if !(r.fd_step.is_finite() && r.fd_step > 0.0) {
        return Err(CommandError::Usage(format!("finite-difference step {} must be positive", r.fd_step)));
    }
    basegeo::scheme(&r.scheme)?;
    Ok(r)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CommandError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CommandError::Usage(format!("cannot start {jobs} worker threads: {e}")))
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self { name: name.into(), passed: value <= tol, value, tol, detail: None }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Runtime {
    pub wall_time_s: f64,
    pub jobs: usize,
}

/// Rows for the CSV rendering of a report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: Value,
    /// SHA-256 of the compact JSON encoding of `config`.
    pub config_digest: String,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
    pub data: Value,
    pub runtime: Runtime,
    #[serde(skip)]
    pub table: Option<Table>,
}

impl RunReport {
    fn new(command: &str, config: Value, checks: Vec<CheckRecord>, data: Value, table: Option<Table>) -> Self {
        let digest = hex::encode(Sha256::digest(config.to_string().as_bytes()));
        let passed = checks.iter().all(|c| c.passed);
        Self {
            command: command.to_string(),
            config,
            config_digest: digest,
            passed,
            checks,
            data,
            runtime: Runtime::default(),
            table,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_INVARIANT
        }
    }

    /// The report with its runtime section zeroed.
    pub fn normalized(&self) -> Self {
        Self { runtime: Runtime::default(), ..self.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Per-point or per-path rows when the command produces them, otherwise
    /// one row per check.
    pub fn to_csv(&self) -> String {
        let fallback;
        let table = match &self.table {
            Some(t) => t,
            None => {
                fallback = Table {
                    columns: ["check", "passed", "value", "tol"].map(String::from).to_vec(),
                    rows: self
                        .checks
                        .iter()
                        .map(|c| vec![c.name.clone(), c.passed.to_string(), num(c.value), num(c.tol)])
                        .collect(),
                };
                &fallback
            }
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&table.columns).expect("in-memory writes succeed");
        for row in &table.rows {
            w.write_record(row).expect("in-memory writes succeed");
        }
        String::from_utf8(w.into_inner().expect("in-memory writes succeed")).expect("fields are UTF-8")
    }
}

fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn config_of(command: &str, problem: Option<&ProblemSpec>, resolved: Option<&Resolved>, extra: Value) -> Value {
    let mut v = json!({ "command": command });
    if let Some(p) = problem {
        let mut p = p.clone();
        p.options.jobs = None;
        v["problem"] = serde_json::to_value(p).expect("problems serialize");
    }
    if let Some(r) = resolved {
        v["resolved"] = serde_json::to_value(r).expect("options serialize");
    }
    if !extra.is_null() {
        v["arguments"] = extra;
    }
    v
}

/// Chart points in lexicographic order, each with its position in the input.
fn sorted_points(chart: &ChartSpec) -> Vec<(usize, Vec<f64>)> {
    let mut pts: Vec<(usize, Vec<f64>)> = chart.points().into_iter().enumerate().collect();
    pts.sort_by(|a, b| a.1.iter().zip(&b.1).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(a.0.cmp(&b.0)));
    pts
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Commands

/// Structure-constant and metric hypotheses of the algebra.
pub fn cmd_validate(problem: &ProblemSpec, ov: &Overrides) -> Result<RunReport, CommandError> {
    let spec = problem.algebra()?;
    let tol = ov.tol.or(problem.options.tol).unwrap_or(liealg::DEFAULT_TOL);
    let report = liealg::validate_spec(&spec, tol)?;
    let mut checks: Vec<CheckRecord> = report
        .checks
        .iter()
        .map(|c| {
            let rec = CheckRecord {
                name: format!("{:?}", c.invariant),
                passed: c.passed,
                value: c.max_violation,
                tol,
                detail: None,
            };
            match &c.offending {
                Some(idx) => rec.with_detail(format!("offending indices {idx:?}")),
                None => rec,
            }
        })
        .collect();
    for rec in &mut checks {
        rec.name = snake(&rec.name);
    }
    if let Ok(ff) = problem.field_file() {
        let fields = ff.fields(&spec)?;
        let chart = ff.chart()?;
        checks.push(CheckRecord::at_most("fields_parse", 0.0, 0.0).with_detail(format!(
            "{} coframe rows, {} points",
            fields.n(),
            chart.points().len()
        )));
    }
    let lambda = if spec.r() > 0 { liealg::cosmological_constant(&spec).ok() } else { None };
    let data = json!({
        "validation": report,
        "cosmological_constant": lambda,
        "cosmological_constant_positive_convention": lambda.map(|l| l * liealg::POSITIVE_LAMBDA_SIGN),
    });
    let config = config_of("validate", Some(problem), None, json!({ "tol": tol }));
    Ok(RunReport::new("validate", config, checks, data, None))
}

fn snake(camel: &str) -> String {
    let mut out = String::new();
    for (i, ch) in camel.chars().enumerate() {
        if ch.is_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.extend(ch.to_lowercase());
        } else {
            out.push(ch);
        }
    }
    out
}

/// The exterior-algebra identity suite in dimension `dim`.
pub fn cmd_identities(dim: usize, trials: usize, seed: u64, tol: Option<f64>) -> Result<RunReport, CommandError> {
    if !(exterior::MIN_IDENTITY_DIM..=exterior::MAX_IDENTITY_DIM).contains(&dim) {
        return Err(CommandError::Usage(format!(
            "identity suite needs {} <= N <= {}, got {dim}",
            exterior::MIN_IDENTITY_DIM,
            exterior::MAX_IDENTITY_DIM
        )));
    }
    let tol = tol.unwrap_or(IDENTITY_TOL);
    let report = exterior::check_identities(dim, trials, seed)?;
    let checks = report
        .results
        .iter()
        .map(|r| {
            let rec = CheckRecord::at_most(format!("{:?}", r.identity), r.max_residual, tol)
                .with_detail(format!("{} cases", r.cases));
            CheckRecord { name: snake(&rec.name), ..rec }
        })
        .collect();
    let config = config_of("identities", None, None, json!({ "dim": dim, "trials": trials, "seed": seed, "tol": tol }));
    Ok(RunReport::new("identities", config, checks, serde_json::to_value(&report).expect("serializes"), None))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct EymRecord {
    einstein_norm: f64,
    ym_norm: f64,
    einstein_block: Vec<Vec<f64>>,
    ym_block: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct PointRecord {
    index: usize,
    point: Vec<f64>,
    #[serde(rename = "R")]
    scalar: f64,
    #[serde(rename = "Ric")]
    ricci: Vec<Vec<f64>>,
    #[serde(rename = "Ein")]
    einstein: Vec<Vec<f64>>,
    eym: EymRecord,
    cross_check: Option<f64>,
    metricity: f64,
    torsion: f64,
    connection_antisymmetry: f64,
    connection_torsion: f64,
}

fn curvature_at(
    fields: &Fields,
    spec: &LieAlgebraSpec,
    index: usize,
    point: &[f64],
    opts: &Resolved,
) -> Result<PointRecord, CommandError> {
    let geom = basegeo::geometry_at(fields, spec, point, &opts.scheme, &SchemeOptions { fd_step: opts.fd_step })?;
    let conn = kkcurv::assemble_omega(&geom, spec)?;
    let curv = kkcurv::curvature_direct(&conn);
    let eym = kkcurv::eym_residuals(&geom, spec)?;
    let cross_check = if opts.cross_check {
        let direct = kkcurv::route("direct")?.blocks(&geom, spec)?;
        let closed = kkcurv::route("closed-form")?.blocks(&geom, spec)?;
        Some(direct.max_difference(&closed))
    } else {
        None
    };
    Ok(PointRecord {
        index,
        point: point.to_vec(),
        scalar: curv.scalar,
        ricci: rows(&curv.ricci),
        einstein: rows(&curv.einstein),
        eym: EymRecord {
            einstein_norm: eym.einstein_norm,
            ym_norm: eym.ym_norm,
            einstein_block: rows(&eym.einstein_block),
            ym_block: rows(&eym.ym_block),
        },
        cross_check,
        metricity: geom.metricity_residual(),
        torsion: geom.torsion_residual(),
        connection_antisymmetry: conn.antisymmetry_residual(),
        connection_torsion: conn.torsion_residual(),
    })
}

/// Curvature of the total space and EYM residuals at every chart point.
pub fn cmd_curvature(problem: &ProblemSpec, ov: &Overrides) -> Result<RunReport, CommandError> {
    let spec = problem.algebra()?;
    let ff = problem.field_file()?;
    let fields = ff.fields(&spec)?;
    let chart = ff.chart()?;
    let opts = resolve(&problem.options, ov)?;
    let points = sorted_points(&chart);
    let records: Vec<PointRecord> = pool(opts.jobs)?.install(|| {
        points.par_iter().map(|(i, p)| curvature_at(&fields, &spec, *i, p, &opts)).collect::<Result<Vec<_>, _>>()
    })?;

    let cross_tol =
        opts.tol.unwrap_or(if opts.scheme == "fd4" { CROSS_CHECK_TOL_FD } else { CROSS_CHECK_TOL_ANALYTIC });
    let mut checks = vec![
        CheckRecord::at_most(
            "connection_antisymmetry",
            max_of(records.iter().map(|r| r.connection_antisymmetry)),
            CONNECTION_TOL,
        ),
        CheckRecord::at_most(
            "connection_torsion",
            max_of(records.iter().map(|r| r.connection_torsion)),
            CONNECTION_TOL,
        ),
    ];
    if opts.cross_check {
        checks.push(CheckRecord::at_most(
            "cross_check",
            max_of(records.iter().filter_map(|r| r.cross_check)),
            cross_tol,
        ));
    }
    let lambda = if spec.r() > 0 { liealg::cosmological_constant(&spec).ok() } else { None };
    let summary = json!({
        "points": records.len(),
        "max_einstein_norm": max_of(records.iter().map(|r| r.eym.einstein_norm)),
        "max_ym_norm": max_of(records.iter().map(|r| r.eym.ym_norm)),
        "max_cross_check": if opts.cross_check { Some(max_of(records.iter().filter_map(|r| r.cross_check))) } else { None },
        "R_min": records.iter().map(|r| r.scalar).reduce(f64::min),
        "R_max": records.iter().map(|r| r.scalar).reduce(f64::max),
        "max_metricity": max_of(records.iter().map(|r| r.metricity)),
        "max_torsion": max_of(records.iter().map(|r| r.torsion)),
        "cosmological_constant": lambda,
    });
    let mut columns = vec!["index".to_string()];
    columns.extend(chart.names.iter().cloned());
    columns.extend(["R", "einstein_norm", "ym_norm", "cross_check"].map(String::from));
    let table = Table {
        columns,
        rows: records
            .iter()
            .map(|r| {
                let mut row = vec![r.index.to_string()];
                row.extend(r.point.iter().map(|x| num(*x)));
                row.extend([num(r.scalar), num(r.eym.einstein_norm), num(r.eym.ym_norm)]);
                row.push(r.cross_check.map(num).unwrap_or_default());
                row
            })
            .collect(),
    };
    let data = json!({ "summary": summary, "points": records });
    let config = config_of("curvature", Some(problem), Some(&opts), Value::Null);
    Ok(RunReport::new("curvature", config, checks, data, Some(table)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct PathRecord {
    index: usize,
    rep: String,
    steps: usize,
    times: Vec<f64>,
    elements: Vec<Vec<Vec<f64>>>,
    max_drift: f64,
    richardson: bundle::OrderEstimate,
    /// Distance to `g0·exp(ξ)` when the velocity is constant.
    exp_error: Option<f64>,
}

fn lift_one(spec: &LieAlgebraSpec, index: usize, pj: &PathJson) -> Result<PathRecord, CommandError> {
    let rep = bundle::builtin_rep(&pj.rep, spec)?;
    let path = pj.path(&rep)?;
    let lift = bundle::lift_path(&rep, &path)?;
    let richardson = bundle::convergence_order(&rep, &path.with_steps(RICHARDSON_BASE_STEPS))?;
    let exp_error = match &path.v {
        VelocitySource::Analytic(f) if f.iter().all(|p| p.is_constant()) => {
            let xi = f.iter().map(|p| p.evaluate(&[0.0])).collect::<Result<Vec<_>, EvalError>>();
            xi.ok().map(|xi| (lift.last() - &path.g0 * rep.algebra_element(&xi).exp()).amax())
        }
        _ => None,
    };
    Ok(PathRecord {
        index,
        rep: pj.rep.clone(),
        steps: path.steps,
        times: lift.times.clone(),
        elements: lift.elements.iter().map(rows).collect(),
        max_drift: lift.max_drift,
        richardson,
        exp_error,
    })
}

/// Lift every path of the problem.
pub fn cmd_lift(problem: &ProblemSpec, ov: &Overrides) -> Result<RunReport, CommandError> {
    let spec = problem.algebra()?;
    if problem.paths.is_empty() {
        return Err(CommandError::Usage("problem has no `paths`".into()));
    }
    let opts = resolve(&problem.options, ov)?;
    let tol = opts.tol.unwrap_or(DRIFT_TOL);
    let records: Vec<PathRecord> = pool(opts.jobs)?.install(|| {
        problem.paths.par_iter().enumerate().map(|(i, p)| lift_one(&spec, i, p)).collect::<Result<Vec<_>, _>>()
    })?;
    let mut checks = Vec::new();
    for r in &records {
        checks.push(CheckRecord::at_most(format!("path{}_drift", r.index + 1), r.max_drift, tol));
        if let Some(order) = r.richardson.order {
            checks.push(CheckRecord {
                name: format!("path{}_order", r.index + 1),
                passed: order >= MIN_ORDER,
                value: order,
                tol: MIN_ORDER,
                detail: Some("lower bound".into()),
            });
        }
    }
    let table = Table {
        columns: ["path", "steps", "max_drift", "order", "exp_error"].map(String::from).to_vec(),
        rows: records
            .iter()
            .map(|r| {
                vec![
                    (r.index + 1).to_string(),
                    r.steps.to_string(),
                    num(r.max_drift),
                    r.richardson.order.map(num).unwrap_or_default(),
                    r.exp_error.map(num).unwrap_or_default(),
                ]
            })
            .collect(),
    };
    let config =
        config_of("lift", Some(problem), Some(&opts), json!({ "richardson_base_steps": RICHARDSON_BASE_STEPS }));
    Ok(RunReport::new("lift", config, checks, json!({ "paths": records }), Some(table)))
}

/// Representation used when the problem names none.
pub fn default_rep(spec: &LieAlgebraSpec) -> Result<&'static str, CommandError> {
    match spec.r() {
        1 => Ok("u1_as_so2"),
        3 => Ok("su2_as_so3"),
        4 => Ok("product"),
        r => Err(CommandError::Usage(format!("no default representation for a {r}-dimensional fiber; set `rep`"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct GaugeRecord {
    index: usize,
    point: Vec<f64>,
    deextra: f64,
    gauge_covariance: f64,
    adjoint_metric: f64,
}

/// Coframe identity and gauge covariance at every point for the identity and
/// `trials` random group elements.
pub fn cmd_gauge_check(problem: &ProblemSpec, ov: &Overrides) -> Result<RunReport, CommandError> {
    let spec = problem.algebra()?;
    let ff = problem.field_file()?;
    let fields = ff.fields(&spec)?;
    let chart = ff.chart()?;
    let opts = resolve(&problem.options, ov)?;
    let rep_name = match &problem.rep {
        Some(r) => r.clone(),
        None => default_rep(&spec)?.to_string(),
    };
    let rep = bundle::builtin_rep(&rep_name, &spec)?;
    let points = sorted_points(&chart);
    let h = spec.h().clone();
    let records: Vec<GaugeRecord> = pool(opts.jobs)?.install(|| {
        points
            .par_iter()
            .map(|(i, p)| -> Result<GaugeRecord, CommandError> {
                let geom =
                    basegeo::geometry_at(&fields, &spec, p, &opts.scheme, &SchemeOptions { fd_step: opts.fd_step })?;
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(*i as u64);
                let mut elements = vec![rep.identity()];
                elements.extend((0..opts.trials).map(|_| rep.random_element(&mut rng)));
                let mut rec = GaugeRecord {
                    index: *i,
                    point: p.clone(),
                    deextra: 0.0,
                    gauge_covariance: 0.0,
                    adjoint_metric: 0.0,
                };
                for g in &elements {
                    rec.deextra = rec.deextra.max(bundle::verify_deextra(&geom, g)?);
                    rec.gauge_covariance =
                        rec.gauge_covariance.max(bundle::verify_gauge_covariance(&geom, g, FiberDependence::Chart)?);
                    let s = bundle::adjoint_of(g);
                    rec.adjoint_metric = rec.adjoint_metric.max((s.transpose() * &h * &s - &h).amax());
                }
                Ok(rec)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let checks = vec![
        CheckRecord::at_most("deextra", max_of(records.iter().map(|r| r.deextra)), opts.tol.unwrap_or(DEEXTRA_TOL)),
        CheckRecord::at_most(
            "gauge_covariance",
            max_of(records.iter().map(|r| r.gauge_covariance)),
            opts.tol.unwrap_or(GAUGE_TOL),
        ),
        CheckRecord::at_most(
            "adjoint_metric",
            max_of(records.iter().map(|r| r.adjoint_metric)),
            opts.tol.unwrap_or(ADJOINT_METRIC_TOL),
        ),
    ];
    let mut columns = vec!["index".to_string()];
    columns.extend(chart.names.iter().cloned());
    columns.extend(["deextra", "gauge_covariance", "adjoint_metric"].map(String::from));
    let table = Table {
        columns,
        rows: records
            .iter()
            .map(|r| {
                let mut row = vec![r.index.to_string()];
                row.extend(r.point.iter().map(|x| num(*x)));
                row.extend([num(r.deextra), num(r.gauge_covariance), num(r.adjoint_metric)]);
                row
            })
            .collect(),
    };
    let config = config_of("gauge-check", Some(problem), Some(&opts), json!({ "rep": rep_name }));
    Ok(RunReport::new("gauge-check", config, checks, json!({ "points": records }), Some(table)))
}
