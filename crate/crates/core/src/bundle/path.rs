use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{BundleError, MatrixRep, MAX_DRIFT};
use crate::fieldexpr::{parse_with, FieldError, FieldProvider, ParseOptions};

/// How sampled velocities are read between samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Linear,
    /// Piecewise constant: each sample holds until the next one.
    Hold,
}

#[derive(Debug, Clone)]
pub enum VelocitySource {
    /// One expression in `t` per generator.
    Analytic(Vec<FieldProvider>),
    /// Rows `(t, v)` with strictly increasing `t`.
    Sampled { samples: Vec<(f64, Vec<f64>)>, interpolation: Interpolation },
}

impl VelocitySource {
    pub fn analytic(texts: &[String], params: &BTreeMap<String, f64>) -> Result<Self, BundleError> {
        let opts = ParseOptions::with_variables(["t"]);
        let fields = texts
            .iter()
            .map(|text| {
                let expr =
                    parse_with(text, &opts).map_err(|source| FieldError::Parse { text: text.clone(), source })?;
                FieldProvider::new(&expr, 1, params)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(VelocitySource::Analytic(fields))
    }

    pub fn sampled(samples: Vec<(f64, Vec<f64>)>, interpolation: Interpolation) -> Result<Self, BundleError> {
        let Some(first) = samples.first() else {
            return Err(BundleError::Path("no samples".into()));
        };
        if first.0 > 0.0 {
            return Err(BundleError::Path(format!("samples start at t = {} > 0", first.0)));
        }
        if interpolation == Interpolation::Linear && samples.last().is_none_or(|s| s.0 < 1.0) {
            return Err(BundleError::Path("linear samples must reach t = 1".into()));
        }
        let width = first.1.len();
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(BundleError::Path(format!("sample times not increasing at t = {}", w[1].0)));
            }
        }
        if samples.iter().any(|s| s.1.len() != width || !s.0.is_finite() || s.1.iter().any(|x| !x.is_finite())) {
            return Err(BundleError::Path("ragged or non-finite samples".into()));
        }
        Ok(VelocitySource::Sampled { samples, interpolation })
    }

    pub fn width(&self) -> usize {
        match self {
            VelocitySource::Analytic(f) => f.len(),
            VelocitySource::Sampled { samples, .. } => samples[0].1.len(),
        }
    }

    /// Sample times strictly inside `(0, 1)`, where sampled velocities may kink or jump.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            VelocitySource::Analytic(_) => Vec::new(),
            VelocitySource::Sampled { samples, .. } => {
                samples.iter().map(|s| s.0).filter(|t| *t > 0.0 && *t < 1.0).collect()
            }
        }
    }

    /// `v(t)` using the piece that contains `mid`, so the one-sided value is
    /// used at a breakpoint.
    fn eval(&self, t: f64, mid: f64) -> Result<Vec<f64>, BundleError> {
        match self {
            VelocitySource::Analytic(f) => {
                f.iter().map(|p| p.evaluate(&[t]).map_err(|e| BundleError::Field(FieldError::Eval(e)))).collect()
            }
            VelocitySource::Sampled { samples, interpolation } => {
                let i = samples.partition_point(|s| s.0 <= mid).saturating_sub(1);
                match interpolation {
                    Interpolation::Hold => Ok(samples[i].1.clone()),
                    Interpolation::Linear => {
                        let j = (i + 1).min(samples.len() - 1);
                        if i == j {
                            return Ok(samples[i].1.clone());
                        }
                        let (t0, t1) = (samples[i].0, samples[j].0);
                        let w = (t - t0) / (t1 - t0);
                        Ok(samples[i].1.iter().zip(&samples[j].1).map(|(a, b)| a + w * (b - a)).collect())
                    }
                }
            }
        }
    }
}

/// A vertical path over a fixed base point: `g′ = g·v(t)` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct PathSpec {
    pub v: VelocitySource,
    pub g0: DMatrix<f64>,
    pub steps: usize,
}

impl PathSpec {
    pub fn new(v: VelocitySource, g0: DMatrix<f64>, steps: usize) -> Self {
        Self { v, g0, steps }
    }

    pub fn with_steps(&self, steps: usize) -> Self {
        Self { steps, ..self.clone() }
    }

    /// The time-reversed path with negated velocity, started at `start`.
    pub fn reversed(&self, start: DMatrix<f64>) -> Self {
        let v = match &self.v {
            VelocitySource::Analytic(f) => {
                let params = BTreeMap::new();
                let back = f
                    .iter()
                    .map(|p| {
                        let e = crate::fieldexpr::Expr::Neg(Box::new(substitute_reverse(p.expr())));
                        FieldProvider::new(&e, 1, &params).expect("parameters already bound")
                    })
                    .collect();
                VelocitySource::Analytic(back)
            }
            VelocitySource::Sampled { samples, interpolation } => {
                let mut rev: Vec<(f64, Vec<f64>)> = match interpolation {
                    Interpolation::Linear => {
                        samples.iter().map(|(t, v)| (1.0 - t, v.iter().map(|x| -x).collect())).collect()
                    }
                    // sample i holds on [t_i, t_{i+1}), which reverses to (1 − t_{i+1}, 1 − t_i]
                    Interpolation::Hold => samples
                        .iter()
                        .enumerate()
                        .filter(|(_, (t, _))| *t < 1.0)
                        .map(|(i, (_, v))| {
                            let end = samples.get(i + 1).map_or(1.0, |s| s.0).min(1.0);
                            (1.0 - end, v.iter().map(|x| -x).collect())
                        })
                        .collect(),
                };
                rev.reverse();
                VelocitySource::Sampled { samples: rev, interpolation: *interpolation }
            }
        };
        Self { v, g0: start, steps: self.steps }
    }
}

/// `t ↦ 1 − t` in an expression of one variable.
fn substitute_reverse(e: &crate::fieldexpr::Expr) -> crate::fieldexpr::Expr {
    use crate::fieldexpr::Expr;
    match e {
        Expr::Var(_) => Expr::Sub(Box::new(Expr::Num(1.0)), Box::new(Expr::Var(0))),
        Expr::Num(_) | Expr::Param(_) => e.clone(),
        Expr::Neg(a) => Expr::Neg(Box::new(substitute_reverse(a))),
        Expr::Add(a, b) => Expr::Add(Box::new(substitute_reverse(a)), Box::new(substitute_reverse(b))),
        Expr::Sub(a, b) => Expr::Sub(Box::new(substitute_reverse(a)), Box::new(substitute_reverse(b))),
        Expr::Mul(a, b) => Expr::Mul(Box::new(substitute_reverse(a)), Box::new(substitute_reverse(b))),
        Expr::Div(a, b) => Expr::Div(Box::new(substitute_reverse(a)), Box::new(substitute_reverse(b))),
        Expr::Pow(a, b) => Expr::Pow(Box::new(substitute_reverse(a)), Box::new(substitute_reverse(b))),
        Expr::Call(f, a) => Expr::Call(*f, Box::new(substitute_reverse(a))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftResult {
    /// `t_i = i / steps`.
    pub times: Vec<f64>,
    pub elements: Vec<DMatrix<f64>>,
    /// Largest distance from the group after projection.
    pub max_drift: f64,
}

impl LiftResult {
    pub fn last(&self) -> &DMatrix<f64> {
        self.elements.last().expect("a lift has at least the initial element")
    }
}

fn rk4_step(
    rep: &MatrixRep,
    v: &VelocitySource,
    g: &DMatrix<f64>,
    t0: f64,
    t1: f64,
) -> Result<DMatrix<f64>, BundleError> {
    let h = t1 - t0;
    let mid = 0.5 * (t0 + t1);
    let f = |t: f64, g: &DMatrix<f64>| -> Result<DMatrix<f64>, BundleError> {
        Ok(g * rep.algebra_element(&v.eval(t, mid)?))
    };
    let k1 = f(t0, g)?;
    let k2 = f(mid, &(g + &k1 * (0.5 * h)))?;
    let k3 = f(mid, &(g + &k2 * (0.5 * h)))?;
    let k4 = f(t1, &(g + &k3 * h))?;
    Ok(g + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Integrate `g′ = g·(Σ v^α(t) T_α)` from `g(0) = g0` with classical RK4,
/// projecting back to the group after every step. Steps that straddle a
/// breakpoint of a sampled velocity are split there.
pub fn lift_path(rep: &MatrixRep, path: &PathSpec) -> Result<LiftResult, BundleError> {
    if path.steps == 0 {
        return Err(BundleError::StepCount);
    }
    if path.v.width() != rep.r() {
        return Err(BundleError::Dimension(format!(
            "velocity has {} components, fiber has {}",
            path.v.width(),
            rep.r()
        )));
    }
    let g0 = rep.element(path.g0.clone())?.matrix().clone();
    let breaks = path.v.breakpoints();
    let mut g = g0.clone();
    let mut times = vec![0.0];
    let mut elements = vec![g0];
    let mut max_drift = 0.0f64;
    for i in 0..path.steps {
        let t0 = i as f64 / path.steps as f64;
        let t1 = (i + 1) as f64 / path.steps as f64;
        let mut nodes = vec![t0];
        nodes.extend(breaks.iter().copied().filter(|b| *b > t0 && *b < t1));
        nodes.push(t1);
        for w in nodes.windows(2) {
            g = rk4_step(rep, &path.v, &g, w[0], w[1])?;
        }
        g = rep.project(g);
        let drift = rep.manifold_violation(&g);
        if drift > MAX_DRIFT {
            return Err(BundleError::IntegratorFailure { drift, t: t1 });
        }
        max_drift = max_drift.max(drift);
        times.push(t1);
        elements.push(g.clone());
    }
    Ok(LiftResult { times, elements, max_drift })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderEstimate {
    pub steps: [usize; 3],
    /// `‖g_s(1) − g_{2s}(1)‖` and `‖g_{2s}(1) − g_{4s}(1)‖`, Frobenius.
    pub differences: [f64; 2],
    /// `log₂` of the difference ratio; absent when the finer difference is 0.
    pub order: Option<f64>,
}

/// Empirical convergence order from lifts at `s`, `2s` and `4s` steps.
pub fn convergence_order(rep: &MatrixRep, path: &PathSpec) -> Result<OrderEstimate, BundleError> {
    let s = path.steps;
    let ends = [s, 2 * s, 4 * s]
        .iter()
        .map(|&k| lift_path(rep, &path.with_steps(k)).map(|l| l.last().clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let d1 = (&ends[0] - &ends[1]).norm();
    let d2 = (&ends[1] - &ends[2]).norm();
    let order = if d2 > 0.0 { Some((d1 / d2).log2()) } else { None };
    Ok(OrderEstimate { steps: [s, 2 * s, 4 * s], differences: [d1, d2], order })
}

// ---------------------------------------------------------------------------
// Wire format

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum G0Json {
    /// Only `"identity"` is accepted.
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VelocityJson {
    Expressions(Vec<String>),
    /// `[["expr_1"], ["expr_2"], ...]`.
    Nested(Vec<Vec<String>>),
    /// Rows `[t, v_1, ..., v_r]`.
    Samples(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathJson {
    pub rep: String,
    #[serde(default = "default_g0")]
    pub g0: G0Json,
    pub v: VelocityJson,
    pub steps: usize,
    #[serde(default)]
    pub interpolation: Interpolation,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

fn default_g0() -> G0Json {
    G0Json::Named("identity".into())
}

impl PathJson {
    pub fn path(&self, rep: &MatrixRep) -> Result<PathSpec, BundleError> {
        let d = rep.d();
        let g0 = match &self.g0 {
            G0Json::Named(s) if s == "identity" => DMatrix::identity(d, d),
            G0Json::Named(s) => return Err(BundleError::Path(format!("unknown initial element `{s}`"))),
            G0Json::Matrix(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(BundleError::Dimension(format!("g0 must be {d}×{d}")));
                }
                DMatrix::from_fn(d, d, |i, j| rows[i][j])
            }
        };
        let v = match &self.v {
            VelocityJson::Expressions(e) => VelocitySource::analytic(e, &self.params)?,
            VelocityJson::Nested(rows) => {
                if rows.iter().any(|r| r.len() != 1) {
                    return Err(BundleError::Path("nested velocity rows hold one expression each".into()));
                }
                let flat: Vec<String> = rows.iter().map(|r| r[0].clone()).collect();
                VelocitySource::analytic(&flat, &self.params)?
            }
            VelocityJson::Samples(rows) => {
                if rows.iter().any(|r| r.is_empty()) {
                    return Err(BundleError::Path("empty sample row".into()));
                }
                let samples = rows.iter().map(|r| (r[0], r[1..].to_vec())).collect();
                VelocitySource::sampled(samples, self.interpolation)?
            }
        };
        Ok(PathSpec::new(v, g0, self.steps))
    }
}
