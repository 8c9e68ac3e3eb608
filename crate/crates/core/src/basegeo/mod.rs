//! Base-manifold geometry on one chart: the coframe `e^a = e^a_μ dx^μ`, its
//! anholonomy and Levi-Civita connection in the `e`-frame, and the gauge
//! potential `A` with its field strength `F = dA + ½[A∧A]`.
//!
//! Frame components use `de^a = ½ C^a_bc e^b∧e^c`, `γ^a_b = γ^a_bc e^c` and
//! `F^α = ½ F^α_bc e^b∧e^c`. Frame derivatives `E_e f` are derivatives along
//! the vectors dual to `e^a`.

mod coordform;
mod fields;
mod jet;

use std::sync::OnceLock;

use nalgebra::DMatrix;
use ndarray::{Array2, Array3, Array4};
use serde::Serialize;
use thiserror::Error;

pub use coordform::CoordForm;
pub use fields::{ChartJson, ChartSpec, CoframeField, FieldFile, Fields, GaugeField, LatticeJson, PointSet};
pub use jet::{Jet, Scalar, MAX_CHART_DIM};

use crate::fieldexpr::{EvalError, FieldError};
use crate::liealg::LieAlgebraSpec;
use crate::registry::Registry;
use crate::structure;

/// Default finite-difference step for the `fd4` scheme.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate coframe at {point:?}: det = {det:e}")]
    DegenerateCoframe { point: Vec<f64>, det: f64 },
    #[error("chart dimension {0} is outside 2..={max}", max = MAX_CHART_DIM)]
    ChartDimension(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{location}: {source}")]
    Field { location: String, source: FieldError },
    #[error("evaluating {location} at {point:?}: {source}")]
    Eval { location: String, point: Vec<f64>, source: EvalError },
    #[error("finite-difference step {step:e} underflows at {point:?}")]
    FdStep { step: f64, point: Vec<f64> },
    #[error("unknown derivative scheme `{0}`")]
    UnknownScheme(String),
}

/// Everything the curvature routines need at one chart point.
#[derive(Debug, Clone)]
pub struct GeometryAtPoint {
    pub point: Vec<f64>,
    pub scheme: String,
    /// `e[(a, μ)] = e^a_μ`.
    pub e: DMatrix<f64>,
    /// `einv[(μ, b)]`, so that `e · einv = I`.
    pub einv: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub binv: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub kinv: DMatrix<f64>,
    /// `C^a_bc`.
    pub anholonomy: Array3<f64>,
    /// `γ^a_bc`.
    pub gamma: Array3<f64>,
    /// `E_e γ^a_bc` at `[a, b, c, e]`.
    pub dgamma: Array4<f64>,
    /// `A^α_b`.
    pub a_frame: Array2<f64>,
    /// `E_e A^α_b` at `[α, b, e]`.
    pub da_frame: Array3<f64>,
    /// `F^α_bc`.
    pub f: Array3<f64>,
    /// `E_e F^α_bc` at `[α, b, c, e]`.
    pub df: Array4<f64>,
}

impl GeometryAtPoint {
    pub fn n(&self) -> usize {
        self.e.nrows()
    }

    pub fn r(&self) -> usize {
        self.f.shape()[0]
    }

    /// Largest `|γ_abc + γ_bac|` with the first index lowered by `b`.
    pub fn metricity_residual(&self) -> f64 {
        let low = lower_first(&self.gamma, &self.b);
        let n = self.n();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    worst = worst.max((low[[a, b, c]] + low[[b, a, c]]).abs());
                }
            }
        }
        worst
    }

    /// Largest `|C^a_bc − γ^a_bc + γ^a_cb|`, the frame form of `de^a + γ^a_b∧e^b = 0`.
    pub fn torsion_residual(&self) -> f64 {
        torsion_residual(&self.gamma, &self.anholonomy)
    }

    pub fn f_antisymmetry_residual(&self) -> f64 {
        let (r, n) = (self.r(), self.n());
        let mut worst = 0.0f64;
        for a in 0..r {
            for b in 0..n {
                for c in 0..n {
                    worst = worst.max((self.f[[a, b, c]] + self.f[[a, c, b]]).abs());
                }
            }
        }
        worst
    }

    /// `F_γ^a_c = k_γγ' F^γ'_{a'c} b^{a'a}` at `[γ, a, c]`.
    pub fn f_mixed(&self) -> Array3<f64> {
        let (r, n) = (self.r(), self.n());
        Array3::from_shape_fn((r, n, n), |(g, a, c)| {
            let mut s = 0.0;
            for g1 in 0..r {
                for a1 in 0..n {
                    s += self.k[(g, g1)] * self.f[[g1, a1, c]] * self.binv[(a1, a)];
                }
            }
            s
        })
    }

    /// `F_{γb}^c = k_γγ' F^γ'_{bc'} b^{c'c}` at `[γ, b, c]`.
    pub fn f_lower_upper(&self) -> Array3<f64> {
        let (r, n) = (self.r(), self.n());
        Array3::from_shape_fn((r, n, n), |(g, b, c)| {
            let mut s = 0.0;
            for g1 in 0..r {
                for c1 in 0..n {
                    s += self.k[(g, g1)] * self.f[[g1, b, c1]] * self.binv[(c1, c)];
                }
            }
            s
        })
    }

    /// `F_δ^{ac}` at `[δ, a, c]`.
    pub fn f_upper(&self) -> Array3<f64> {
        raise_both(&self.f, &self.k, &self.binv)
    }

    /// `E_e F_δ^{ac}` at `[δ, a, c, e]`.
    pub fn df_upper(&self) -> Array4<f64> {
        let (r, n) = (self.r(), self.n());
        let mut out = Array4::zeros((r, n, n, n));
        for e in 0..n {
            let slice = Array3::from_shape_fn((r, n, n), |(g, b, c)| self.df[[g, b, c, e]]);
            let up = raise_both(&slice, &self.k, &self.binv);
            for g in 0..r {
                for a in 0..n {
                    for c in 0..n {
                        out[[g, a, c, e]] = up[[g, a, c]];
                    }
                }
            }
        }
        out
    }
}

fn raise_both(f: &Array3<f64>, k: &DMatrix<f64>, binv: &DMatrix<f64>) -> Array3<f64> {
    let (r, n) = (f.shape()[0], f.shape()[1]);
    Array3::from_shape_fn((r, n, n), |(d, a, c)| {
        let mut s = 0.0;
        for d1 in 0..r {
            let kd = k[(d, d1)];
            if kd == 0.0 {
                continue;
            }
            for a1 in 0..n {
                for c1 in 0..n {
                    s += kd * binv[(a, a1)] * binv[(c, c1)] * f[[d1, a1, c1]];
                }
            }
        }
        s
    })
}

fn lower_first(t: &Array3<f64>, b: &DMatrix<f64>) -> Array3<f64> {
    let n = t.shape()[0];
    Array3::from_shape_fn((n, n, n), |(a, x, y)| (0..n).map(|a1| b[(a, a1)] * t[[a1, x, y]]).sum())
}

pub(crate) fn torsion_residual(gamma: &Array3<f64>, c: &Array3<f64>) -> f64 {
    let n = gamma.shape()[0];
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for cc in 0..n {
                worst = worst.max((c[[a, b, cc]] - gamma[[a, b, cc]] + gamma[[a, cc, b]]).abs());
            }
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Level-1 quantities, generic over plain values and jets

struct Raw<S> {
    n: usize,
    r: usize,
    /// `e^a_μ` at `a·n + μ`.
    e: Vec<S>,
    /// `∂_ν e^a_μ` at `(a·n + μ)·n + ν`.
    de: Vec<S>,
    a: Vec<S>,
    da: Vec<S>,
}

struct Level1<S> {
    /// `einv^μ_b` at `μ·n + b`.
    einv: Vec<S>,
    c: Array3<S>,
    gamma: Array3<S>,
    ab: Array2<S>,
    f: Array3<S>,
}

fn invert<S: Scalar>(m: &[S], n: usize) -> Vec<S> {
    let mut a = m.to_vec();
    let mut inv: Vec<S> = (0..n * n).map(|k| S::cst(if k / n == k % n { 1.0 } else { 0.0 })).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].value().abs().total_cmp(&a[j * n + col].value().abs()))
            .expect("nonempty pivot range");
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
                inv.swap(col * n + k, pivot * n + k);
            }
        }
        let p = a[col * n + col];
        for k in 0..n {
            a[col * n + k] = a[col * n + k] / p;
            inv[col * n + k] = inv[col * n + k] / p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row * n + col];
            for k in 0..n {
                a[row * n + k] = a[row * n + k] - factor * a[col * n + k];
                inv[row * n + k] = inv[row * n + k] - factor * inv[col * n + k];
            }
        }
    }
    inv
}

/// `(∂_ν X_μ − ∂_μ X_ν) einv^ν_b einv^μ_c` for each row of `dx`.
fn curl_in_frame<S: Scalar>(dx: &[S], rows: usize, n: usize, einv: &[S]) -> Array3<S> {
    let zero = S::cst(0.0);
    let mut out = Array3::from_elem((rows, n, n), zero);
    for row in 0..rows {
        let at = |mu: usize, nu: usize| dx[(row * n + mu) * n + nu];
        // w[ν][c] = Σ_μ (∂_ν X_μ − ∂_μ X_ν) einv^μ_c
        let mut w = vec![zero; n * n];
        for nu in 0..n {
            for c in 0..n {
                let mut s = zero;
                for mu in 0..n {
                    s = s + (at(mu, nu) - at(nu, mu)) * einv[mu * n + c];
                }
                w[nu * n + c] = s;
            }
        }
        for b in 0..n {
            for c in b + 1..n {
                let mut s = zero;
                for nu in 0..n {
                    s = s + einv[nu * n + b] * w[nu * n + c];
                }
                out[[row, b, c]] = s;
                out[[row, c, b]] = -s;
            }
        }
    }
    out
}

fn level1<S: Scalar>(raw: &Raw<S>, b: &DMatrix<f64>, binv: &DMatrix<f64>, spec: &LieAlgebraSpec) -> Level1<S> {
    let (n, r) = (raw.n, raw.r);
    let zero = S::cst(0.0);
    let einv = invert(&raw.e, n);
    let c = curl_in_frame(&raw.de, n, n, &einv);

    let clow = Array3::from_shape_fn((n, n, n), |(a, x, y)| {
        let mut s = zero;
        for a1 in 0..n {
            if b[(a, a1)] != 0.0 {
                s = s + c[[a1, x, y]].scale(b[(a, a1)]);
            }
        }
        s
    });
    let glow =
        Array3::from_shape_fn((n, n, n), |(a, x, y)| (clow[[a, x, y]] - clow[[x, a, y]] - clow[[y, a, x]]).scale(0.5));
    let gamma = Array3::from_shape_fn((n, n, n), |(a, x, y)| {
        let mut s = zero;
        for a1 in 0..n {
            if binv[(a, a1)] != 0.0 {
                s = s + glow[[a1, x, y]].scale(binv[(a, a1)]);
            }
        }
        s
    });

    let ab = Array2::from_shape_fn((r, n), |(al, bb)| {
        let mut s = zero;
        for mu in 0..n {
            s = s + raw.a[al * n + mu] * einv[mu * n + bb];
        }
        s
    });
    let mut f = curl_in_frame(&raw.da, r, n, &einv);
    for al in 0..r {
        for be in 0..r {
            for ga in 0..r {
                let k = spec.cg(al, be, ga);
                if k == 0.0 {
                    continue;
                }
                for x in 0..n {
                    for y in 0..n {
                        f[[al, x, y]] = f[[al, x, y]] + (ab[[be, x]] * ab[[ga, y]]).scale(k);
                    }
                }
            }
        }
    }
    Level1 { einv, c, gamma, ab, f }
}

// ---------------------------------------------------------------------------
// Derivative schemes

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeOptions {
    pub fd_step: f64,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        Self { fd_step: DEFAULT_FD_STEP }
    }
}

/// How derivatives of derived quantities (`γ`, `A_b`, `F`) are obtained.
pub trait DerivativeScheme: Send + Sync {
    fn geometry(
        &self,
        coframe: &CoframeField,
        gauge: &GaugeField,
        spec: &LieAlgebraSpec,
        point: &[f64],
        opts: &SchemeOptions,
    ) -> Result<GeometryAtPoint, GeometryError>;
}

/// Exact derivatives: symbolic first and second partials of the inputs, carried
/// through the level-1 formulas as jets.
pub struct Analytic;

/// Fourth-order central differences of field values only, nested once for
/// the inputs' partials and once for the derived quantities.
pub struct FiniteDifference4;

pub fn scheme_registry() -> &'static Registry<dyn DerivativeScheme> {
    static REG: OnceLock<Registry<dyn DerivativeScheme>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<dyn DerivativeScheme> = Registry::new();
        reg.register("analytic", Box::new(Analytic));
        reg.register("fd4", Box::new(FiniteDifference4));
        reg
    })
}

pub fn scheme(name: &str) -> Result<&'static dyn DerivativeScheme, GeometryError> {
    scheme_registry().get(name).ok_or_else(|| GeometryError::UnknownScheme(name.to_string()))
}

struct Context<'a> {
    coframe: &'a CoframeField,
    gauge: &'a GaugeField,
    spec: &'a LieAlgebraSpec,
    n: usize,
    r: usize,
    binv: DMatrix<f64>,
    kinv: DMatrix<f64>,
}

impl<'a> Context<'a> {
    fn new(
        coframe: &'a CoframeField,
        gauge: &'a GaugeField,
        spec: &'a LieAlgebraSpec,
        point: &[f64],
    ) -> Result<Self, GeometryError> {
        let n = coframe.n();
        if point.len() != n {
            return Err(GeometryError::Shape(format!("point has {} coordinates, chart has {n}", point.len())));
        }
        if gauge.n() != n || gauge.r() != spec.r() || spec.n() != n {
            return Err(GeometryError::Shape(format!(
                "chart n = {n}, gauge {}×{}, algebra n = {} r = {}",
                gauge.r(),
                gauge.n(),
                spec.n(),
                spec.r()
            )));
        }
        let singular = |what: &str| GeometryError::Shape(format!("metric block {what} is singular"));
        let binv = coframe.b().clone().try_inverse().ok_or_else(|| singular("b"))?;
        let kinv =
            if spec.r() == 0 { DMatrix::zeros(0, 0) } else { spec.k().try_inverse().ok_or_else(|| singular("k"))? };
        Ok(Self { coframe, gauge, spec, n, r: spec.r(), binv, kinv })
    }

    fn eval(
        &self,
        f: &crate::fieldexpr::FieldProvider,
        point: &[f64],
        what: &str,
        i: usize,
        j: usize,
    ) -> Result<f64, GeometryError> {
        f.evaluate(point).map_err(|source| self.eval_error(what, i, j, point, source))
    }

    fn eval_error(&self, what: &str, i: usize, j: usize, point: &[f64], source: EvalError) -> GeometryError {
        GeometryError::Eval { location: format!("{what}[{}][{}]", i + 1, j + 1), point: point.to_vec(), source }
    }

    fn frame_values(&self, point: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        let n = self.n;
        let mut e = DMatrix::zeros(n, n);
        for a in 0..n {
            for mu in 0..n {
                e[(a, mu)] = self.eval(self.coframe.entry(a, mu), point, "coframe", a, mu)?;
            }
        }
        Ok(e)
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn check_frame(&self, e: &DMatrix<f64>, point: &[f64]) -> Result<(), GeometryError> {
        let det = e.determinant();
        let scale = e.norm().powi(self.n as i32);
        if !(det.abs() >= 1e-12 * scale) || !det.is_finite() {
            return Err(GeometryError::DegenerateCoframe { point: point.to_vec(), det });
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        point: &[f64],
        scheme: &str,
        l1: Level1<f64>,
        e: DMatrix<f64>,
        dgamma: Array4<f64>,
        da_frame: Array3<f64>,
        df: Array4<f64>,
    ) -> GeometryAtPoint {
        let n = self.n;
        let einv = DMatrix::from_fn(n, n, |mu, b| l1.einv[mu * n + b]);
        GeometryAtPoint {
            point: point.to_vec(),
            scheme: scheme.to_string(),
            e,
            einv,
            b: self.coframe.b().clone(),
            binv: self.binv.clone(),
            k: self.spec.k(),
            kinv: self.kinv.clone(),
            anholonomy: l1.c,
            gamma: l1.gamma,
            dgamma,
            a_frame: l1.ab,
            da_frame,
            f: l1.f,
            df,
        }
    }
}

/// `E_e X = einv^μ_e ∂_μ X` for every entry of a coordinate-gradient table.
fn to_frame(coord: &[f64], einv: &DMatrix<f64>, n: usize) -> Vec<f64> {
    (0..n).map(|e| (0..n).map(|mu| einv[(mu, e)] * coord[mu]).sum()).collect()
}

impl DerivativeScheme for Analytic {
    fn geometry(
        &self,
        coframe: &CoframeField,
        gauge: &GaugeField,
        spec: &LieAlgebraSpec,
        point: &[f64],
        _opts: &SchemeOptions,
    ) -> Result<GeometryAtPoint, GeometryError> {
        let ctx = Context::new(coframe, gauge, spec, point)?;
        let (n, r) = (ctx.n, ctx.r);
        let e_vals = ctx.frame_values(point)?;
        ctx.check_frame(&e_vals, point)?;

        let jets = |f: &crate::fieldexpr::FieldProvider,
                    what: &str,
                    i: usize,
                    j: usize|
         -> Result<(Jet, Vec<Jet>), GeometryError> {
            let err = |s| ctx.eval_error(what, i, j, point, s);
            let v = f.evaluate(point).map_err(err)?;
            let mut grad = vec![0.0; n];
            let mut hess = vec![0.0; n * n];
            for nu in 0..n {
                grad[nu] = f.partial(nu, point).map_err(err)?;
                for la in nu..n {
                    let h = f.second_partial(nu, la, point).map_err(err)?;
                    hess[nu * n + la] = h;
                    hess[la * n + nu] = h;
                }
            }
            let d: Vec<Jet> = (0..n).map(|nu| Jet::new(grad[nu], &hess[nu * n..nu * n + n])).collect();
            Ok((Jet::new(v, &grad), d))
        };

        let mut raw = Raw { n, r, e: Vec::new(), de: Vec::new(), a: Vec::new(), da: Vec::new() };
        for a in 0..n {
            for mu in 0..n {
                let (v, d) = jets(coframe.entry(a, mu), "coframe", a, mu)?;
                raw.e.push(v);
                raw.de.extend(d);
            }
        }
        for al in 0..r {
            for mu in 0..n {
                let (v, d) = jets(gauge.entry(al, mu), "gauge", al, mu)?;
                raw.a.push(v);
                raw.da.extend(d);
            }
        }
        let l1 = level1(&raw, coframe.b(), &ctx.binv, spec);
        let einv = DMatrix::from_fn(n, n, |mu, b| l1.einv[mu * n + b].v);
        let fr = |j: &Jet| to_frame(&j.d[..n], &einv, n);

        let mut dgamma = Array4::zeros((n, n, n, n));
        for ((a, b, c), j) in l1.gamma.indexed_iter() {
            for (e, v) in fr(j).into_iter().enumerate() {
                dgamma[[a, b, c, e]] = v;
            }
        }
        let mut da_frame = Array3::zeros((r, n, n));
        for ((al, b), j) in l1.ab.indexed_iter() {
            for (e, v) in fr(j).into_iter().enumerate() {
                da_frame[[al, b, e]] = v;
            }
        }
        let mut df = Array4::zeros((r, n, n, n));
        for ((al, b, c), j) in l1.f.indexed_iter() {
            for (e, v) in fr(j).into_iter().enumerate() {
                df[[al, b, c, e]] = v;
            }
        }
        let values = Level1 {
            einv: l1.einv.iter().map(|j| j.v).collect(),
            c: l1.c.mapv(|j| j.v),
            gamma: l1.gamma.mapv(|j| j.v),
            ab: l1.ab.mapv(|j| j.v),
            f: l1.f.mapv(|j| j.v),
        };
        Ok(ctx.finish(point, "analytic", values, e_vals, dgamma, da_frame, df))
    }
}

/// Fourth-order central difference from samples at `x−2h, x−h, x+h, x+2h`.
fn fd4(m2: f64, m1: f64, p1: f64, p2: f64, h: f64) -> f64 {
    (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h)
}

const STENCIL: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];

fn check_step(h: f64, point: &[f64]) -> Result<(), GeometryError> {
    let ok = h.is_finite() && h > 0.0 && point.iter().all(|&x| x + h != x && x + 2.0 * h != x + h);
    if ok {
        Ok(())
    } else {
        Err(GeometryError::FdStep { step: h, point: point.to_vec() })
    }
}

impl FiniteDifference4 {
    fn values_at(ctx: &Context<'_>, point: &[f64], h: f64) -> Result<Level1<f64>, GeometryError> {
        let (n, r) = (ctx.n, ctx.r);
        let mut shifted = vec![point.to_vec(); 4 * n];
        for nu in 0..n {
            for (s, off) in STENCIL.iter().enumerate() {
                shifted[nu * 4 + s][nu] += off * h;
            }
        }
        let sample = |f: &crate::fieldexpr::FieldProvider,
                      what: &str,
                      i: usize,
                      j: usize|
         -> Result<(f64, Vec<f64>), GeometryError> {
            let v = ctx.eval(f, point, what, i, j)?;
            let mut d = Vec::with_capacity(n);
            for nu in 0..n {
                let s: Vec<f64> =
                    (0..4).map(|k| ctx.eval(f, &shifted[nu * 4 + k], what, i, j)).collect::<Result<_, _>>()?;
                d.push(fd4(s[0], s[1], s[2], s[3], h));
            }
            Ok((v, d))
        };
        let mut raw = Raw { n, r, e: Vec::new(), de: Vec::new(), a: Vec::new(), da: Vec::new() };
        for a in 0..n {
            for mu in 0..n {
                let (v, d) = sample(ctx.coframe.entry(a, mu), "coframe", a, mu)?;
                raw.e.push(v);
                raw.de.extend(d);
            }
        }
        for al in 0..r {
            for mu in 0..n {
                let (v, d) = sample(ctx.gauge.entry(al, mu), "gauge", al, mu)?;
                raw.a.push(v);
                raw.da.extend(d);
            }
        }
        Ok(level1(&raw, ctx.coframe.b(), &ctx.binv, ctx.spec))
    }
}

impl DerivativeScheme for FiniteDifference4 {
    fn geometry(
        &self,
        coframe: &CoframeField,
        gauge: &GaugeField,
        spec: &LieAlgebraSpec,
        point: &[f64],
        opts: &SchemeOptions,
    ) -> Result<GeometryAtPoint, GeometryError> {
        let ctx = Context::new(coframe, gauge, spec, point)?;
        let (n, r) = (ctx.n, ctx.r);
        let h = opts.fd_step;
        check_step(h, point)?;
        let e_vals = ctx.frame_values(point)?;
        ctx.check_frame(&e_vals, point)?;
        let center = Self::values_at(&ctx, point, h)?;

        // coordinate gradients of γ, A_b and F, stacked per direction
        let flat =
            |l: &Level1<f64>| -> Vec<f64> { l.gamma.iter().chain(l.ab.iter()).chain(l.f.iter()).copied().collect() };
        let len = flat(&center).len();
        let mut coord = vec![vec![0.0; n]; len];
        for mu in 0..n {
            let mut samples = Vec::with_capacity(4);
            for off in STENCIL {
                let mut p = point.to_vec();
                p[mu] += off * h;
                samples.push(flat(&Self::values_at(&ctx, &p, h)?));
            }
            for (k, slot) in coord.iter_mut().enumerate() {
                slot[mu] = fd4(samples[0][k], samples[1][k], samples[2][k], samples[3][k], h);
            }
        }
        let einv = DMatrix::from_fn(n, n, |mu, b| center.einv[mu * n + b]);
        let frame: Vec<Vec<f64>> = coord.iter().map(|g| to_frame(g, &einv, n)).collect();

        let ng = n * n * n;
        let na = r * n;
        let dgamma = Array4::from_shape_fn((n, n, n, n), |(a, b, c, e)| frame[(a * n + b) * n + c][e]);
        let da_frame = Array3::from_shape_fn((r, n, n), |(al, b, e)| frame[ng + al * n + b][e]);
        let df = Array4::from_shape_fn((r, n, n, n), |(al, b, c, e)| frame[ng + na + (al * n + b) * n + c][e]);
        Ok(ctx.finish(point, "fd4", center, e_vals, dgamma, da_frame, df))
    }
}

/// Geometry for a full field set using a registered scheme.
pub fn geometry_at(
    fields: &Fields,
    spec: &LieAlgebraSpec,
    point: &[f64],
    scheme_name: &str,
    opts: &SchemeOptions,
) -> Result<GeometryAtPoint, GeometryError> {
    scheme(scheme_name)?.geometry(&fields.coframe, &fields.gauge, spec, point, opts)
}

// ---------------------------------------------------------------------------
// Base-only operations

fn pure_gravity(coframe: &CoframeField) -> (GaugeField, LieAlgebraSpec) {
    let n = coframe.n();
    let spec = LieAlgebraSpec::from_blocks(n, 0, vec![0.0; n * n * n], coframe.b(), &DMatrix::zeros(0, 0))
        .expect("consistent block sizes");
    (GaugeField::zero(0, n), spec)
}

fn base_geometry(coframe: &CoframeField, point: &[f64]) -> Result<GeometryAtPoint, GeometryError> {
    let (gauge, spec) = pure_gravity(coframe);
    Analytic.geometry(coframe, &gauge, &spec, point, &SchemeOptions::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    pub e: DMatrix<f64>,
    pub einv: DMatrix<f64>,
}

/// `e^a_μ` at `point` and its inverse.
pub fn frame_matrix(coframe: &CoframeField, point: &[f64]) -> Result<FrameMatrix, GeometryError> {
    let (gauge, spec) = pure_gravity(coframe);
    let ctx = Context::new(coframe, &gauge, &spec, point)?;
    let e = ctx.frame_values(point)?;
    ctx.check_frame(&e, point)?;
    let einv = e.clone().try_inverse().ok_or(GeometryError::DegenerateCoframe { point: point.to_vec(), det: 0.0 })?;
    Ok(FrameMatrix { e, einv })
}

/// `C^a_bc` with `de^a = ½ C^a_bc e^b∧e^c`.
pub fn anholonomy(coframe: &CoframeField, point: &[f64]) -> Result<Array3<f64>, GeometryError> {
    Ok(base_geometry(coframe, point)?.anholonomy)
}

/// `γ^a_bc`, metric with respect to `b` and torsion free.
pub fn levi_civita(coframe: &CoframeField, point: &[f64]) -> Result<Array3<f64>, GeometryError> {
    Ok(base_geometry(coframe, point)?.gamma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseCurvature {
    /// `Ric^a_d`.
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    /// `Ein^a_d`.
    pub einstein: DMatrix<f64>,
}

pub fn curvature_of(geom: &GeometryAtPoint) -> BaseCurvature {
    let curv = structure::curvature(&geom.gamma, &geom.dgamma, &geom.anholonomy);
    let ricci = structure::ricci(&curv, &geom.binv);
    let scalar = ricci.trace();
    let einstein = structure::einstein(&ricci);
    BaseCurvature { ricci, scalar, einstein }
}

/// Ricci, scalar and Einstein curvature of `γ`.
pub fn base_curvature(coframe: &CoframeField, point: &[f64]) -> Result<BaseCurvature, GeometryError> {
    Ok(curvature_of(&base_geometry(coframe, point)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldStrength {
    /// `F^α_bc`.
    pub f: Array3<f64>,
    /// `E_e F^α_bc` at `[α, b, c, e]`.
    pub df: Array4<f64>,
    /// `F_δ^{ac}_{,c}` at `[δ, a]`.
    pub divergence: Array2<f64>,
}

pub fn field_strength(
    spec: &LieAlgebraSpec,
    gauge: &GaugeField,
    coframe: &CoframeField,
    point: &[f64],
) -> Result<FieldStrength, GeometryError> {
    let geom = Analytic.geometry(coframe, gauge, spec, point, &SchemeOptions::default())?;
    let up = geom.df_upper();
    let (r, n) = (geom.r(), geom.n());
    let divergence = Array2::from_shape_fn((r, n), |(d, a)| (0..n).map(|c| up[[d, a, c, c]]).sum());
    Ok(FieldStrength { f: geom.f, df: geom.df, divergence })
}
