//! Levi-Civita connection of the total space in the frame `(e^a, e^α)` and its
//! curvature, computed directly from the structure equations and from the
//! closed-form reduction to base quantities.
//!
//! Total-space indices run over `0..N` with the base block first. All
//! coefficient functions depend on the base point only, so frame derivatives
//! along fiber directions vanish.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use ndarray::{Array3, Array4};
use thiserror::Error;

use crate::basegeo::{self, GeometryAtPoint};
use crate::liealg::LieAlgebraSpec;
use crate::registry::Registry;
use crate::structure;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error("geometry has n = {gn}, r = {gr}; algebra has n = {sn}, r = {sr}")]
    Shape { gn: usize, gr: usize, sn: usize, sr: usize },
    #[error("unknown curvature route `{0}`")]
    UnknownRoute(String),
}

fn check_shapes(geom: &GeometryAtPoint, spec: &LieAlgebraSpec) -> Result<(), CurvatureError> {
    if geom.n() != spec.n() || geom.r() != spec.r() {
        return Err(CurvatureError::Shape { gn: geom.n(), gr: geom.r(), sn: spec.n(), sr: spec.r() });
    }
    Ok(())
}

/// `ω^A_C = ω^A_{C,D} e^D` at one point, with the coframe torsion data.
#[derive(Debug, Clone)]
pub struct KKConnection {
    pub n: usize,
    pub r: usize,
    /// `ω^A_{C,D}` at `[A, C, D]`.
    pub omega: Array3<f64>,
    /// `E_E ω^A_{C,D}` at `[A, C, D, E]`.
    pub domega: Array4<f64>,
    /// `T^D_{EF}` with `de^D = ½ T^D_{EF} e^E∧e^F`.
    pub torsion: Array3<f64>,
    pub h: DMatrix<f64>,
    pub hinv: DMatrix<f64>,
}

impl KKConnection {
    pub fn dim(&self) -> usize {
        self.n + self.r
    }

    /// Largest `|h_{AA'} ω^{A'}_{C,D} + h_{CC'} ω^{C'}_{A,D}|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let big = self.dim();
        let mut worst = 0.0f64;
        for d in 0..big {
            let w = DMatrix::from_fn(big, big, |a, c| self.omega[[a, c, d]]);
            let low = &self.h * w;
            worst = worst.max((&low + low.transpose()).amax());
        }
        worst
    }

    /// Largest `|T^A_{CD} − ω^A_{C,D} + ω^A_{D,C}|`, the frame form of
    /// `de^A + ω^A_C∧e^C = 0`.
    pub fn torsion_residual(&self) -> f64 {
        basegeo_torsion(&self.omega, &self.torsion)
    }
}

fn basegeo_torsion(omega: &Array3<f64>, torsion: &Array3<f64>) -> f64 {
    let big = omega.shape()[0];
    let mut worst = 0.0f64;
    for a in 0..big {
        for c in 0..big {
            for d in 0..big {
                worst = worst.max((torsion[[a, c, d]] - omega[[a, c, d]] + omega[[a, d, c]]).abs());
            }
        }
    }
    worst
}

fn block_metric(geom: &GeometryAtPoint) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, r) = (geom.n(), geom.r());
    let mut h = DMatrix::zeros(n + r, n + r);
    let mut hinv = DMatrix::zeros(n + r, n + r);
    h.view_mut((0, 0), (n, n)).copy_from(&geom.b);
    h.view_mut((n, n), (r, r)).copy_from(&geom.k);
    hinv.view_mut((0, 0), (n, n)).copy_from(&geom.binv);
    hinv.view_mut((n, n), (r, r)).copy_from(&geom.kinv);
    (h, hinv)
}

/// Torsion data `T^D_{EF}` of the total coframe.
pub fn total_torsion(geom: &GeometryAtPoint, spec: &LieAlgebraSpec) -> Array3<f64> {
    let (n, r) = (geom.n(), geom.r());
    let big = n + r;
    let mut t = Array3::zeros((big, big, big));
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                t[[a, b, c]] = geom.anholonomy[[a, b, c]];
            }
        }
    }
    for al in 0..r {
        for b in 0..n {
            for c in 0..n {
                t[[n + al, b, c]] = geom.f[[al, b, c]];
            }
        }
        for be in 0..r {
            for ga in 0..r {
                let k = spec.cg(al, be, ga);
                if k == 0.0 {
                    continue;
                }
                t[[n + al, n + be, n + ga]] += k;
                for b in 0..n {
                    let v = k * geom.a_frame[[be, b]];
                    t[[n + al, b, n + ga]] -= v;
                    t[[n + al, n + ga, b]] += v;
                }
            }
        }
    }
    t
}

/// Assemble the block connection from base data.
pub fn assemble_omega(geom: &GeometryAtPoint, spec: &LieAlgebraSpec) -> Result<KKConnection, CurvatureError> {
    check_shapes(geom, spec)?;
    let (n, r) = (geom.n(), geom.r());
    let big = n + r;
    let fm = geom.f_mixed();
    let flu = geom.f_lower_upper();
    // frame derivatives of the raised forms, per direction
    let raise = |e: usize| {
        let mut g = geom.clone();
        g.f = Array3::from_shape_fn((r, n, n), |(al, b, c)| geom.df[[al, b, c, e]]);
        (g.f_mixed(), g.f_lower_upper())
    };
    let draised: Vec<_> = (0..n).map(raise).collect();

    let mut omega = Array3::zeros((big, big, big));
    let mut domega = Array4::zeros((big, big, big, big));
    for a in 0..n {
        for c in 0..n {
            for d in 0..n {
                omega[[a, c, d]] = geom.gamma[[a, c, d]];
                for e in 0..n {
                    domega[[a, c, d, e]] = geom.dgamma[[a, c, d, e]];
                }
            }
            for g in 0..r {
                omega[[a, c, n + g]] = -0.5 * fm[[g, a, c]];
                for e in 0..n {
                    domega[[a, c, n + g, e]] = -0.5 * draised[e].0[[g, a, c]];
                }
            }
        }
        for g in 0..r {
            for b in 0..n {
                omega[[a, n + g, b]] = 0.5 * flu[[g, b, a]];
                for e in 0..n {
                    domega[[a, n + g, b, e]] = 0.5 * draised[e].1[[g, b, a]];
                }
            }
        }
    }
    for al in 0..r {
        for c in 0..n {
            for b in 0..n {
                omega[[n + al, c, b]] = -0.5 * geom.f[[al, b, c]];
                for e in 0..n {
                    domega[[n + al, c, b, e]] = -0.5 * geom.df[[al, b, c, e]];
                }
            }
        }
        for g in 0..r {
            for be in 0..r {
                let k = spec.cg(al, be, g);
                if k == 0.0 {
                    continue;
                }
                omega[[n + al, n + g, n + be]] = -0.5 * k;
                for b in 0..n {
                    omega[[n + al, n + g, b]] += k * geom.a_frame[[be, b]];
                    for e in 0..n {
                        domega[[n + al, n + g, b, e]] += k * geom.da_frame[[be, b, e]];
                    }
                }
            }
        }
    }
    let (h, hinv) = block_metric(geom);
    Ok(KKConnection { n, r, omega, domega, torsion: total_torsion(geom, spec), h, hinv })
}

#[derive(Debug, Clone)]
pub struct KKCurvature {
    /// `Ω^A_{C;EF}`.
    pub omega2: Array4<f64>,
    /// `Ric^A_C`.
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    pub einstein: DMatrix<f64>,
}

impl KKCurvature {
    pub fn antisymmetry_residual(&self, hinv: &DMatrix<f64>) -> f64 {
        structure::antisymmetry_residual(&self.omega2, hinv)
    }
}

/// `Ω = dω + ω∧ω` expanded on the coefficient tables.
pub fn curvature_direct(conn: &KKConnection) -> KKCurvature {
    let omega2 = structure::curvature(&conn.omega, &conn.domega, &conn.torsion);
    let ricci = structure::ricci(&omega2, &conn.hinv);
    let scalar = ricci.trace();
    let einstein = structure::einstein(&ricci);
    KKCurvature { omega2, ricci, scalar, einstein }
}

/// The curvature blocks compared between routes.
#[derive(Debug, Clone, PartialEq)]
pub struct RicciBlocks {
    /// `Ric^a_d`, `n×n`.
    pub ric_base: DMatrix<f64>,
    /// `Ric^a_δ`, `n×r`.
    pub ric_mixed: DMatrix<f64>,
    /// `Ric^α_δ`, `r×r`.
    pub ric_fiber: DMatrix<f64>,
    pub scalar: f64,
    /// `Ein^a_d`.
    pub ein_base: DMatrix<f64>,
    /// `Ein^a_δ`.
    pub ein_mixed: DMatrix<f64>,
}

impl RicciBlocks {
    fn from_full(ric: &DMatrix<f64>, ein: &DMatrix<f64>, scalar: f64, n: usize, r: usize) -> Self {
        RicciBlocks {
            ric_base: ric.view((0, 0), (n, n)).into_owned(),
            ric_mixed: ric.view((0, n), (n, r)).into_owned(),
            ric_fiber: ric.view((n, n), (r, r)).into_owned(),
            scalar,
            ein_base: ein.view((0, 0), (n, n)).into_owned(),
            ein_mixed: ein.view((0, n), (n, r)).into_owned(),
        }
    }

    /// Largest componentwise difference across all blocks.
    pub fn max_difference(&self, other: &RicciBlocks) -> f64 {
        let pairs = [
            (&self.ric_base, &other.ric_base),
            (&self.ric_mixed, &other.ric_mixed),
            (&self.ric_fiber, &other.ric_fiber),
            (&self.ein_base, &other.ein_base),
            (&self.ein_mixed, &other.ein_mixed),
        ];
        pairs
            .iter()
            .map(|(a, b)| if a.is_empty() { 0.0 } else { (*a - *b).amax() })
            .fold((self.scalar - other.scalar).abs(), f64::max)
    }
}

/// `c^α_βγ c^β_δε k^γε` as an `r×r` matrix in `(α, δ)`.
fn casimir_term(spec: &LieAlgebraSpec, kinv: &DMatrix<f64>) -> DMatrix<f64> {
    let r = spec.r();
    DMatrix::from_fn(r, r, |al, de| {
        let mut s = 0.0;
        for be in 0..r {
            for ga in 0..r {
                let x = spec.cg(al, be, ga);
                if x == 0.0 {
                    continue;
                }
                for ep in 0..r {
                    s += x * spec.cg(be, de, ep) * kinv[(ga, ep)];
                }
            }
        }
        s
    })
}

/// `F_δ^{ac}_{,c} + γ^a_{bc} F_δ^{bc} + γ^c_{bc} F_δ^{ab} − c^γ_αδ A^α_c F_γ^{ac}` at `(δ, a)`.
pub fn yang_mills_divergence(geom: &GeometryAtPoint, spec: &LieAlgebraSpec) -> DMatrix<f64> {
    let (n, r) = (geom.n(), geom.r());
    let up = geom.f_upper();
    let dup = geom.df_upper();
    DMatrix::from_fn(r, n, |de, a| {
        let mut s = 0.0;
        for c in 0..n {
            s += dup[[de, a, c, c]];
            for b in 0..n {
                s += geom.gamma[[a, b, c]] * up[[de, b, c]] + geom.gamma[[c, b, c]] * up[[de, a, b]];
            }
        }
        for ga in 0..r {
            for al in 0..r {
                let k = spec.cg(ga, al, de);
                if k == 0.0 {
                    continue;
                }
                for c in 0..n {
                    s -= k * geom.a_frame[[al, c]] * up[[ga, a, c]];
                }
            }
        }
        s
    })
}

/// `F_β^{ac} F^β_{dc}` at `(a, d)`.
fn stress(geom: &GeometryAtPoint) -> DMatrix<f64> {
    let (n, r) = (geom.n(), geom.r());
    let up = geom.f_upper();
    DMatrix::from_fn(n, n, |a, d| {
        let mut s = 0.0;
        for be in 0..r {
            for c in 0..n {
                s += up[[be, a, c]] * geom.f[[be, d, c]];
            }
        }
        s
    })
}

/// `F_α^{ab} F^α_{ab}`.
fn f_squared(geom: &GeometryAtPoint) -> f64 {
    let up = geom.f_upper();
    up.iter().zip(geom.f.iter()).map(|(x, y)| x * y).sum()
}

/// The reduced formulas for the curvature of the total space.
pub fn ricci_closed_form(geom: &GeometryAtPoint, spec: &LieAlgebraSpec) -> Result<RicciBlocks, CurvatureError> {
    check_shapes(geom, spec)?;
    let (n, r) = (geom.n(), geom.r());
    let base = basegeo::curvature_of(geom);
    let cas = casimir_term(spec, &geom.kinv);
    let cas_trace: f64 = (0..r).map(|i| cas[(i, i)]).sum();
    let ff = f_squared(geom);
    let st = stress(geom);

    let ric_base = &base.ricci - &st * 0.5;
    let ric_mixed = yang_mills_divergence(geom, spec).transpose() * 0.5;
    let up = geom.f_upper();
    let ric_fiber = DMatrix::from_fn(r, r, |al, de| {
        let mut s = 0.0;
        for b in 0..n {
            for c in 0..n {
                s += up[[de, b, c]] * geom.f[[al, b, c]];
            }
        }
        0.25 * s - 0.25 * cas[(al, de)]
    });
    let scalar = base.scalar - 0.25 * ff - 0.25 * cas_trace;
    let eye = DMatrix::identity(n, n);
    let ein_base = &base.einstein - (&st - &eye * (0.25 * ff)) * 0.5 + &eye * (0.125 * cas_trace);
    let ein_mixed = ric_mixed.clone();
    Ok(RicciBlocks { ric_base, ric_mixed, ric_fiber, scalar, ein_base, ein_mixed })
}

/// Residuals of the reduced Einstein–Yang–Mills system.
#[derive(Debug, Clone, PartialEq)]
pub struct EymResidual {
    /// `n×n`: `Ein(γ) − ½(F_β^{ac}F^β_{dc} − ¼ F·F δ) + ⅛ c c k⁻¹ δ`.
    pub einstein_block: DMatrix<f64>,
    /// `r×n`: the covariant divergence of `F`.
    pub ym_block: DMatrix<f64>,
    pub einstein_norm: f64,
    pub ym_norm: f64,
}

pub fn eym_residuals(geom: &GeometryAtPoint, spec: &LieAlgebraSpec) -> Result<EymResidual, CurvatureError> {
    let blocks = ricci_closed_form(geom, spec)?;
    let ym_block = yang_mills_divergence(geom, spec);
    Ok(EymResidual {
        einstein_norm: blocks.ein_base.norm(),
        ym_norm: ym_block.norm(),
        einstein_block: blocks.ein_base,
        ym_block,
    })
}

// ---------------------------------------------------------------------------
// Routes

/// A way of obtaining the curvature blocks at one point.
pub trait CurvatureRoute: Send + Sync {
    fn blocks(&self, geom: &GeometryAtPoint, spec: &LieAlgebraSpec) -> Result<RicciBlocks, CurvatureError>;
}

pub struct Direct;
pub struct ClosedForm;

impl CurvatureRoute for Direct {
    fn blocks(&self, geom: &GeometryAtPoint, spec: &LieAlgebraSpec) -> Result<RicciBlocks, CurvatureError> {
        let conn = assemble_omega(geom, spec)?;
        let k = curvature_direct(&conn);
        Ok(RicciBlocks::from_full(&k.ricci, &k.einstein, k.scalar, conn.n, conn.r))
    }
}

impl CurvatureRoute for ClosedForm {
    fn blocks(&self, geom: &GeometryAtPoint, spec: &LieAlgebraSpec) -> Result<RicciBlocks, CurvatureError> {
        ricci_closed_form(geom, spec)
    }
}

pub fn route_registry() -> &'static Registry<dyn CurvatureRoute> {
    static REG: OnceLock<Registry<dyn CurvatureRoute>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<dyn CurvatureRoute> = Registry::new();
        reg.register("direct", Box::new(Direct));
        reg.register("closed-form", Box::new(ClosedForm));
        reg
    })
}

pub fn route(name: &str) -> Result<&'static dyn CurvatureRoute, CurvatureError> {
    route_registry().get(name).ok_or_else(|| CurvatureError::UnknownRoute(name.to_string()))
}
