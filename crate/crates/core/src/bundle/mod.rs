//! Matrix realization of the fiber group: representations, the gauge map
//! `S = Ad_g`, checks of the coframe and gauge-covariance identities, and
//! lifting of vertical paths.

mod path;

pub use path::{
    convergence_order, lift_path, G0Json, Interpolation, LiftResult, OrderEstimate, PathJson, PathSpec, VelocityJson,
    VelocitySource,
};

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use ndarray::Array3;
use rand::Rng;
use thiserror::Error;

use crate::basegeo::GeometryAtPoint;
use crate::fieldexpr::FieldError;
use crate::kkcurv::{self, CurvatureError};
use crate::liealg::LieAlgebraSpec;
use crate::registry::Registry;

/// Distance from the group manifold accepted for a [`GroupElement`].
pub const ON_MANIFOLD_TOL: f64 = 1e-8;
/// Closure tolerance for representation generators.
pub const CLOSURE_TOL: f64 = 1e-10;
/// Step for central differences along fiber curves.
pub const FIBER_FD_STEP: f64 = 1e-4;
/// Largest drift from the manifold tolerated after projection.
pub const MAX_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BundleError {
    #[error("representation does not match the algebra: {0}")]
    RepMismatch(String),
    #[error("generators are not closed: [T{}, T{}] is off by {max}", .pair.0 + 1, .pair.1 + 1)]
    NotClosed { max: f64, pair: (usize, usize) },
    #[error("generators are linearly dependent (smallest Gram eigenvalue {0:e})")]
    Dependent(f64),
    #[error("matrix is {violation:e} away from the group")]
    OffManifold { violation: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("path needs at least one step")]
    StepCount,
    #[error("integrator left the group (drift {drift:e} at t = {t})")]
    IntegratorFailure { drift: f64, t: f64 },
    #[error("invalid path: {0}")]
    Path(String),
    #[error("unknown representation `{0}`")]
    UnknownRep(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
}

/// `r` real `d×d` matrices realizing the fiber algebra of `spec`.
#[derive(Debug, Clone)]
pub struct MatrixRep {
    name: String,
    generators: Vec<DMatrix<f64>>,
    spec: LieAlgebraSpec,
    gram_inv: DMatrix<f64>,
    orthogonal: bool,
}

fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

impl MatrixRep {
    pub fn new(name: &str, generators: Vec<DMatrix<f64>>, spec: &LieAlgebraSpec) -> Result<Self, BundleError> {
        let r = spec.r();
        if generators.len() != r {
            return Err(BundleError::RepMismatch(format!(
                "{} generators for a fiber of dimension {r}",
                generators.len()
            )));
        }
        let d = generators.first().map_or(0, |t| t.nrows());
        if generators.iter().any(|t| t.nrows() != d || t.ncols() != d) {
            return Err(BundleError::Dimension("generators must be square and of equal size".into()));
        }
        let gram = DMatrix::from_fn(r, r, |a, b| generators[a].dot(&generators[b]));
        let smallest = if r == 0 { 1.0 } else { gram.clone().symmetric_eigenvalues().min() };
        let scale = if r == 0 { 1.0 } else { gram.diagonal().max() };
        if smallest <= 1e-12 * scale {
            return Err(BundleError::Dependent(smallest));
        }
        let gram_inv = gram.try_inverse().ok_or(BundleError::Dependent(smallest))?;
        let orthogonal = generators.iter().all(|t| (t + t.transpose()).amax() == 0.0);
        let rep = Self { name: name.to_string(), generators, spec: spec.clone(), gram_inv, orthogonal };
        let (max, pair) = rep.closure_residual();
        if max > CLOSURE_TOL {
            return Err(BundleError::NotClosed { max, pair });
        }
        Ok(rep)
    }

    /// Largest entry of `[T_α, T_β] − c^γ_αβ T_γ` and where it occurs.
    pub fn closure_residual(&self) -> (f64, (usize, usize)) {
        let r = self.r();
        let mut worst = (0.0, (0, 0));
        for a in 0..r {
            for b in 0..r {
                let mut m = commutator(&self.generators[a], &self.generators[b]);
                for g in 0..r {
                    m -= &self.generators[g] * self.spec.cg(g, a, b);
                }
                let v = m.amax();
                if v > worst.0 {
                    worst = (v, (a, b));
                }
            }
        }
        worst
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &LieAlgebraSpec {
        &self.spec
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    /// Matrix size.
    pub fn d(&self) -> usize {
        self.generators.first().map_or(0, |t| t.nrows())
    }

    pub fn r(&self) -> usize {
        self.generators.len()
    }

    /// Whether the generators are antisymmetric, so the group is orthogonal.
    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }

    /// `Σ ξ^α T_α`.
    pub fn algebra_element(&self, xi: &[f64]) -> DMatrix<f64> {
        let d = self.d();
        let mut m = DMatrix::zeros(d, d);
        for (t, x) in self.generators.iter().zip(xi) {
            m += t * *x;
        }
        m
    }

    /// Coefficients of the projection of `m` onto the span of the generators.
    pub fn coordinates(&self, m: &DMatrix<f64>) -> DVector<f64> {
        let rhs = DVector::from_iterator(self.r(), self.generators.iter().map(|t| t.dot(m)));
        &self.gram_inv * rhs
    }

    pub fn identity(&self) -> GroupElement<'_> {
        GroupElement { rep: self, matrix: DMatrix::identity(self.d(), self.d()) }
    }

    /// `exp(Σ ξ^α T_α)`.
    pub fn exp(&self, xi: &[f64]) -> GroupElement<'_> {
        GroupElement { rep: self, matrix: self.algebra_element(xi).exp() }
    }

    /// Wrap a matrix after checking it lies on the group.
    pub fn element(&self, matrix: DMatrix<f64>) -> Result<GroupElement<'_>, BundleError> {
        if matrix.nrows() != self.d() || matrix.ncols() != self.d() {
            return Err(BundleError::Dimension(format!(
                "{}×{} matrix for a {}-dimensional representation",
                matrix.nrows(),
                matrix.ncols(),
                self.d()
            )));
        }
        let violation = self.manifold_violation(&matrix);
        if violation > ON_MANIFOLD_TOL {
            return Err(BundleError::OffManifold { violation });
        }
        Ok(GroupElement { rep: self, matrix })
    }

    /// `‖gᵀg − I‖_max` for orthogonal representations. Other representations
    /// only require invertibility.
    pub fn manifold_violation(&self, m: &DMatrix<f64>) -> f64 {
        if !m.iter().all(|x| x.is_finite()) {
            return f64::INFINITY;
        }
        if self.orthogonal {
            (m.transpose() * m - DMatrix::identity(m.nrows(), m.ncols())).amax()
        } else if m.determinant().abs() > 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Nearest group element: the polar factor for orthogonal representations.
    pub fn project(&self, m: DMatrix<f64>) -> DMatrix<f64> {
        if !self.orthogonal {
            return m;
        }
        let svd = m.svd(true, true);
        match (svd.u, svd.v_t) {
            (Some(u), Some(vt)) => u * vt,
            _ => DMatrix::from_element(self.d(), self.d(), f64::NAN),
        }
    }

    /// `exp(ξ)` with each `ξ^α` uniform in `[−π, π]`.
    pub fn random_element<R: Rng>(&self, rng: &mut R) -> GroupElement<'_> {
        let xi: Vec<f64> = (0..self.r()).map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
        self.exp(&xi)
    }
}

#[derive(Debug, Clone)]
pub struct GroupElement<'a> {
    rep: &'a MatrixRep,
    matrix: DMatrix<f64>,
}

impl<'a> GroupElement<'a> {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rep(&self) -> &'a MatrixRep {
        self.rep
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        if self.rep.orthogonal {
            self.matrix.transpose()
        } else {
            self.matrix.clone().try_inverse().expect("group elements are invertible")
        }
    }

    pub fn mul(&self, other: &GroupElement<'_>) -> GroupElement<'a> {
        GroupElement { rep: self.rep, matrix: &self.matrix * &other.matrix }
    }

    /// `g·exp(t T_α)`.
    fn along(&self, alpha: usize, t: f64) -> GroupElement<'a> {
        let step = (&self.rep.generators[alpha] * t).exp();
        GroupElement { rep: self.rep, matrix: &self.matrix * step }
    }
}

/// `S = Ad_g` on `ĝ = s ⊕ g`: the identity on the base block and the
/// adjoint action in the generator basis on the fiber block.
pub fn adjoint_of(g: &GroupElement<'_>) -> DMatrix<f64> {
    let rep = g.rep;
    let (n, r) = (rep.spec.n(), rep.r());
    let ginv = g.inverse();
    let mut s = DMatrix::identity(n + r, n + r);
    for b in 0..r {
        let col = rep.coordinates(&(&g.matrix * &rep.generators[b] * &ginv));
        for a in 0..r {
            s[(n + a, n + b)] = col[a];
        }
    }
    s
}

/// Fourth-order central difference of `f` at 0.
fn central<F: Fn(f64) -> DMatrix<f64>>(f: F, h: f64) -> DMatrix<f64> {
    (f(-2.0 * h) - f(2.0 * h) + (f(h) - f(-h)) * 8.0) / (12.0 * h)
}

fn check_geometry(geom: &GeometryAtPoint, rep: &MatrixRep) -> Result<(), BundleError> {
    if geom.n() != rep.spec.n() || geom.r() != rep.r() {
        return Err(BundleError::Dimension(format!(
            "geometry has n = {}, r = {}; representation has n = {}, r = {}",
            geom.n(),
            geom.r(),
            rep.spec.n(),
            rep.r()
        )));
    }
    Ok(())
}

/// Coordinate matrix of the total coframe at fiber coordinate `y = 0` of the
/// chart `g(y) = g·exp(y¹T₁)···exp(yʳT_r)`: rows are `e^a`, `e^α`; columns
/// are `dx^μ`, `dy^j`.
fn total_coframe(geom: &GeometryAtPoint, g: &GroupElement<'_>) -> DMatrix<f64> {
    let (n, r) = (geom.n(), geom.r());
    let s = adjoint_of(g);
    let mut m = DMatrix::zeros(n + r, n + r);
    m.view_mut((0, 0), (n, n)).copy_from(&geom.e);
    for al in 0..r {
        for mu in 0..n {
            m[(n + al, mu)] = (0..n).map(|b| geom.a_frame[[al, b]] * geom.e[(b, mu)]).sum();
        }
        for j in 0..r {
            m[(n + al, n + j)] = s[(n + al, n + j)];
        }
    }
    m
}

/// `g(y) = g·exp(y¹T₁)···exp(yʳT_r)` and its partials `∂_j g`.
fn chart(g: &GroupElement<'_>, y: &[f64]) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
    let rep = g.rep;
    let factors: Vec<DMatrix<f64>> = y.iter().enumerate().map(|(j, t)| (&rep.generators[j] * *t).exp()).collect();
    let mut value = g.matrix.clone();
    for f in &factors {
        value *= f;
    }
    let partials = (0..y.len())
        .map(|k| {
            let mut p = g.matrix.clone();
            for (j, f) in factors.iter().enumerate() {
                p *= f;
                if j == k {
                    p *= &rep.generators[k];
                }
            }
            p
        })
        .collect();
    (value, partials)
}

/// Residual of `de^α − ½[e∧e]^α + [A∧e]^α = F^α` in the total coframe.
///
/// `de^α` is assembled in coordinates `(x, y)` of the fiber chart through `g`:
/// the base part from the frame derivatives of `A`, the fiber part by central
/// differences of `(dg g⁻¹)^α`. Returns the largest component residual.
pub fn verify_deextra(geom: &GeometryAtPoint, g: &GroupElement<'_>) -> Result<f64, BundleError> {
    let rep = g.rep;
    check_geometry(geom, rep)?;
    let (n, r) = (geom.n(), geom.r());
    let big = n + r;
    let inv = total_coframe(geom, g)
        .try_inverse()
        .ok_or_else(|| BundleError::Dimension("total coframe is singular".into()))?;

    // coordinate components of de^α
    let mut de = Array3::<f64>::zeros((r, big, big));
    for al in 0..r {
        let da = DMatrix::from_fn(n, n, |e, f| {
            let mut s = geom.da_frame[[al, f, e]] - geom.da_frame[[al, e, f]];
            for b in 0..n {
                s += geom.a_frame[[al, b]] * geom.anholonomy[[b, e, f]];
            }
            s
        });
        let coord = geom.e.transpose() * da * &geom.e;
        for mu in 0..n {
            for nu in 0..n {
                de[[al, mu, nu]] = coord[(mu, nu)];
            }
        }
    }
    let rho = |y: &[f64], k: usize| {
        let (value, partials) = chart(g, y);
        let vinv = if rep.orthogonal { value.transpose() } else { value.try_inverse().expect("invertible") };
        rep.coordinates(&(&partials[k] * vinv))
    };
    for j in 0..r {
        for k in 0..r {
            let d = central(
                |t| {
                    let mut y = vec![0.0; r];
                    y[j] = t;
                    let v = rho(&y, k);
                    DMatrix::from_column_slice(r, 1, v.as_slice())
                },
                FIBER_FD_STEP,
            );
            for al in 0..r {
                de[[al, n + j, n + k]] += d[(al, 0)];
                de[[al, n + k, n + j]] -= d[(al, 0)];
            }
        }
    }

    let mut worst = 0.0f64;
    for al in 0..r {
        let coord = DMatrix::from_fn(big, big, |m, k| de[[al, m, k]]);
        let frame = inv.transpose() * coord * &inv;
        for e in 0..big {
            for f in 0..big {
                let mut lhs = frame[(e, f)];
                if e >= n && f >= n {
                    lhs -= rep.spec.cg(al, e - n, f - n);
                }
                for be in 0..r {
                    if e < n && f >= n {
                        lhs += rep.spec.cg(al, be, f - n) * geom.a_frame[[be, e]];
                    } else if e >= n && f < n {
                        lhs -= rep.spec.cg(al, be, e - n) * geom.a_frame[[be, f]];
                    }
                }
                let rhs = if e < n && f < n { geom.f[[al, e, f]] } else { 0.0 };
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    Ok(worst)
}

/// How `g` varies over the fiber in [`verify_gauge_covariance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberDependence {
    /// `g` is constant, so `dS = 0`.
    Constant,
    /// `g(y) = g·exp(y¹T₁)···exp(yʳT_r)`, differentiated along fiber curves.
    Chart,
}

/// `max ‖Ω_{EF} − S Φ_{EF} S⁻¹‖` over coordinate 2-planes of the frame, where
/// `φ = S⁻¹ωS + S⁻¹dS` and `Φ = dφ + φ∧φ`.
pub fn verify_gauge_covariance(
    geom: &GeometryAtPoint,
    g: &GroupElement<'_>,
    mode: FiberDependence,
) -> Result<f64, BundleError> {
    let rep = g.rep;
    check_geometry(geom, rep)?;
    let (n, r) = (geom.n(), geom.r());
    let big = n + r;
    let conn = kkcurv::assemble_omega(geom, &rep.spec)?;
    let curv = kkcurv::curvature_direct(&conn);
    let s = adjoint_of(g);
    let sinv = s.clone().try_inverse().ok_or_else(|| BundleError::Dimension("Ad_g is singular".into()))?;

    // E_D S
    let ds: Vec<DMatrix<f64>> = match mode {
        FiberDependence::Constant => vec![DMatrix::zeros(big, big); big],
        FiberDependence::Chart => {
            let inv = total_coframe(geom, g)
                .try_inverse()
                .ok_or_else(|| BundleError::Dimension("total coframe is singular".into()))?;
            let partial: Vec<DMatrix<f64>> =
                (0..r).map(|j| central(|t| adjoint_of(&g.along(j, t)), FIBER_FD_STEP)).collect();
            (0..big)
                .map(|d| {
                    let mut m = DMatrix::zeros(big, big);
                    for (j, p) in partial.iter().enumerate() {
                        m += p * inv[(n + j, d)];
                    }
                    m
                })
                .collect()
        }
    };
    let w: Vec<DMatrix<f64>> = (0..big).map(|d| DMatrix::from_fn(big, big, |a, c| conn.omega[[a, c, d]])).collect();
    // dw[e][f] = E_e ω_f
    let dw = |e: usize, f: usize| DMatrix::from_fn(big, big, |a, c| conn.domega[[a, c, f, e]]);
    let phi: Vec<DMatrix<f64>> = (0..big).map(|d| &sinv * &w[d] * &s + &sinv * &ds[d]).collect();
    // E_e φ_f without the second derivative of S
    let dphi = |e: usize, f: usize| {
        let se = &sinv * &ds[e];
        -&se * &sinv * &w[f] * &s + &sinv * dw(e, f) * &s + &sinv * &w[f] * &ds[e] - &se * &sinv * &ds[f]
    };

    let mut worst = 0.0f64;
    for e in 0..big {
        for f in e + 1..big {
            let mut big_phi = dphi(e, f) - dphi(f, e) + &phi[e] * &phi[f] - &phi[f] * &phi[e];
            for d in 0..big {
                let t = conn.torsion[[d, e, f]];
                if t != 0.0 {
                    // φ_D T^D_EF and the commutator [E_E, E_F] S = −T^D_EF E_D S
                    big_phi += (&phi[d] - &sinv * &ds[d]) * t;
                }
            }
            let omega = DMatrix::from_fn(big, big, |a, c| curv.omega2[[a, c, e, f]]);
            worst = worst.max((omega - &s * big_phi * &sinv).amax());
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Built-in representations

pub trait RepBuilder: Send + Sync {
    fn build(&self, spec: &LieAlgebraSpec) -> Result<MatrixRep, BundleError>;
}

/// `(T_i)_{jk} = −ε_{ijk}`.
fn so3_generators() -> Vec<DMatrix<f64>> {
    (0..3)
        .map(|i| {
            DMatrix::from_fn(3, 3, |j, k| {
                if i == j || j == k || i == k {
                    0.0
                } else if (j + 3 - i) % 3 == 1 {
                    -1.0
                } else {
                    1.0
                }
            })
        })
        .collect()
}

fn so2_generator() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
}

struct Su2AsSo3;
struct U1AsSo2;
struct Product;

fn require_r(spec: &LieAlgebraSpec, r: usize, name: &str) -> Result<(), BundleError> {
    if spec.r() != r {
        return Err(BundleError::RepMismatch(format!("`{name}` needs a {r}-dimensional fiber, found {}", spec.r())));
    }
    Ok(())
}

impl RepBuilder for Su2AsSo3 {
    fn build(&self, spec: &LieAlgebraSpec) -> Result<MatrixRep, BundleError> {
        require_r(spec, 3, "su2_as_so3")?;
        MatrixRep::new("su2_as_so3", so3_generators(), spec)
    }
}

impl RepBuilder for U1AsSo2 {
    fn build(&self, spec: &LieAlgebraSpec) -> Result<MatrixRep, BundleError> {
        require_r(spec, 1, "u1_as_so2")?;
        MatrixRep::new("u1_as_so2", vec![so2_generator()], spec)
    }
}

/// `u(1) ⊕ su(2)` as block-diagonal `5×5` matrices, `u(1)` first.
impl RepBuilder for Product {
    fn build(&self, spec: &LieAlgebraSpec) -> Result<MatrixRep, BundleError> {
        require_r(spec, 4, "product")?;
        let mut gens = Vec::with_capacity(4);
        let mut t = DMatrix::zeros(5, 5);
        t.view_mut((0, 0), (2, 2)).copy_from(&so2_generator());
        gens.push(t);
        for s in so3_generators() {
            let mut t = DMatrix::zeros(5, 5);
            t.view_mut((2, 2), (3, 3)).copy_from(&s);
            gens.push(t);
        }
        MatrixRep::new("product", gens, spec)
    }
}

pub fn rep_registry() -> &'static Registry<dyn RepBuilder> {
    static REG: OnceLock<Registry<dyn RepBuilder>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<dyn RepBuilder> = Registry::new();
        reg.register("su2_as_so3", Box::new(Su2AsSo3));
        reg.register("u1_as_so2", Box::new(U1AsSo2));
        reg.register("product", Box::new(Product));
        reg
    })
}

pub fn builtin_rep(name: &str, spec: &LieAlgebraSpec) -> Result<MatrixRep, BundleError> {
    rep_registry().get(name).ok_or_else(|| BundleError::UnknownRep(name.to_string()))?.build(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::builtin_algebra;

    fn eye(n: usize) -> DMatrix<f64> {
        DMatrix::identity(n, n)
    }

    #[test]
    fn so3_generators_close() {
        let t = so3_generators();
        assert_eq!(commutator(&t[0], &t[1]), t[2]);
        assert_eq!(commutator(&t[1], &t[2]), t[0]);
        assert_eq!(commutator(&t[2], &t[0]), t[1]);
        assert_eq!(t[0][(1, 2)], -1.0);
    }

    #[test]
    fn builtin_reps_build_for_matching_specs() {
        let su2 = builtin_algebra("su2", &eye(2), &eye(3)).unwrap();
        let ab = builtin_algebra("abelian", &eye(2), &eye(1)).unwrap();
        let prod = builtin_algebra("u1_su2", &eye(2), &eye(4)).unwrap();
        assert_eq!(builtin_rep("su2_as_so3", &su2).unwrap().d(), 3);
        assert_eq!(builtin_rep("u1_as_so2", &ab).unwrap().d(), 2);
        assert_eq!(builtin_rep("product", &prod).unwrap().d(), 5);
        assert!(matches!(builtin_rep("u1_as_so2", &su2), Err(BundleError::RepMismatch(_))));
        assert!(matches!(builtin_rep("sl2", &su2), Err(BundleError::UnknownRep(_))));
        // three commuting so(3) generators are not closed over abelian constants
        let ab3 = builtin_algebra("abelian", &eye(2), &eye(3)).unwrap();
        assert!(matches!(builtin_rep("su2_as_so3", &ab3), Err(BundleError::NotClosed { .. })));
    }

    #[test]
    fn dependent_generators_are_rejected() {
        let ab = builtin_algebra("abelian", &eye(2), &eye(2)).unwrap();
        let t = so2_generator();
        let err = MatrixRep::new("dup", vec![t.clone(), t * 2.0], &ab).unwrap_err();
        assert!(matches!(err, BundleError::Dependent(_)));
    }

    #[test]
    fn off_manifold_matrices_are_rejected() {
        let su2 = builtin_algebra("su2", &eye(2), &eye(3)).unwrap();
        let rep = builtin_rep("su2_as_so3", &su2).unwrap();
        assert!(rep.element(eye(3)).is_ok());
        assert!(matches!(rep.element(eye(3) * 1.01), Err(BundleError::OffManifold { .. })));
        assert!(matches!(rep.element(eye(2)), Err(BundleError::Dimension(_))));
        let p = rep.project(eye(3) * 1.01 + DMatrix::from_element(3, 3, 1e-3));
        assert!(rep.manifold_violation(&p) < 1e-14);
    }
}
