//! The split Lie algebra `s ⊕ g` with its block metric `h = b ⊕ k`.
//!
//! Basis vectors `0..n` span the central block `s`, vectors `n..n+r` span `g`.
//! Structure constants are stored densely as `c[A][B][C] = c^A_BC`, so that
//! `[t_B, t_C] = t_A c^A_BC`. Indices are zero-based in code and on the wire;
//! human-facing messages print them one-based.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::Registry;

/// Default tolerance for validating float-entered algebraic data.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Sign relating the convention `Λ = (1/8)(K, h*)` to the one computed by
/// [`cosmological_constant`], `Λ = -(1/8)(K, h*)`. The library reports the
/// latter; the former is available through
/// [`cosmological_constant_positive_convention`].
pub const POSITIVE_LAMBDA_SIGN: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension { what: String, expected: usize, found: usize },
    #[error("degenerate metric: |det| = {det:e} is not above tolerance {tol:e}")]
    DegenerateMetric { det: f64, tol: f64 },
    #[error("invalid block: {0}")]
    InvalidBlock(String),
    #[error("unknown built-in algebra `{0}`")]
    UnknownBuiltin(String),
    #[error("algebra fails validation: {0}")]
    Invalid(String),
}

/// Structure constants and block metric of `s ⊕ g`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebraSpec {
    n: usize,
    r: usize,
    c: Vec<f64>,
    h: DMatrix<f64>,
    names: Option<Vec<String>>,
}

impl LieAlgebraSpec {
    /// Assemble from dense constants (length `N³`, layout `[A][B][C]`) and the
    /// full `N×N` metric.
    pub fn new(n: usize, r: usize, c: Vec<f64>, h: DMatrix<f64>) -> Result<Self, AlgebraError> {
        let big = n + r;
        if c.len() != big * big * big {
            return Err(AlgebraError::Dimension {
                what: "structure constants".into(),
                expected: big * big * big,
                found: c.len(),
            });
        }
        if h.nrows() != big || h.ncols() != big {
            return Err(AlgebraError::Dimension {
                what: "metric h".into(),
                expected: big,
                found: if h.nrows() != big { h.nrows() } else { h.ncols() },
            });
        }
        Ok(Self { n, r, c, h, names: None })
    }

    /// Assemble from the two metric blocks; `h` is `diag(b, k)`.
    pub fn from_blocks(
        n: usize,
        r: usize,
        c: Vec<f64>,
        b: &DMatrix<f64>,
        k: &DMatrix<f64>,
    ) -> Result<Self, AlgebraError> {
        check_square("b", b, n)?;
        check_square("k", k, r)?;
        let mut h = DMatrix::zeros(n + r, n + r);
        h.view_mut((0, 0), (n, n)).copy_from(b);
        h.view_mut((n, n), (r, r)).copy_from(k);
        Self::new(n, r, c, h)
    }

    /// Assemble from sparse `(A, B, C, value)` triplets.
    pub fn from_triplets(
        n: usize,
        r: usize,
        triplets: &[(usize, usize, usize, f64)],
        b: &DMatrix<f64>,
        k: &DMatrix<f64>,
    ) -> Result<Self, AlgebraError> {
        let big = n + r;
        let mut c = vec![0.0; big * big * big];
        for &(a, bb, cc, v) in triplets {
            let max = a.max(bb).max(cc);
            if max >= big {
                return Err(AlgebraError::Dimension {
                    what: format!("structure constant index ({},{},{})", a + 1, bb + 1, cc + 1),
                    expected: big,
                    found: max + 1,
                });
            }
            c[(a * big + bb) * big + cc] += v;
        }
        Self::from_blocks(n, r, c, b, k)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        self.names = Some(names);
        self
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// `dim s`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `dim g`.
    pub fn r(&self) -> usize {
        self.r
    }

    /// `dim ĝ = n + r`.
    pub fn dim(&self) -> usize {
        self.n + self.r
    }

    /// `c^A_BC`.
    #[inline]
    pub fn c(&self, a: usize, b: usize, c: usize) -> f64 {
        let big = self.dim();
        self.c[(a * big + b) * big + c]
    }

    /// `c^α_βγ` with fiber-local indices (`0..r`).
    #[inline]
    pub fn cg(&self, a: usize, b: usize, c: usize) -> f64 {
        self.c(self.n + a, self.n + b, self.n + c)
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn b(&self) -> DMatrix<f64> {
        self.h.view((0, 0), (self.n, self.n)).into_owned()
    }

    pub fn k(&self) -> DMatrix<f64> {
        self.h.view((self.n, self.n), (self.r, self.r)).into_owned()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, usize, f64)> {
        let big = self.dim();
        let mut out = Vec::new();
        for a in 0..big {
            for b in 0..big {
                for c in 0..big {
                    let v = self.c(a, b, c);
                    if v != 0.0 {
                        out.push((a, b, c, v));
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> AlgebraJson {
        AlgebraJson {
            n: self.n,
            r: self.r,
            c: self.triplets(),
            h_b: rows(&self.b()),
            h_k: rows(&self.k()),
            names: self.names.clone(),
        }
    }
}

fn check_square(what: &str, m: &DMatrix<f64>, dim: usize) -> Result<(), AlgebraError> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(AlgebraError::Dimension {
            what: format!("metric block {what}"),
            expected: dim,
            found: if m.nrows() != dim { m.nrows() } else { m.ncols() },
        });
    }
    Ok(())
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn matrix_from_rows(what: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, AlgebraError> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != nc) {
        return Err(AlgebraError::Dimension { what: what.to_string(), expected: nc, found: bad.len() });
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

/// Wire format: zero-based sparse triplets plus the two metric blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub n: usize,
    pub r: usize,
    #[serde(default)]
    pub c: Vec<(usize, usize, usize, f64)>,
    pub h_b: Vec<Vec<f64>>,
    pub h_k: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

impl AlgebraJson {
    pub fn into_spec(&self) -> Result<LieAlgebraSpec, AlgebraError> {
        let b = matrix_from_rows("h_b", &self.h_b)?;
        let k = matrix_from_rows("h_k", &self.h_k)?;
        let spec = LieAlgebraSpec::from_triplets(self.n, self.r, &self.c, &b, &k)?;
        Ok(match &self.names {
            Some(names) => spec.with_names(names.clone()),
            None => spec,
        })
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    /// `c^A_BC = -c^A_CB`.
    Antisymmetry,
    Jacobi,
    /// Nonzero constants only inside the `g` block (`s` is central).
    CentralBlock,
    /// `c^D_AB h_DC + c^D_AC h_BD = 0`.
    AdInvariance,
    /// `h_aβ = 0`.
    BlockOrthogonality,
    NondegenerateMetric,
}

impl Invariant {
    pub const ALL: [Invariant; 6] = [
        Invariant::Antisymmetry,
        Invariant::Jacobi,
        Invariant::CentralBlock,
        Invariant::AdInvariance,
        Invariant::BlockOrthogonality,
        Invariant::NondegenerateMetric,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub invariant: Invariant,
    pub passed: bool,
    pub max_violation: f64,
    /// One-based indices of the worst offender.
    pub offending: Option<Vec<usize>>,
}

impl fmt::Display for InvariantCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.invariant, if self.passed { "pass" } else { "FAIL" })?;
        if let Some(idx) = &self.offending {
            let s: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
            write!(f, " at ({}) violation {:e}", s.join(","), self.max_violation)?;
        }
        Ok(())
    }
}

/// Counts of positive, negative and zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Signature {
    pub fn of(m: &DMatrix<f64>, tol: f64) -> Self {
        if m.nrows() == 0 {
            return Signature { positive: 0, negative: 0, zero: 0 };
        }
        let eig = SymmetricEigen::new(m.clone());
        let mut s = Signature { positive: 0, negative: 0, zero: 0 };
        for &l in eig.eigenvalues.iter() {
            if l > tol {
                s.positive += 1;
            } else if l < -tol {
                s.negative += 1;
            } else {
                s.zero += 1;
            }
        }
        s
    }

    pub fn is_definite(&self) -> bool {
        self.zero == 0 && (self.positive == 0 || self.negative == 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tol: f64,
    pub checks: Vec<InvariantCheck>,
    /// `c^α_γα = 0`; reported, never a failure.
    pub unimodular: bool,
    pub unimodular_violation: f64,
    pub b_signature: Signature,
    pub k_signature: Signature,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, inv: Invariant) -> &InvariantCheck {
        self.checks.iter().find(|c| c.invariant == inv).expect("every invariant is reported")
    }

    pub fn failures(&self) -> impl Iterator<Item = &InvariantCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

// Tracks the largest |value| and the first index tuple attaining it.
struct Worst {
    max: f64,
    at: Option<Vec<usize>>,
}

impl Worst {
    fn new() -> Self {
        Self { max: 0.0, at: None }
    }

    fn see(&mut self, value: f64, idx: &[usize]) {
        let v = value.abs();
        if v > self.max || (v.is_nan() && self.at.is_none()) {
            self.max = v;
            self.at = Some(idx.iter().map(|i| i + 1).collect());
        }
    }

    fn finish(self, invariant: Invariant, tol: f64) -> InvariantCheck {
        let passed = self.max <= tol;
        InvariantCheck { invariant, passed, max_violation: self.max, offending: if passed { None } else { self.at } }
    }
}

/// Check every structural hypothesis on `spec`.
///
/// A metric with `|det h| <= tol` is rejected outright.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate_spec(spec: &LieAlgebraSpec, tol: f64) -> Result<ValidationReport, AlgebraError> {
    let big = spec.dim();
    let det = spec.h.determinant();
    if !(det.abs() > tol) {
        return Err(AlgebraError::DegenerateMetric { det, tol });
    }
    let h = &spec.h;

    let mut anti = Worst::new();
    let mut block = Worst::new();
    for a in 0..big {
        for b in 0..big {
            for c in 0..big {
                anti.see(spec.c(a, b, c) + spec.c(a, c, b), &[a, b, c]);
                let in_g = a >= spec.n && b >= spec.n && c >= spec.n;
                if !in_g {
                    block.see(spec.c(a, b, c), &[a, b, c]);
                }
            }
        }
    }

    let mut jacobi = Worst::new();
    for a in 0..big {
        for b in 0..big {
            for c in 0..big {
                for e in 0..big {
                    let mut s = 0.0;
                    for d in 0..big {
                        s += spec.c(e, d, a) * spec.c(d, b, c)
                            + spec.c(e, d, b) * spec.c(d, c, a)
                            + spec.c(e, d, c) * spec.c(d, a, b);
                    }
                    jacobi.see(s, &[a, b, c, e]);
                }
            }
        }
    }

    let mut adinv = Worst::new();
    for a in 0..big {
        for b in 0..big {
            for c in 0..big {
                let mut s = 0.0;
                for d in 0..big {
                    s += spec.c(d, a, b) * h[(d, c)] + spec.c(d, a, c) * h[(b, d)];
                }
                adinv.see(s, &[a, b, c]);
            }
        }
    }

    let mut ortho = Worst::new();
    for a in 0..spec.n {
        for beta in spec.n..big {
            ortho.see(h[(a, beta)], &[a, beta]);
            ortho.see(h[(beta, a)], &[beta, a]);
        }
    }

    let mut uni = 0.0f64;
    for g in 0..big {
        let trace: f64 = (0..big).map(|a| spec.c(a, g, a)).sum();
        uni = uni.max(trace.abs());
    }

    let checks = vec![
        anti.finish(Invariant::Antisymmetry, tol),
        jacobi.finish(Invariant::Jacobi, tol),
        block.finish(Invariant::CentralBlock, tol),
        adinv.finish(Invariant::AdInvariance, tol),
        ortho.finish(Invariant::BlockOrthogonality, tol),
        InvariantCheck { invariant: Invariant::NondegenerateMetric, passed: true, max_violation: 0.0, offending: None },
    ];
    Ok(ValidationReport {
        tol,
        checks,
        unimodular: uni <= tol,
        unimodular_violation: uni,
        b_signature: Signature::of(&spec.b(), tol),
        k_signature: Signature::of(&spec.k(), tol),
    })
}

// ---------------------------------------------------------------------------
// Algebraic operations

/// `[ξ, η]^A = c^A_BC ξ^B η^C`.
pub fn bracket(spec: &LieAlgebraSpec, xi: &DVector<f64>, eta: &DVector<f64>) -> Result<DVector<f64>, AlgebraError> {
    let big = spec.dim();
    expect_len("ξ", xi.len(), big)?;
    expect_len("η", eta.len(), big)?;
    Ok(DVector::from_fn(big, |a, _| {
        let mut s = 0.0;
        for b in 0..big {
            if xi[b] == 0.0 {
                continue;
            }
            for c in 0..big {
                s += spec.c(a, b, c) * xi[b] * eta[c];
            }
        }
        s
    }))
}

fn expect_len(what: &str, found: usize, expected: usize) -> Result<(), AlgebraError> {
    if found != expected {
        return Err(AlgebraError::Dimension { what: what.to_string(), expected, found });
    }
    Ok(())
}

/// Killing form of `g`: `K_γε = c^α_βγ c^β_αε`, an `r×r` matrix.
pub fn killing_form(spec: &LieAlgebraSpec) -> DMatrix<f64> {
    let r = spec.r();
    DMatrix::from_fn(r, r, |g, e| {
        let mut s = 0.0;
        for a in 0..r {
            for b in 0..r {
                s += spec.cg(a, b, g) * spec.cg(b, a, e);
            }
        }
        s
    })
}

/// `Λ = -(1/8) c^α_βγ c^β_αε k^γε = -(1/8)(K, k⁻¹)`.
pub fn cosmological_constant(spec: &LieAlgebraSpec) -> Result<f64, AlgebraError> {
    if spec.r() == 0 {
        return Ok(0.0);
    }
    let k = spec.k();
    let det = k.determinant();
    let kinv = k.try_inverse().ok_or(AlgebraError::DegenerateMetric { det, tol: 0.0 })?;
    let kill = killing_form(spec);
    Ok(-0.125 * kill.component_mul(&kinv.transpose()).sum())
}

/// `POSITIVE_LAMBDA_SIGN * Λ`, i.e. `(1/8)(K, h*)`.
pub fn cosmological_constant_positive_convention(spec: &LieAlgebraSpec) -> Result<f64, AlgebraError> {
    Ok(POSITIVE_LAMBDA_SIGN * cosmological_constant(spec)?)
}

/// `(ad_ξ)^A_C = c^A_BC ξ^B`.
pub fn adjoint_matrix(spec: &LieAlgebraSpec, xi: &DVector<f64>) -> Result<DMatrix<f64>, AlgebraError> {
    let big = spec.dim();
    expect_len("ξ", xi.len(), big)?;
    Ok(DMatrix::from_fn(big, big, |a, c| (0..big).map(|b| spec.c(a, b, c) * xi[b]).sum()))
}

// ---------------------------------------------------------------------------
// Built-in algebras

/// Produces the `g`-block structure constants of a named algebra.
pub trait AlgebraBuilder: Send + Sync {
    /// Fiber dimension this builder supports, or `None` when any `r` works.
    fn fiber_dim(&self) -> Option<usize>;

    /// Nonzero `c^α_βγ` as fiber-local `(α, β, γ, value)` for a fiber of dimension `r`.
    fn constants(&self, r: usize) -> Vec<(usize, usize, usize, f64)>;
}

struct Abelian;
struct Su2;
struct U1Su2;

fn epsilon_constants(offset: usize) -> Vec<(usize, usize, usize, f64)> {
    let mut out = Vec::new();
    for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        out.push((a + offset, b + offset, c + offset, 1.0));
        out.push((a + offset, c + offset, b + offset, -1.0));
    }
    out
}

impl AlgebraBuilder for Abelian {
    fn fiber_dim(&self) -> Option<usize> {
        None
    }
    fn constants(&self, _r: usize) -> Vec<(usize, usize, usize, f64)> {
        Vec::new()
    }
}

impl AlgebraBuilder for Su2 {
    fn fiber_dim(&self) -> Option<usize> {
        Some(3)
    }
    fn constants(&self, _r: usize) -> Vec<(usize, usize, usize, f64)> {
        epsilon_constants(0)
    }
}

impl AlgebraBuilder for U1Su2 {
    fn fiber_dim(&self) -> Option<usize> {
        Some(4)
    }
    fn constants(&self, _r: usize) -> Vec<(usize, usize, usize, f64)> {
        // u(1) generator first, su(2) after it
        epsilon_constants(1)
    }
}

/// Registry holding `abelian`, `su2` and `u1_su2`.
pub fn algebra_registry() -> &'static Registry<dyn AlgebraBuilder> {
    static REG: OnceLock<Registry<dyn AlgebraBuilder>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<dyn AlgebraBuilder> = Registry::new();
        reg.register("abelian", Box::new(Abelian));
        reg.register("su2", Box::new(Su2));
        reg.register("u1_su2", Box::new(U1Su2));
        reg
    })
}

/// Build a registered algebra with `n = dim b` and `r = dim k`; the result is
/// validated at tolerance `1e-12`.
pub fn builtin_algebra(name: &str, b: &DMatrix<f64>, k: &DMatrix<f64>) -> Result<LieAlgebraSpec, AlgebraError> {
    let builder = algebra_registry().get(name).ok_or_else(|| AlgebraError::UnknownBuiltin(name.to_string()))?;
    for (what, m) in [("b", b), ("k", k)] {
        if !m.is_square() {
            return Err(AlgebraError::InvalidBlock(format!("{what} is not square")));
        }
        if (m - m.transpose()).amax() > 1e-12 {
            return Err(AlgebraError::InvalidBlock(format!("{what} is not symmetric")));
        }
    }
    let n = b.nrows();
    let r = k.nrows();
    if let Some(expected) = builder.fiber_dim() {
        if r != expected {
            return Err(AlgebraError::Dimension { what: format!("k block of `{name}`"), expected, found: r });
        }
    }
    let triplets: Vec<_> = builder.constants(r).into_iter().map(|(a, bb, cc, v)| (a + n, bb + n, cc + n, v)).collect();
    let spec = LieAlgebraSpec::from_triplets(n, r, &triplets, b, k)?;
    let report = validate_spec(&spec, 1e-12)?;
    if !report.all_pass() {
        let msgs: Vec<String> = report.failures().map(|c| c.to_string()).collect();
        return Err(AlgebraError::Invalid(msgs.join("; ")));
    }
    Ok(spec)
}
