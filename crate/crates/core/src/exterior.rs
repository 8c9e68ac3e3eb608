//! Alternating forms in an `N`-dimensional coframe.
//!
//! A basis `p`-form `θ^{i1}∧…∧θ^{ip}` with `i1 < … < ip` is keyed by the
//! bitmask with bits `i1..ip` set, so `N` is limited to [`MAX_DIM`]. Each key
//! carries an `m`-vector of coefficients; `m = 1` for scalar forms.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::liealg::LieAlgebraSpec;

pub const MAX_DIM: usize = 32;

type Blade = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExteriorError {
    #[error("frame dimension mismatch: {0} vs {1}")]
    FrameMismatch(usize, usize),
    #[error("frame dimension {0} is outside the supported range {1}..={2}")]
    Dimension(usize, usize, usize),
    #[error("interior product needs degree at least 1")]
    Degree,
    #[error("incompatible value dimensions {0} and {1}")]
    ValueDim(usize, usize),
    #[error("index {index} outside frame of dimension {dim}")]
    Index { index: usize, dim: usize },
    #[error("so(h)-valued input is not antisymmetric at ({0},{1}): residual {2:e}")]
    NotAntisymmetric(usize, usize, f64),
}

/// Components of a vector in the frame dual to the working coframe.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameVector(pub Vec<f64>);

impl FrameVector {
    /// `∂/∂θ^A`.
    pub fn basis(dim: usize, a: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[a] = 1.0;
        FrameVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingForm {
    dim: usize,
    degree: usize,
    value_dim: usize,
    coeffs: BTreeMap<Blade, Vec<f64>>,
}

fn blade_of(indices: &[usize]) -> Blade {
    indices.iter().fold(0, |acc, &i| acc | (1 << i))
}

fn blade_indices(b: Blade) -> Vec<usize> {
    (0..MAX_DIM).filter(|&i| b & (1 << i) != 0).collect()
}

/// Sign of `θ^I ∧ θ^J` relative to the sorted blade `I ∪ J`; zero if they overlap.
fn merge_sign(i: Blade, j: Blade) -> f64 {
    if i & j != 0 {
        return 0.0;
    }
    let mut swaps = 0u32;
    let mut rest = j;
    while rest != 0 {
        let low = rest.trailing_zeros();
        swaps += (i >> low).count_ones();
        rest &= rest - 1;
    }
    if swaps.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Sign of the permutation sorting `indices`, or zero if any repeats.
fn permutation_sign(indices: &[usize]) -> f64 {
    let mut sign = 1.0;
    for i in 0..indices.len() {
        for j in i + 1..indices.len() {
            if indices[i] == indices[j] {
                return 0.0;
            }
            if indices[i] > indices[j] {
                sign = -sign;
            }
        }
    }
    sign
}

impl AlternatingForm {
    pub fn zero(dim: usize, degree: usize, value_dim: usize) -> Self {
        assert!(dim <= MAX_DIM, "frame dimension {dim} exceeds {MAX_DIM}");
        Self { dim, degree, value_dim, coeffs: BTreeMap::new() }
    }

    /// The scalar 0-form `value`.
    pub fn scalar(dim: usize, value: f64) -> Self {
        let mut f = Self::zero(dim, 0, 1);
        f.add_term(&[], &[value]);
        f
    }

    /// `θ^a` as a scalar 1-form.
    pub fn basis(dim: usize, a: usize) -> Self {
        let mut f = Self::zero(dim, 1, 1);
        f.add_term(&[a], &[1.0]);
        f
    }

    /// `θ^{i1}∧…∧θ^{ip}` as a scalar form, in the given (not necessarily sorted) order.
    pub fn monomial(dim: usize, indices: &[usize]) -> Self {
        let mut f = Self::zero(dim, indices.len(), 1);
        f.add_term(indices, &[1.0]);
        f
    }

    /// `θ^(N) = θ^1∧…∧θ^N`.
    pub fn volume(dim: usize) -> Self {
        let idx: Vec<usize> = (0..dim).collect();
        Self::monomial(dim, &idx)
    }

    /// Stack scalar forms of equal degree into a vector-valued form.
    pub fn from_components(components: &[AlternatingForm]) -> Result<Self, ExteriorError> {
        let first = components.first().expect("at least one component");
        let mut out = Self::zero(first.dim, first.degree, components.len());
        for (k, c) in components.iter().enumerate() {
            if c.dim != first.dim {
                return Err(ExteriorError::FrameMismatch(first.dim, c.dim));
            }
            if c.value_dim != 1 {
                return Err(ExteriorError::ValueDim(1, c.value_dim));
            }
            assert_eq!(c.degree, first.degree, "components must share a degree");
            for (&b, v) in &c.coeffs {
                let mut val = vec![0.0; components.len()];
                val[k] = v[0];
                out.accumulate(b, &val);
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn value_dim(&self) -> usize {
        self.value_dim
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    /// Add `value · θ^{indices}`; permuted indices pick up the permutation sign.
    pub fn add_term(&mut self, indices: &[usize], value: &[f64]) {
        assert_eq!(indices.len(), self.degree, "term degree");
        assert_eq!(value.len(), self.value_dim, "term value dimension");
        assert!(indices.iter().all(|&i| i < self.dim), "term index out of range");
        let sign = permutation_sign(indices);
        if sign == 0.0 {
            return;
        }
        let v: Vec<f64> = value.iter().map(|x| sign * x).collect();
        self.accumulate(blade_of(indices), &v);
    }

    fn accumulate(&mut self, b: Blade, v: &[f64]) {
        let entry = self.coeffs.entry(b).or_insert_with(|| vec![0.0; v.len()]);
        for (e, x) in entry.iter_mut().zip(v) {
            *e += x;
        }
        if entry.iter().all(|x| *x == 0.0) {
            self.coeffs.remove(&b);
        }
    }

    /// Coefficient of `θ^{indices}` in any index order.
    pub fn get(&self, indices: &[usize]) -> Vec<f64> {
        let sign = permutation_sign(indices);
        match self.coeffs.get(&blade_of(indices)) {
            Some(v) if sign != 0.0 && indices.len() == self.degree => v.iter().map(|x| sign * x).collect(),
            _ => vec![0.0; self.value_dim],
        }
    }

    /// Scalar coefficient of component `k`.
    pub fn coeff(&self, indices: &[usize], k: usize) -> f64 {
        self.get(indices)[k]
    }

    /// Sorted multi-indices with their coefficients.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, &[f64])> {
        self.coeffs.iter().map(|(&b, v)| (blade_indices(b), v.as_slice()))
    }

    /// Scalar form holding component `k`.
    pub fn component(&self, k: usize) -> AlternatingForm {
        let mut out = Self::zero(self.dim, self.degree, 1);
        for (&b, v) in &self.coeffs {
            out.accumulate(b, &[v[k]]);
        }
        out
    }

    pub fn scale(&self, s: f64) -> AlternatingForm {
        let mut out = Self::zero(self.dim, self.degree, self.value_dim);
        for (&b, v) in &self.coeffs {
            let scaled: Vec<f64> = v.iter().map(|x| s * x).collect();
            out.accumulate(b, &scaled);
        }
        out
    }

    pub fn add(&self, other: &AlternatingForm) -> Result<AlternatingForm, ExteriorError> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (&b, v) in &other.coeffs {
            out.accumulate(b, v);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &AlternatingForm) -> Result<AlternatingForm, ExteriorError> {
        self.add(&other.scale(-1.0))
    }

    fn check_same_shape(&self, other: &AlternatingForm) -> Result<(), ExteriorError> {
        if self.dim != other.dim {
            return Err(ExteriorError::FrameMismatch(self.dim, other.dim));
        }
        if self.value_dim != other.value_dim {
            return Err(ExteriorError::ValueDim(self.value_dim, other.value_dim));
        }
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        Ok(())
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl fmt::Display for AlternatingForm {
    /// One line per multi-index, indices one-based: `A1 A2 … Ap : v1 … vm`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, v) in self.terms() {
            let lhs: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
            let rhs: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            writeln!(f, "{} : {}", lhs.join(" "), rhs.join(" "))?;
        }
        Ok(())
    }
}

/// `α ∧ β`. Scalar forms may multiply vector-valued ones from either side.
pub fn wedge(alpha: &AlternatingForm, beta: &AlternatingForm) -> Result<AlternatingForm, ExteriorError> {
    if alpha.dim != beta.dim {
        return Err(ExteriorError::FrameMismatch(alpha.dim, beta.dim));
    }
    let m = match (alpha.value_dim, beta.value_dim) {
        (a, b) if a == b && a == 1 => 1,
        (1, b) => b,
        (a, 1) => a,
        (a, b) => return Err(ExteriorError::ValueDim(a, b)),
    };
    let mut out = AlternatingForm::zero(alpha.dim, alpha.degree + beta.degree, m);
    if out.degree > out.dim {
        return Ok(out);
    }
    let mut buf = vec![0.0; m];
    for (&i, u) in &alpha.coeffs {
        for (&j, v) in &beta.coeffs {
            let s = merge_sign(i, j);
            if s == 0.0 {
                continue;
            }
            for (k, slot) in buf.iter_mut().enumerate() {
                let x = if u.len() == 1 { u[0] } else { u[k] };
                let y = if v.len() == 1 { v[0] } else { v[k] };
                *slot = s * x * y;
            }
            out.accumulate(i | j, &buf);
        }
    }
    Ok(out)
}

/// `v ⌟ α`, contracting into the first slot.
pub fn interior(v: &FrameVector, alpha: &AlternatingForm) -> Result<AlternatingForm, ExteriorError> {
    if v.dim() != alpha.dim {
        return Err(ExteriorError::FrameMismatch(v.dim(), alpha.dim));
    }
    if alpha.degree == 0 {
        return Err(ExteriorError::Degree);
    }
    let mut out = AlternatingForm::zero(alpha.dim, alpha.degree - 1, alpha.value_dim);
    for (&b, coeff) in &alpha.coeffs {
        for a in blade_indices(b) {
            let va = v.0[a];
            if va == 0.0 {
                continue;
            }
            let below = (b & ((1 << a) - 1)).count_ones();
            let s = if below % 2 == 0 { va } else { -va };
            let scaled: Vec<f64> = coeff.iter().map(|x| s * x).collect();
            out.accumulate(b & !(1 << a), &scaled);
        }
    }
    Ok(out)
}

/// `(1/(N−k)!) ε_{F A_{k+1}…A_N} θ^{A_{k+1}}∧…∧θ^{A_N}` for the fixed indices `F`.
///
/// Equals `∂_{F_k} ⌟ ⋯ ⌟ ∂_{F_1} ⌟ θ^(N)`.
pub fn epsilon_form(dim: usize, fixed: &[usize]) -> Result<AlternatingForm, ExteriorError> {
    if dim > MAX_DIM {
        return Err(ExteriorError::Dimension(dim, 0, MAX_DIM));
    }
    if fixed.len() > dim {
        return Err(ExteriorError::Index { index: fixed.len(), dim });
    }
    if let Some(&bad) = fixed.iter().find(|&&i| i >= dim) {
        return Err(ExteriorError::Index { index: bad, dim });
    }
    let mut out = AlternatingForm::zero(dim, dim - fixed.len(), 1);
    let sign = permutation_sign(fixed);
    if sign == 0.0 {
        return Ok(out);
    }
    let fixed_bits = blade_of(fixed);
    let all: Blade = if dim == MAX_DIM { Blade::MAX } else { (1 << dim) - 1 };
    let rest = all & !fixed_bits;
    // ε_{F J} with J sorted: sort F, then merge the two sorted runs
    let s = sign * merge_sign(fixed_bits, rest);
    out.accumulate(rest, &[s]);
    Ok(out)
}

/// `[θ∧θ]^A = c^A_BC θ^B∧θ^C` for a ĝ-valued 1-form.
pub fn lie_wedge_1(spec: &LieAlgebraSpec, theta: &AlternatingForm) -> Result<AlternatingForm, ExteriorError> {
    let big = spec.dim();
    if theta.value_dim != big {
        return Err(ExteriorError::ValueDim(theta.value_dim, big));
    }
    let comps: Vec<AlternatingForm> = (0..big).map(|b| theta.component(b)).collect();
    let mut products = BTreeMap::new();
    let mut out = Vec::with_capacity(big);
    for a in 0..big {
        let mut acc = AlternatingForm::zero(theta.dim, 2 * theta.degree, 1);
        for b in 0..big {
            for c in 0..big {
                let k = spec.c(a, b, c);
                if k == 0.0 {
                    continue;
                }
                let prod = match products.get(&(b, c)) {
                    Some(p) => p,
                    None => {
                        let p = wedge(&comps[b], &comps[c])?;
                        products.entry((b, c)).or_insert(p)
                    }
                };
                acc = acc.add(&prod.scale(k))?;
            }
        }
        out.push(acc);
    }
    AlternatingForm::from_components(&out)
}

/// `[φ∧φ]₂^{AB} = 2 h_{A'B'} φ^{AA'}∧φ^{B'B}` for a form whose component
/// `A·N + B` holds `φ^{AB}`.
pub fn lie_wedge_2(spec: &LieAlgebraSpec, phi: &AlternatingForm, tol: f64) -> Result<AlternatingForm, ExteriorError> {
    let big = spec.dim();
    if phi.value_dim != big * big {
        return Err(ExteriorError::ValueDim(phi.value_dim, big * big));
    }
    let comps: Vec<AlternatingForm> = (0..big * big).map(|k| phi.component(k)).collect();
    for a in 0..big {
        for b in a..big {
            let r = comps[a * big + b].add(&comps[b * big + a])?.max_abs();
            if r > tol {
                return Err(ExteriorError::NotAntisymmetric(a + 1, b + 1, r));
            }
        }
    }
    let h = spec.h();
    let mut out = Vec::with_capacity(big * big);
    for a in 0..big {
        for b in 0..big {
            let mut acc = AlternatingForm::zero(phi.dim, 2 * phi.degree, 1);
            for a2 in 0..big {
                for b2 in 0..big {
                    let w = h[(a2, b2)];
                    if w == 0.0 {
                        continue;
                    }
                    let l = &comps[a * big + a2];
                    let r = &comps[b2 * big + b];
                    if l.is_zero() || r.is_zero() {
                        continue;
                    }
                    acc = acc.add(&wedge(l, r)?.scale(2.0 * w))?;
                }
            }
            out.push(acc);
        }
    }
    AlternatingForm::from_components(&out)
}

/// The degree-one derivation fixed by `d(θ^B) = beta[B]`, applied to a form
/// with constant coefficients.
pub fn derivation(alpha: &AlternatingForm, beta: &[AlternatingForm]) -> Result<AlternatingForm, ExteriorError> {
    if beta.len() != alpha.dim {
        return Err(ExteriorError::FrameMismatch(alpha.dim, beta.len()));
    }
    let mut out = AlternatingForm::zero(alpha.dim, alpha.degree + 1, alpha.value_dim);
    if out.degree > out.dim {
        return Ok(out);
    }
    for (&b, coeff) in &alpha.coeffs {
        let idx = blade_indices(b);
        for (k, &i) in idx.iter().enumerate() {
            // d passes k one-forms before reaching θ^{ik}
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let left = AlternatingForm::monomial(alpha.dim, &idx[..k]);
            let right = AlternatingForm::monomial(alpha.dim, &idx[k + 1..]);
            let term = wedge(&wedge(&left, &beta[i])?, &right)?;
            for (&tb, tv) in &term.coeffs {
                let v: Vec<f64> = coeff.iter().map(|c| sign * c * tv[0]).collect();
                out.accumulate(tb, &v);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Identity suite

pub const MIN_IDENTITY_DIM: usize = 3;
pub const MAX_IDENTITY_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    /// `θ^A ∧ θ^(N−1)_{A'} = δ^A_{A'} θ^(N)`.
    WedgeN1,
    /// `θ^A ∧ θ^(N−2)_{A'B'} = δ^A_{B'} θ^(N−1)_{A'} − δ^A_{A'} θ^(N−1)_{B'}`.
    WedgeN2,
    /// `θ^A ∧ θ^(N−3)_{A'B'C'} = δ^A_{C'} θ^(N−2)_{A'B'} + δ^A_{B'} θ^(N−2)_{C'A'} + δ^A_{A'} θ^(N−2)_{B'C'}`.
    WedgeN3,
    /// `dθ^(N−1)_A = dθ^B ∧ θ^(N−2)_{AB}`.
    DerivN1,
    /// `dθ^(N−2)_{AB} = dθ^C ∧ θ^(N−3)_{ABC}`.
    DerivN2,
}

impl Identity {
    pub const ALL: [Identity; 5] =
        [Identity::WedgeN1, Identity::WedgeN2, Identity::WedgeN3, Identity::DerivN1, Identity::DerivN2];

    fn arity(self) -> usize {
        match self {
            Identity::WedgeN1 => 2,
            Identity::WedgeN2 => 3,
            Identity::WedgeN3 => 4,
            Identity::DerivN1 => 1,
            Identity::DerivN2 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    pub identity: Identity,
    pub cases: usize,
    pub max_residual: f64,
    /// One-based indices of the worst case, if any residual is nonzero.
    pub worst: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub dim: usize,
    pub exhaustive: bool,
    pub trials: usize,
    pub seed: u64,
    pub results: Vec<IdentityResult>,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.results.iter().fold(0.0, |m, r| m.max(r.max_residual))
    }
}

/// Forms reused across every case of the suite.
struct Cache {
    dim: usize,
    basis: Vec<AlternatingForm>,
    n1: Vec<AlternatingForm>,
    n2: BTreeMap<(usize, usize), AlternatingForm>,
    n3: BTreeMap<(usize, usize, usize), AlternatingForm>,
}

impl Cache {
    fn new(dim: usize) -> Result<Self, ExteriorError> {
        let mut n2 = BTreeMap::new();
        let mut n3 = BTreeMap::new();
        for a in 0..dim {
            for b in 0..dim {
                n2.insert((a, b), epsilon_form(dim, &[a, b])?);
                for c in 0..dim {
                    n3.insert((a, b, c), epsilon_form(dim, &[a, b, c])?);
                }
            }
        }
        Ok(Self {
            dim,
            basis: (0..dim).map(|a| AlternatingForm::basis(dim, a)).collect(),
            n1: (0..dim).map(|a| epsilon_form(dim, &[a])).collect::<Result<_, _>>()?,
            n2,
            n3,
        })
    }

    fn delta(a: usize, b: usize) -> f64 {
        if a == b {
            1.0
        } else {
            0.0
        }
    }

    fn residual(&self, id: Identity, ix: &[usize], beta: &[AlternatingForm]) -> Result<f64, ExteriorError> {
        let n = self.dim;
        let diff = match id {
            Identity::WedgeN1 => {
                let (a, a1) = (ix[0], ix[1]);
                let lhs = wedge(&self.basis[a], &self.n1[a1])?;
                let rhs = AlternatingForm::volume(n).scale(Self::delta(a, a1));
                lhs.sub(&rhs)?
            }
            Identity::WedgeN2 => {
                let (a, a1, b1) = (ix[0], ix[1], ix[2]);
                let lhs = wedge(&self.basis[a], &self.n2[&(a1, b1)])?;
                let rhs = self.n1[a1].scale(Self::delta(a, b1)).sub(&self.n1[b1].scale(Self::delta(a, a1)))?;
                lhs.sub(&rhs)?
            }
            Identity::WedgeN3 => {
                let (a, a1, b1, c1) = (ix[0], ix[1], ix[2], ix[3]);
                let lhs = wedge(&self.basis[a], &self.n3[&(a1, b1, c1)])?;
                let rhs = self.n2[&(a1, b1)]
                    .scale(Self::delta(a, c1))
                    .add(&self.n2[&(c1, a1)].scale(Self::delta(a, b1)))?
                    .add(&self.n2[&(b1, c1)].scale(Self::delta(a, a1)))?;
                lhs.sub(&rhs)?
            }
            Identity::DerivN1 => {
                let a = ix[0];
                let lhs = derivation(&self.n1[a], beta)?;
                let mut rhs = AlternatingForm::zero(n, n, 1);
                for (b, beta_b) in beta.iter().enumerate() {
                    rhs = rhs.add(&wedge(beta_b, &self.n2[&(a, b)])?)?;
                }
                lhs.sub(&rhs)?
            }
            Identity::DerivN2 => {
                let (a, b) = (ix[0], ix[1]);
                let lhs = derivation(&self.n2[&(a, b)], beta)?;
                let mut rhs = AlternatingForm::zero(n, n - 1, 1);
                for (c, beta_c) in beta.iter().enumerate() {
                    rhs = rhs.add(&wedge(beta_c, &self.n3[&(a, b, c)])?)?;
                }
                lhs.sub(&rhs)?
            }
        };
        Ok(diff.max_abs())
    }
}

/// Random integer-valued 2-forms standing in for `dθ^B`.
fn random_two_forms(dim: usize, rng: &mut ChaCha8Rng) -> Vec<AlternatingForm> {
    (0..dim)
        .map(|_| {
            let mut f = AlternatingForm::zero(dim, 2, 1);
            for i in 0..dim {
                for j in i + 1..dim {
                    let v = rng.gen_range(-3i32..=3) as f64;
                    f.add_term(&[i, j], &[v]);
                }
            }
            f
        })
        .collect()
}

fn all_tuples(dim: usize, arity: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..dim).map(move |i| {
                    let mut t = t.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

/// Check the five wedge and derivative identities of the ε-built forms.
///
/// For `N ≤ 5` every index choice is visited once; `trials` further random
/// index choices are drawn for every `N`. The derivative identities draw a
/// fresh set of substituted 2-forms for each case.
pub fn check_identities(dim: usize, trials: usize, seed: u64) -> Result<IdentityReport, ExteriorError> {
    if !(MIN_IDENTITY_DIM..=MAX_IDENTITY_DIM).contains(&dim) {
        return Err(ExteriorError::Dimension(dim, MIN_IDENTITY_DIM, MAX_IDENTITY_DIM));
    }
    let cache = Cache::new(dim)?;
    let exhaustive = dim <= 5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::new();
    for id in Identity::ALL {
        let mut cases: Vec<Vec<usize>> = if exhaustive { all_tuples(dim, id.arity()) } else { Vec::new() };
        for _ in 0..trials {
            cases.push((0..id.arity()).map(|_| rng.gen_range(0..dim)).collect());
        }
        let needs_beta = matches!(id, Identity::DerivN1 | Identity::DerivN2);
        let mut max = 0.0f64;
        let mut worst = None;
        for ix in &cases {
            let beta = if needs_beta { random_two_forms(dim, &mut rng) } else { Vec::new() };
            let r = cache.residual(id, ix, &beta)?;
            if r > max {
                max = r;
                worst = Some(ix.iter().map(|i| i + 1).collect());
            }
        }
        results.push(IdentityResult { identity: id, cases: cases.len(), max_residual: max, worst });
    }
    Ok(IdentityReport { dim, exhaustive, trials, seed, results })
}
