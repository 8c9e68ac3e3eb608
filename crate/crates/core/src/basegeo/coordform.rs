use std::collections::BTreeMap;

use crate::exterior::AlternatingForm;
use crate::fieldexpr::{diff, EvalError, Expr, FieldProvider};

/// A coordinate form `Σ f_I dx^I` with symbolic coefficients, keyed by
/// strictly increasing zero-based multi-indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordForm {
    n: usize,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

impl CoordForm {
    pub fn function(n: usize, f: &FieldProvider) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Vec::new(), f.expr().clone());
        Self { n, degree: 0, terms }
    }

    /// `Σ_μ coeffs[μ] dx^μ`.
    pub fn one_form(coeffs: &[&FieldProvider]) -> Self {
        let n = coeffs.len();
        let terms = coeffs.iter().enumerate().map(|(mu, f)| (vec![mu], f.expr().clone())).collect();
        Self { n, degree: 1, terms }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Exterior derivative; coefficients are exact symbolic partials.
    pub fn d(&self) -> CoordForm {
        let mut terms: BTreeMap<Vec<usize>, Expr> = BTreeMap::new();
        for (idx, f) in &self.terms {
            for mu in 0..self.n {
                if idx.contains(&mu) {
                    continue;
                }
                let df = diff(f, mu);
                if matches!(df, Expr::Num(v) if v == 0.0) {
                    continue;
                }
                // moving dx^μ into sorted position passes the indices below it
                let below = idx.iter().filter(|&&i| i < mu).count();
                let term = if below % 2 == 0 { df } else { Expr::Neg(Box::new(df)) };
                let mut key = idx.clone();
                key.insert(below, mu);
                let merged = match terms.remove(&key) {
                    Some(prev) => Expr::Add(Box::new(prev), Box::new(term)),
                    None => term,
                };
                terms.insert(key, merged);
            }
        }
        CoordForm { n: self.n, degree: self.degree + 1, terms }
    }

    pub fn eval(&self, point: &[f64]) -> Result<AlternatingForm, EvalError> {
        let mut out = AlternatingForm::zero(self.n, self.degree, 1);
        for (idx, f) in &self.terms {
            out.add_term(idx, &[f.eval(point)?]);
        }
        Ok(out)
    }
}
