use std::collections::BTreeMap;

use super::{diff, parse, EvalError, Expr, FieldError};

/// A scalar field on an `n`-dimensional chart with exact first and second
/// partial derivatives.
#[derive(Debug, Clone)]
pub struct FieldProvider {
    dim: usize,
    expr: Expr,
    grad: Vec<Expr>,
    // upper triangle, row-major: (i, j) with i <= j
    hess: Vec<Expr>,
}

impl FieldProvider {
    /// Bind parameters and precompute derivative trees.
    pub fn new(expr: &Expr, dim: usize, params: &BTreeMap<String, f64>) -> Result<Self, FieldError> {
        let expr = expr.bind(params).map_err(FieldError::Eval)?;
        if expr.arity() > dim {
            return Err(FieldError::Eval(EvalError::VariableOutOfRange { index: expr.arity(), dim }));
        }
        let grad: Vec<Expr> = (0..dim).map(|i| diff(&expr, i)).collect();
        let mut hess = Vec::with_capacity(dim * (dim + 1) / 2);
        for (i, g) in grad.iter().enumerate() {
            for j in i..dim {
                hess.push(diff(g, j));
            }
        }
        Ok(Self { dim, expr, grad, hess })
    }

    pub fn from_text(text: &str, dim: usize, params: &BTreeMap<String, f64>) -> Result<Self, FieldError> {
        let e = parse(text).map_err(|source| FieldError::Parse { text: text.to_string(), source })?;
        Self::new(&e, dim, params)
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        Self::new(&Expr::Num(value), dim, &BTreeMap::new()).expect("constant field")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.expr.eval(point)
    }

    pub fn partial(&self, i: usize, point: &[f64]) -> Result<f64, EvalError> {
        self.grad[i].eval(point)
    }

    pub fn second_partial(&self, i: usize, j: usize, point: &[f64]) -> Result<f64, EvalError> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.hess[self.hess_index(i, j)].eval(point)
    }

    fn hess_index(&self, i: usize, j: usize) -> usize {
        // rows 0..i contribute (dim - k) entries each
        let before: usize = (0..i).map(|k| self.dim - k).sum();
        before + (j - i)
    }

    pub fn is_constant(&self) -> bool {
        self.expr.arity() == 0
    }
}
