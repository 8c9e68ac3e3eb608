use std::collections::BTreeMap;
use std::fmt;

use super::EvalError;

/// Elementary functions accepted by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
}

impl Func {
    pub const ALL: [Func; 8] =
        [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Log, Func::Sqrt, Func::Sinh, Func::Cosh];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> Result<f64, EvalError> {
        let y = match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return Err(EvalError::Domain { op: "log", value: x });
                }
                x.ln()
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(EvalError::Domain { op: "sqrt", value: x });
                }
                x.sqrt()
            }
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
        };
        Ok(y)
    }
}

/// Expression tree over chart variables and named parameters.
///
/// `Var(i)` is the zero-based chart variable, written `x{i+1}` in source text.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Param(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    /// Largest variable index used plus one (0 for variable-free trees).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Param(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    pub fn depends_on(&self, var: usize) -> bool {
        match self {
            Expr::Num(_) | Expr::Param(_) => false,
            Expr::Var(i) => *i == var,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
        }
    }

    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        match self {
            Expr::Param(p) => out.push(p.clone()),
            Expr::Num(_) | Expr::Var(_) => {}
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_params(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
        }
    }

    /// Replace every parameter by its bound value. Unbound parameters are an error.
    pub fn bind(&self, params: &BTreeMap<String, f64>) -> Result<Expr, EvalError> {
        Ok(match self {
            Expr::Param(p) => match params.get(p) {
                Some(v) => Expr::Num(*v),
                None => return Err(EvalError::UnboundParameter(p.clone())),
            },
            Expr::Num(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.bind(params)?)),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.bind(params)?)),
            Expr::Add(a, b) => Expr::Add(Box::new(a.bind(params)?), Box::new(b.bind(params)?)),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.bind(params)?), Box::new(b.bind(params)?)),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.bind(params)?), Box::new(b.bind(params)?)),
            Expr::Div(a, b) => Expr::Div(Box::new(a.bind(params)?), Box::new(b.bind(params)?)),
            Expr::Pow(a, b) => Expr::Pow(Box::new(a.bind(params)?), Box::new(b.bind(params)?)),
        })
    }

    /// Evaluate at a chart point. Parameters must already be bound.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(i) => {
                point.get(*i).copied().ok_or(EvalError::VariableOutOfRange { index: *i + 1, dim: point.len() })
            }
            Expr::Param(p) => Err(EvalError::UnboundParameter(p.clone())),
            Expr::Neg(a) => Ok(-a.eval(point)?),
            Expr::Add(a, b) => Ok(a.eval(point)? + b.eval(point)?),
            Expr::Sub(a, b) => Ok(a.eval(point)? - b.eval(point)?),
            Expr::Mul(a, b) => Ok(a.eval(point)? * b.eval(point)?),
            Expr::Div(a, b) => {
                let den = b.eval(point)?;
                if den == 0.0 {
                    return Err(EvalError::Domain { op: "/", value: den });
                }
                Ok(a.eval(point)? / den)
            }
            Expr::Pow(a, b) => {
                let base = a.eval(point)?;
                let exp = b.eval(point)?;
                if exp.fract() == 0.0 && exp.abs() < i32::MAX as f64 {
                    if base == 0.0 && exp < 0.0 {
                        return Err(EvalError::Domain { op: "^", value: base });
                    }
                    Ok(base.powi(exp as i32))
                } else if base < 0.0 {
                    Err(EvalError::Domain { op: "^", value: base })
                } else {
                    Ok(base.powf(exp))
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(point)?),
        }
    }

    /// Render with the given variable names instead of `x1, x2, ...`.
    pub fn render(&self, names: &[&str]) -> String {
        let mut s = String::new();
        self.write(&mut s, names);
        s
    }

    // Fully parenthesized output so that reparsing reproduces the same tree.
    fn write(&self, out: &mut String, names: &[&str]) {
        use std::fmt::Write;
        match self {
            Expr::Num(v) => {
                if *v < 0.0 {
                    let _ = write!(out, "(-{:?})", -v);
                } else {
                    let _ = write!(out, "{v:?}");
                }
            }
            Expr::Var(i) => match names.get(*i) {
                Some(n) => out.push_str(n),
                None => {
                    let _ = write!(out, "x{}", i + 1);
                }
            },
            Expr::Param(p) => out.push_str(p),
            Expr::Neg(a) => {
                out.push_str("(-");
                a.write(out, names);
                out.push(')');
            }
            Expr::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write(out, names);
                out.push(')');
            }
            Expr::Add(a, b) => binary(out, names, a, "+", b),
            Expr::Sub(a, b) => binary(out, names, a, "-", b),
            Expr::Mul(a, b) => binary(out, names, a, "*", b),
            Expr::Div(a, b) => binary(out, names, a, "/", b),
            Expr::Pow(a, b) => binary(out, names, a, "^", b),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Param(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.node_count(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                1 + a.node_count() + b.node_count()
            }
        }
    }
}

fn binary(out: &mut String, names: &[&str], a: &Expr, op: &str, b: &Expr) {
    out.push('(');
    a.write(out, names);
    out.push(' ');
    out.push_str(op);
    out.push(' ');
    b.write(out, names);
    out.push(')');
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&[]))
    }
}

// Smart constructors with constant folding, used by differentiation.
// Float guards read better here than float literal patterns.

pub(crate) fn num(v: f64) -> Expr {
    Expr::Num(v)
}

fn as_num(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        _ => None,
    }
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

#[allow(clippy::redundant_guards)]
pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

#[allow(clippy::redundant_guards)]
pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

#[allow(clippy::redundant_guards)]
pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Num(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), _) if x == -1.0 => neg(b),
        (_, Some(y)) if y == -1.0 => neg(a),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

#[allow(clippy::redundant_guards)]
pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) if y != 0.0 => Expr::Num(x / y),
        (Some(x), _) if x == 0.0 => Expr::Num(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

#[allow(clippy::redundant_guards)]
pub(crate) fn pow(a: Expr, b: Expr) -> Expr {
    match as_num(&b) {
        Some(y) if y == 0.0 => Expr::Num(1.0),
        Some(y) if y == 1.0 => a,
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}
