//! Analytic scalar fields: parsing, evaluation and symbolic partial derivatives.

mod ast;
mod diff;
mod parser;
mod provider;

pub use ast::{Expr, Func};
pub use diff::diff;
pub use parser::{parse, parse_with, ParseOptions};
pub use provider::FieldProvider;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{op}` at argument {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("variable x{index} is outside the {dim}-dimensional chart")]
    VariableOutOfRange { index: usize, dim: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("cannot parse `{text}`: {source}")]
    Parse { text: String, source: ParseError },
    #[error(transparent)]
    Eval(EvalError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn b(e: Expr) -> Box<Expr> {
        Box::new(e)
    }

    #[test]
    fn grammar_examples() {
        assert_eq!(
            parse("x1*x2 + sin(x1)").unwrap(),
            Expr::Add(b(Expr::Mul(b(Expr::Var(0)), b(Expr::Var(1)))), b(Expr::Call(Func::Sin, b(Expr::Var(0)))))
        );
        assert_eq!(
            parse("x1^2^3").unwrap(),
            Expr::Pow(b(Expr::Var(0)), b(Expr::Pow(b(Expr::Num(2.0)), b(Expr::Num(3.0)))))
        );
        let err = parse("x1 +* 2").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 3, .. }), "{err:?}");
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        assert_eq!(parse("-x1^2").unwrap(), Expr::Neg(b(Expr::Pow(b(Expr::Var(0)), b(Expr::Num(2.0))))));
        assert_eq!(parse("x1^-2").unwrap(), Expr::Pow(b(Expr::Var(0)), b(Expr::Neg(b(Expr::Num(2.0))))));
    }

    #[test]
    fn left_associative_subtraction_and_division() {
        let e = parse("x1 - x2 - 1").unwrap();
        assert_eq!(e.eval(&[5.0, 2.0]).unwrap(), 2.0);
        let e = parse("8 / 4 / 2").unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 1.0);
    }

    #[test]
    fn unknown_identifiers() {
        assert!(
            matches!(parse("foo(x1)"), Err(ParseError::UnknownIdentifier { ref name, offset: 0 }) if name == "foo")
        );
        assert!(matches!(parse("2*x0"), Err(ParseError::UnknownIdentifier { offset: 2, .. })));
        assert_eq!(parse("omega").unwrap(), Expr::Param("omega".into()));
    }

    #[test]
    fn derivative_examples() {
        let d = diff(&parse("x1^2").unwrap(), 0);
        assert_eq!(d.eval(&[3.0]).unwrap(), 6.0);
        let d = diff(&parse("sin(x1*x2)").unwrap(), 1);
        assert!((d.eval(&[1.0, std::f64::consts::PI]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(diff(&parse("c").unwrap(), 0), Expr::Num(0.0));
    }

    #[test]
    fn parameters_resolve_at_construction() {
        let e = parse("a*x1").unwrap();
        let empty = BTreeMap::new();
        assert!(matches!(
            FieldProvider::new(&e, 1, &empty),
            Err(FieldError::Eval(EvalError::UnboundParameter(ref p))) if p == "a"
        ));
        let mut params = BTreeMap::new();
        params.insert("a".to_string(), 2.5);
        let f = FieldProvider::new(&e, 1, &params).unwrap();
        assert_eq!(f.evaluate(&[2.0]).unwrap(), 5.0);
        assert_eq!(f.partial(0, &[2.0]).unwrap(), 2.5);
    }

    #[test]
    fn chart_dimension_is_enforced() {
        let e = parse("x3").unwrap();
        assert!(FieldProvider::new(&e, 2, &BTreeMap::new()).is_err());
    }

    #[test]
    fn second_partials_are_indexed_symmetrically() {
        let f = FieldProvider::from_text("x1^2*x2 + x3^3*x2", 3, &BTreeMap::new()).unwrap();
        let p = [1.0, 2.0, 3.0];
        assert_eq!(f.second_partial(0, 0, &p).unwrap(), 4.0);
        assert_eq!(f.second_partial(0, 1, &p).unwrap(), 2.0);
        assert_eq!(f.second_partial(1, 0, &p).unwrap(), 2.0);
        assert_eq!(f.second_partial(2, 2, &p).unwrap(), 36.0);
        assert_eq!(f.second_partial(1, 2, &p).unwrap(), 27.0);
        assert_eq!(f.second_partial(1, 1, &p).unwrap(), 0.0);
    }
}
