//! Recursive-descent parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus (`-x1^2` is `-(x1^2)`) and is right
//! associative; an exponent may carry its own sign (`x1^-2`).

use super::ast::{Expr, Func};
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if ch.is_ascii_digit() || (ch == b'.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value: f64 = text
                .parse()
                .map_err(|_| ParseError::Syntax { offset: start, message: format!("malformed number `{text}`") })?;
            out.push(Token { tok: Tok::Num(value), offset: start });
            continue;
        }
        if ch.is_ascii_alphabetic() || ch == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(src[start..i].to_string()), offset: start });
            continue;
        }
        let tok = match ch {
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(ch as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            _ => {
                let c = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax { offset: start, message: format!("unexpected character `{c}`") });
            }
        };
        out.push(Token { tok, offset: start });
        i += 1;
    }
    out.push(Token { tok: Tok::End, offset: src.len() });
    Ok(out)
}

/// How identifiers map to variables.
#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Explicit variable names (`Var(i)` is `names[i]`). When empty, the
    /// chart convention `x1, x2, ...` applies.
    pub variables: Vec<String>,
}

impl ParseOptions {
    pub fn with_variables<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        Self { variables: names.into_iter().map(Into::into).collect() }
    }
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    opts: &'a ParseOptions,
}

/// Parse with the chart convention (`x1..xn` are variables, other bare
/// identifiers are parameters).
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    parse_with(src, &ParseOptions::default())
}

pub fn parse_with(src: &str, opts: &ParseOptions) -> Result<Expr, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0, opts };
    if p.peek().tok == Tok::End {
        return Err(ParseError::Syntax { offset: 0, message: "empty expression".into() });
    }
    let e = p.expr()?;
    let t = p.peek();
    if t.tok != Tok::End {
        return Err(ParseError::Syntax { offset: t.offset, message: format!("unexpected {}", describe(&t.tok)) });
    }
    Ok(e)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number `{v}`"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("operator `{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::End => "end of input".into(),
    }
}

fn starts_operand(t: &Tok) -> bool {
    matches!(t, Tok::Num(_) | Tok::Ident(_) | Tok::LParen | Tok::Op('-'))
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::End {
            self.pos += 1;
        }
        t
    }

    // An operator whose right operand is missing is reported at the operator.
    fn require_operand(&self, op: &Token) -> Result<(), ParseError> {
        if starts_operand(&self.peek().tok) {
            Ok(())
        } else {
            let c = match op.tok {
                Tok::Op(c) => c,
                _ => '?',
            };
            Err(ParseError::Syntax {
                offset: op.offset,
                message: format!("operator `{c}` is missing its right operand"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = self.peek().tok {
            let op = self.bump();
            self.require_operand(&op)?;
            let rhs = self.term()?;
            lhs = if c == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = self.peek().tok {
            let op = self.bump();
            self.require_operand(&op)?;
            let rhs = self.unary()?;
            lhs = if c == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Op('-') {
            let op = self.bump();
            self.require_operand(&op)?;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek().tok == Tok::Op('^') {
            let op = self.bump();
            self.require_operand(&op)?;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen(t.offset)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek().tok == Tok::LParen {
                    let open = self.bump();
                    let f = Func::from_name(&name)
                        .ok_or(ParseError::UnknownIdentifier { name: name.clone(), offset: t.offset })?;
                    let arg = self.expr()?;
                    self.expect_rparen(open.offset)?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                if Func::from_name(&name).is_some() {
                    return Err(ParseError::Syntax {
                        offset: t.offset,
                        message: format!("function `{name}` needs an argument list"),
                    });
                }
                self.identifier(name, t.offset)
            }
            other => Err(ParseError::Syntax {
                offset: t.offset,
                message: format!("expected an operand, found {}", describe(&other)),
            }),
        }
    }

    fn expect_rparen(&mut self, open: usize) -> Result<(), ParseError> {
        let t = self.bump();
        if t.tok == Tok::RParen {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                offset: t.offset,
                message: format!("expected `)` to close `(` at byte {open}, found {}", describe(&t.tok)),
            })
        }
    }

    fn identifier(&self, name: String, offset: usize) -> Result<Expr, ParseError> {
        if !self.opts.variables.is_empty() {
            if let Some(i) = self.opts.variables.iter().position(|v| *v == name) {
                return Ok(Expr::Var(i));
            }
            return Ok(Expr::Param(name));
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                return match digits.parse::<usize>() {
                    Ok(k) if k >= 1 && !digits.starts_with('0') => Ok(Expr::Var(k - 1)),
                    _ => Err(ParseError::UnknownIdentifier { name, offset }),
                };
            }
        }
        Ok(Expr::Param(name))
    }
}
