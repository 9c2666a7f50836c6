//! Scalar expression DSL used for immersion coordinate functions.
//!
//! Grammar (with `^` right-associative):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-' unary | atom
//! atom   := number | 'pi' | ident | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | tan | sinh | cosh | tanh | sqrt | exp | log
//! ```
//!
//! Parsing produces an AST with raw identifiers; [`Expr::bind`] resolves
//! them against declared variables and parameters and produces an
//! evaluable tree. Evaluation is generic over [`Real`], so the same tree
//! is used for plain values and hyper-dual jets.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::hyperdual::Real;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: u32, col: u32, msg: String },
    #[error("unbound identifier `{name}` at {line}:{col}")]
    UnboundIdentifier { name: String, line: u32, col: u32 },
    #[error("function `{name}` at {line}:{col} takes 1 argument, found {found}")]
    Arity { name: String, line: u32, col: u32, found: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("non-finite value while evaluating `{context}`")]
pub struct EvalError {
    pub context: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
    Exp,
    Log,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            _ => return None,
        })
    }

    fn apply<S: Real>(self, x: S) -> S {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Sqrt => x.sqrt(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
        }
    }
}

/// Parsed expression with identifiers left unresolved.
#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Num(f64),
    Ident { name: String, line: u32, col: u32 },
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, Box<Ast>),
    Call(Func, Box<Ast>),
}

/// Bound, evaluable expression. Variables index into the evaluation slot
/// vector; parameters are baked in as constants at bind time.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: u32,
    col: u32,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn tokenize(mut self) -> Result<(Vec<Spanned>, u32, u32), ExprError> {
        let mut toks = Vec::new();
        while self.pos < self.src.len() {
            let (line, col) = (self.line, self.col);
            let c = self.src[self.pos];
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.bump();
                }
                b'+' => {
                    self.bump();
                    toks.push(Spanned { tok: Tok::Plus, line, col });
                }
                b'-' => {
                    self.bump();
                    toks.push(Spanned { tok: Tok::Minus, line, col });
                }
                b'*' => {
                    self.bump();
                    toks.push(Spanned { tok: Tok::Star, line, col });
                }
                b'/' => {
                    self.bump();
                    toks.push(Spanned { tok: Tok::Slash, line, col });
                }
                b'^' => {
                    self.bump();
                    toks.push(Spanned { tok: Tok::Caret, line, col });
                }
                b'(' => {
                    self.bump();
                    toks.push(Spanned { tok: Tok::LParen, line, col });
                }
                b')' => {
                    self.bump();
                    toks.push(Spanned { tok: Tok::RParen, line, col });
                }
                b',' => {
                    self.bump();
                    toks.push(Spanned { tok: Tok::Comma, line, col });
                }
                b'0'..=b'9' | b'.' => {
                    let start = self.pos;
                    while self.pos < self.src.len()
                        && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
                    {
                        self.bump();
                    }
                    if self.pos < self.src.len()
                        && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E')
                    {
                        let save = (self.pos, self.line, self.col);
                        self.bump();
                        if self.pos < self.src.len()
                            && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
                        {
                            self.bump();
                        }
                        if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit()
                            {
                                self.bump();
                            }
                        } else {
                            // not an exponent after all (e.g. `2*exp(x)`)
                            (self.pos, self.line, self.col) = save;
                        }
                    }
                    let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    let value: f64 = text.parse().map_err(|_| ExprError::Parse {
                        line,
                        col,
                        msg: format!("invalid number `{text}`"),
                    })?;
                    toks.push(Spanned { tok: Tok::Num(value), line, col });
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    let start = self.pos;
                    while self.pos < self.src.len()
                        && (self.src[self.pos].is_ascii_alphanumeric()
                            || self.src[self.pos] == b'_')
                    {
                        self.bump();
                    }
                    let text =
                        core::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
                    toks.push(Spanned { tok: Tok::Ident(text), line, col });
                }
                other => {
                    return Err(ExprError::Parse {
                        line,
                        col,
                        msg: format!("unexpected character `{}`", other as char),
                    });
                }
            }
        }
        Ok((toks, self.line, self.col))
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end_line: u32,
    end_col: u32,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (u32, u32) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or((self.end_line, self.end_col))
    }

    fn advance(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        match self.peek() {
            Some(t) if *t == tok => {
                self.pos += 1;
                Ok(())
            }
            _ => {
                let (line, col) = self.here();
                Err(ExprError::Parse { line, col, msg: format!("expected {what}") })
            }
        }
    }

    fn parse_expr(&mut self) -> Result<Ast, ExprError> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Ast::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Ast::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Ast, ExprError> {
        let mut lhs = self.parse_factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.parse_factor()?;
                    lhs = Ast::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let rhs = self.parse_factor()?;
                    lhs = Ast::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Ast, ExprError> {
        let base = self.parse_unary()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let exp = self.parse_factor()?;
            return Ok(Ast::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn parse_unary(&mut self) -> Result<Ast, ExprError> {
        if let Some(Tok::Minus) = self.peek() {
            self.pos += 1;
            let inner = self.parse_unary()?;
            return Ok(Ast::Neg(Box::new(inner)));
        }
        self.parse_atom()
    }

    fn parse_atom(&mut self) -> Result<Ast, ExprError> {
        let (line, col) = self.here();
        match self.advance() {
            Some(Spanned { tok: Tok::Num(v), .. }) => Ok(Ast::Num(v)),
            Some(Spanned { tok: Tok::LParen, .. }) => {
                let inner = self.parse_expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Spanned { tok: Tok::Ident(name), .. }) => {
                if let Some(func) = Func::from_name(&name) {
                    if self.peek() != Some(&Tok::LParen) {
                        return Err(ExprError::Arity { name, line, col, found: 0 });
                    }
                    self.pos += 1;
                    let mut args = alloc::vec![self.parse_expr()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.parse_expr()?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    if args.len() != 1 {
                        return Err(ExprError::Arity { name, line, col, found: args.len() });
                    }
                    Ok(Ast::Call(func, Box::new(args.pop().unwrap())))
                } else {
                    Ok(Ast::Ident { name, line, col })
                }
            }
            Some(Spanned { tok, .. }) => Err(ExprError::Parse {
                line,
                col,
                msg: format!("unexpected token `{tok:?}`"),
            }),
            None => Err(ExprError::Parse { line, col, msg: "unexpected end of input".to_string() }),
        }
    }
}

/// Parse a single expression string.
pub fn parse(src: &str) -> Result<Ast, ExprError> {
    let (toks, end_line, end_col) = Lexer::new(src).tokenize()?;
    let mut parser = Parser { toks, pos: 0, end_line, end_col };
    let ast = parser.parse_expr()?;
    if parser.pos != parser.toks.len() {
        let (line, col) = parser.here();
        return Err(ExprError::Parse { line, col, msg: "trailing input".to_string() });
    }
    Ok(ast)
}

impl Ast {
    /// Resolve identifiers: variables by name -> slot index, parameters and
    /// `pi` to constants.
    pub fn bind(&self, variables: &[String], params: &[(String, f64)]) -> Result<Expr, ExprError> {
        Ok(match self {
            Ast::Num(v) => Expr::Num(*v),
            Ast::Ident { name, line, col } => {
                if name == "pi" {
                    Expr::Num(core::f64::consts::PI)
                } else if let Some(idx) = variables.iter().position(|v| v == name) {
                    Expr::Var(idx)
                } else if let Some((_, value)) = params.iter().find(|(p, _)| p == name) {
                    Expr::Num(*value)
                } else {
                    return Err(ExprError::UnboundIdentifier {
                        name: name.clone(),
                        line: *line,
                        col: *col,
                    });
                }
            }
            Ast::Neg(a) => Expr::Neg(Box::new(a.bind(variables, params)?)),
            Ast::Add(a, b) => Expr::Add(
                Box::new(a.bind(variables, params)?),
                Box::new(b.bind(variables, params)?),
            ),
            Ast::Sub(a, b) => Expr::Sub(
                Box::new(a.bind(variables, params)?),
                Box::new(b.bind(variables, params)?),
            ),
            Ast::Mul(a, b) => Expr::Mul(
                Box::new(a.bind(variables, params)?),
                Box::new(b.bind(variables, params)?),
            ),
            Ast::Div(a, b) => Expr::Div(
                Box::new(a.bind(variables, params)?),
                Box::new(b.bind(variables, params)?),
            ),
            Ast::Pow(a, b) => Expr::Pow(
                Box::new(a.bind(variables, params)?),
                Box::new(b.bind(variables, params)?),
            ),
            Ast::Call(f, a) => Expr::Call(*f, Box::new(a.bind(variables, params)?)),
        })
    }
}

impl Expr {
    /// Evaluate with variable slots `vars`. Reports `EvalError` as soon as
    /// any intermediate becomes non-finite.
    pub fn eval<S: Real>(&self, vars: &[S]) -> Result<S, EvalError>
    where
        S: FiniteCheck,
    {
        let out = self.eval_inner(vars)?;
        if !out.check_finite() {
            return Err(EvalError { context: "expression result".to_string() });
        }
        Ok(out)
    }

    fn eval_inner<S: Real + FiniteCheck>(&self, vars: &[S]) -> Result<S, EvalError> {
        let out = match self {
            Expr::Num(v) => S::from_f64(*v),
            Expr::Var(i) => vars[*i],
            Expr::Neg(a) => -a.eval_inner(vars)?,
            Expr::Add(a, b) => a.eval_inner(vars)? + b.eval_inner(vars)?,
            Expr::Sub(a, b) => a.eval_inner(vars)? - b.eval_inner(vars)?,
            Expr::Mul(a, b) => a.eval_inner(vars)? * b.eval_inner(vars)?,
            Expr::Div(a, b) => a.eval_inner(vars)? / b.eval_inner(vars)?,
            Expr::Pow(a, b) => a.eval_inner(vars)?.pow(b.eval_inner(vars)?),
            Expr::Call(f, a) => f.apply(a.eval_inner(vars)?),
        };
        if !out.check_finite() {
            return Err(EvalError { context: self.describe() });
        }
        Ok(out)
    }

    fn describe(&self) -> String {
        match self {
            Expr::Num(v) => format!("{v}"),
            Expr::Var(i) => format!("x{}", i + 1),
            Expr::Neg(_) => "negation".to_string(),
            Expr::Add(..) => "addition".to_string(),
            Expr::Sub(..) => "subtraction".to_string(),
            Expr::Mul(..) => "multiplication".to_string(),
            Expr::Div(..) => "division".to_string(),
            Expr::Pow(..) => "power".to_string(),
            Expr::Call(f, _) => format!("{f:?}"),
        }
    }
}

/// Finiteness check used by the evaluator; implemented for every scalar the
/// evaluator runs over.
pub trait FiniteCheck {
    fn check_finite(&self) -> bool;
}

impl FiniteCheck for f64 {
    fn check_finite(&self) -> bool {
        self.is_finite()
    }
}

impl FiniteCheck for crate::hyperdual::HyperDual {
    fn check_finite(&self) -> bool {
        self.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eval_str(src: &str, vars: &[(&str, f64)]) -> f64 {
        let names: Vec<String> = vars.iter().map(|(n, _)| n.to_string()).collect();
        let vals: Vec<f64> = vars.iter().map(|(_, v)| *v).collect();
        parse(src).unwrap().bind(&names, &[]).unwrap().eval(&vals).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval_str("1+2*3", &[]), 7.0);
        assert_eq!(eval_str("(1+2)*3", &[]), 9.0);
        // right-associative power: 2^3^2 = 2^9
        assert_eq!(eval_str("2^3^2", &[]), 512.0);
        assert_eq!(eval_str("2^-2", &[]), 0.25);
        assert_relative_eq!(eval_str("sin(pi/2)", &[]), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn unary_minus_binds_before_power() {
        // factor := unary ('^' factor)? puts the sign inside the base
        assert_eq!(eval_str("-2^2", &[]), 4.0);
        assert_eq!(eval_str("0-2^2", &[]), -4.0);
    }

    #[test]
    fn variables_and_params_resolve() {
        let ast = parse("sqrt(1-a^2)*x1").unwrap();
        let bound = ast.bind(&["x1".to_string()], &[("a".to_string(), 0.6)]).unwrap();
        assert_relative_eq!(bound.eval(&[2.0f64]).unwrap(), 1.6, max_relative = 1e-15);
    }

    #[test]
    fn unclosed_paren_reports_position() {
        match parse("sin(x1") {
            Err(ExprError::Parse { line, col, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(col, 7);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unbound_identifier_reports_name() {
        let ast = parse("x1 + bogus").unwrap();
        match ast.bind(&["x1".to_string()], &[]) {
            Err(ExprError::UnboundIdentifier { name, col, .. }) => {
                assert_eq!(name, "bogus");
                assert_eq!(col, 6);
            }
            other => panic!("expected unbound identifier, got {other:?}"),
        }
    }

    #[test]
    fn arity_errors() {
        assert!(matches!(parse("sin(x1, x2)"), Err(ExprError::Arity { found: 2, .. })));
        assert!(matches!(parse("sqrt + 1"), Err(ExprError::Arity { found: 0, .. })));
    }

    #[test]
    fn eval_error_on_log_of_negative() {
        let e = parse("log(x1)").unwrap().bind(&["x1".to_string()], &[]).unwrap();
        assert!(e.eval(&[-1.0f64]).is_err());
        assert!(e.eval(&[1.0f64]).is_ok());
    }

    #[test]
    fn hyperdual_eval_matches_f64_values() {
        use crate::hyperdual::HyperDual;
        let e = parse("sinh(x1)*cos(x2)^2 + exp(-x1*x2)")
            .unwrap()
            .bind(&["x1".to_string(), "x2".to_string()], &[])
            .unwrap();
        let plain = e.eval(&[0.7f64, -0.3]).unwrap();
        let dual = e
            .eval(&[HyperDual::new(0.7, 1.0, 0.0, 0.0), HyperDual::new(-0.3, 0.0, 1.0, 0.0)])
            .unwrap();
        assert_eq!(plain, dual.value);
    }
}
