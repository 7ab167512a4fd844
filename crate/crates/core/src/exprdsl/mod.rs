//! A small expression language for level-set functions `f(x, y, z)`.
//!
//! Variables are `x, y, z` (aliases of `x1, y1` when `m = 1`) and `x<k>, y<k>`
//! for `1 <= k <= m`. Functions `sin cos tan exp log sqrt` take one argument.
//! Precedence from loosest to tightest: `+ -`, `* /`, unary `-`, `^` (right
//! associative, so `-x^2` is `-(x^2)` and `2^3^2` is `2^9`).

mod config;
mod eval;
mod lexer;
mod parser;
#[cfg(test)]
mod fixtures;

use std::fmt;

use thiserror::Error;

pub use config::{load_config, ConfigError, FieldError, RunConfig, Tolerances};
pub use eval::EvalError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    /// `x_k`, 1-based.
    X(usize),
    /// `y_k`, 1-based.
    Y(usize),
    Z,
}

impl Var {
    fn from_name(name: &str) -> Option<Var> {
        match name {
            "x" => return Some(Var::X(1)),
            "y" => return Some(Var::Y(1)),
            "z" => return Some(Var::Z),
            _ => {}
        }
        let (head, tail) = name.split_at(1);
        if tail.is_empty() || !tail.bytes().all(|b| b.is_ascii_digit()) || tail.starts_with('0') {
            return None;
        }
        let k: usize = tail.parse().ok()?;
        match head {
            "x" => Some(Var::X(k)),
            "y" => Some(Var::Y(k)),
            _ => None,
        }
    }

    /// Coordinate slot in `(x_1..x_m, y_1..y_m, z)`.
    pub fn slot(self, m: usize) -> Option<usize> {
        match self {
            Var::X(k) if (1..=m).contains(&k) => Some(k - 1),
            Var::Y(k) if (1..=m).contains(&k) => Some(m + k - 1),
            Var::Z => Some(2 * m),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(k) => write!(f, "x{k}"),
            Var::Y(k) => write!(f, "y{k}"),
            Var::Z => write!(f, "z"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        parser::parse(src)
    }

    /// Parses and checks that every variable exists for the given `m`.
    pub fn parse_for(src: &str, m: usize) -> Result<Expr, ParseError> {
        let e = parser::parse(src)?;
        if let Some(v) = e.variables().into_iter().find(|v| v.slot(m).is_none()) {
            let offset = src.find(&v.to_string()).unwrap_or(0);
            return Err(ParseError::at(src, offset, ErrorKind::UnboundVariable { var: v.to_string(), m }));
        }
        Ok(e)
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Var(v) = e {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
        });
        out
    }

    /// True when `z` does not occur, so `∂f/∂z ≡ 0` syntactically.
    pub fn is_z_free(&self) -> bool {
        !self.variables().contains(&Var::Z)
    }

    fn walk(&self, visit: &mut impl FnMut(&Expr)) {
        visit(self);
        match self {
            Expr::Num(_) | Expr::Var(_) => {}
            Expr::Neg(a) | Expr::Call(_, a) => a.walk(visit),
            Expr::Bin(_, a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
        }
    }
}

/// Fully parenthesized form; parsing it yields the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Empty,
    Lexical(char),
    BadNumber(String),
    Unexpected { found: String, expected: String },
    UnexpectedEnd { expected: String },
    UnbalancedParen,
    UnknownIdentifier(String),
    Arity { func: String, got: usize },
    UnboundVariable { var: String, m: usize },
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorKind::Empty => write!(f, "empty expression"),
            ErrorKind::Lexical(c) => write!(f, "unexpected character '{c}'"),
            ErrorKind::BadNumber(s) => write!(f, "malformed number '{s}'"),
            ErrorKind::Unexpected { found, expected } => write!(f, "found {found}, expected {expected}"),
            ErrorKind::UnexpectedEnd { expected } => write!(f, "unexpected end of input, expected {expected}"),
            ErrorKind::UnbalancedParen => write!(f, "unbalanced parenthesis"),
            ErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier '{s}'"),
            ErrorKind::Arity { func, got } => write!(f, "{func} takes 1 argument, got {got}"),
            ErrorKind::UnboundVariable { var, m } => write!(f, "variable {var} does not exist for m = {m}"),
        }
    }
}

/// A parse failure at a byte offset; `line` and `column` are 1-based, the
/// column counted in characters.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub kind: ErrorKind,
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl ParseError {
    fn at(src: &str, offset: usize, kind: ErrorKind) -> Self {
        let before = &src[..offset.min(src.len())];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        let column = before[line_start..].chars().count() + 1;
        ParseError { kind, offset, line, column }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        assert_eq!(Expr::parse("-x^2").unwrap().to_string(), "(-(x1 ^ 2.0))");
        assert_eq!(Expr::parse("2^3^2").unwrap().to_string(), "(2.0 ^ (3.0 ^ 2.0))");
        assert_eq!(Expr::parse("1 - 2 - 3").unwrap().to_string(), "((1.0 - 2.0) - 3.0)");
        assert_eq!(Expr::parse("x/y*z").unwrap().to_string(), "((x1 / y1) * z)");
        assert_eq!(Expr::parse("2^-1").unwrap().to_string(), "(2.0 ^ (-1.0))");
    }

    #[test]
    fn variables() {
        let e = Expr::parse("x2 + y1*z").unwrap();
        assert_eq!(e.variables(), vec![Var::X(2), Var::Y(1), Var::Z]);
        assert!(Expr::parse_for("x2", 1).is_err());
        assert!(Expr::parse_for("x2", 2).is_ok());
        assert!(Expr::parse("x0").is_err());
        assert!(!Expr::parse("x+z").unwrap().is_z_free());
    }

    #[test]
    fn error_positions() {
        let e = Expr::parse("x +\n  (y * 2").unwrap_err();
        assert_eq!(e.kind, ErrorKind::UnbalancedParen);
        assert_eq!((e.offset, e.line, e.column), (6, 2, 3));

        let e = Expr::parse("x )").unwrap_err();
        assert_eq!((e.kind, e.offset), (ErrorKind::UnbalancedParen, 2));

        let e = Expr::parse("sin(x, y)").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Arity { func: "sin".into(), got: 2 });

        let e = Expr::parse("x $ y").unwrap_err();
        assert_eq!((e.kind, e.column), (ErrorKind::Lexical('$'), 3));

        let e = Expr::parse("foo(x)").unwrap_err();
        assert_eq!(e.kind, ErrorKind::UnknownIdentifier("foo".into()));

        assert_eq!(Expr::parse("  ").unwrap_err().kind, ErrorKind::Empty);
        assert!(matches!(Expr::parse("x +").unwrap_err().kind, ErrorKind::UnexpectedEnd { .. }));
        assert!(matches!(Expr::parse("x y").unwrap_err().kind, ErrorKind::Unexpected { .. }));
    }
}
