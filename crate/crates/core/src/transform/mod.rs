//! A small arithmetic language for transformations `h(t1, ..., tp)`.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;
//! primary = number | variable | func "(" expr { "," expr } ")" | "(" expr ")" ;
//! variable = "t" digit { digit } ;            (* t1 .. tp *)
//! func    = "log" | "exp" | "min" | "max" ;   (* log is natural *)
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! `^` binds tighter than unary minus (`-t1^2` is `-(t1^2)`) and associates
//! to the right. There is no implicit multiplication.

mod lexer;
mod parser;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("variable '{name}' at byte {offset} is out of range for {arity} variable(s)")]
    VariableOutOfRange { offset: usize, name: String, arity: usize },
    #[error("function {func} at byte {offset} does not take {got} argument(s)")]
    Arity {
        offset: usize,
        func: &'static str,
        got: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("expected {expected} coordinate(s), got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("log of non-positive value {0}")]
    LogDomain(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("zero raised to negative power {0}")]
    ZeroToNegativePower(f64),
    #[error("non-finite result evaluating {0}")]
    NonFinite(String),
    #[error("non-finite input coordinate t{index}")]
    NonFiniteInput { index: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("row {row}: {source}")]
pub struct RowEvalError {
    pub row: usize,
    pub source: EvalError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Log,
    Exp,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "log" => Func::Log,
            "exp" => Func::Exp,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::Exp => "exp",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn accepts(self, n: usize) -> bool {
        match self {
            Func::Log | Func::Exp => n == 1,
            Func::Min | Func::Max => n >= 2,
        }
    }
}

/// Expression tree. Variables are stored 0-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// A parsed transformation together with its declared variable count.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformExpr {
    root: Expr,
    arity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalDomainReport {
    pub nonneg_on_data: bool,
    pub min_value_on_data: f64,
}

impl TransformExpr {
    pub fn parse(source: &str, arity: usize) -> Result<Self, ParseError> {
        Ok(Self {
            root: parser::parse_expr(source, arity)?,
            arity,
        })
    }

    /// The transformation `h = 0`.
    pub fn zero(arity: usize) -> Self {
        Self {
            root: Expr::Num(0.0),
            arity,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64, EvalError> {
        if point.len() != self.arity {
            return Err(EvalError::ArityMismatch {
                expected: self.arity,
                got: point.len(),
            });
        }
        if let Some(i) = point.iter().position(|v| !v.is_finite()) {
            return Err(EvalError::NonFiniteInput { index: i + 1 });
        }
        eval(&self.root, point)
    }

    /// Evaluates on every row and reports the minimum. Errors carry the
    /// offending row index.
    pub fn check_nonnegative_on<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<EvalDomainReport, RowEvalError> {
        let mut min = f64::INFINITY;
        for (row, values) in rows.iter().enumerate() {
            let v = self
                .evaluate(values.as_ref())
                .map_err(|source| RowEvalError { row, source })?;
            min = min.min(v);
        }
        Ok(EvalDomainReport {
            nonneg_on_data: min >= 0.0,
            min_value_on_data: min,
        })
    }
}

fn eval(e: &Expr, x: &[f64]) -> Result<f64, EvalError> {
    let v = match e {
        Expr::Num(v) => *v,
        Expr::Var(i) => x[*i],
        Expr::Neg(a) => -eval(a, x)?,
        Expr::Binary(op, a, b) => {
            let a = eval(a, x)?;
            let b = eval(b, x)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    a / b
                }
                BinOp::Pow => {
                    if a == 0.0 && b < 0.0 {
                        return Err(EvalError::ZeroToNegativePower(b));
                    }
                    // integral exponents keep exact products for small powers
                    if b.fract() == 0.0 && b.abs() <= 64.0 {
                        a.powi(b as i32)
                    } else {
                        a.powf(b)
                    }
                }
            }
        }
        Expr::Call(f, args) => match f {
            Func::Log => {
                let a = eval(&args[0], x)?;
                if a <= 0.0 {
                    return Err(EvalError::LogDomain(a));
                }
                a.ln()
            }
            Func::Exp => eval(&args[0], x)?.exp(),
            Func::Min | Func::Max => {
                let mut acc = eval(&args[0], x)?;
                for a in &args[1..] {
                    let v = eval(a, x)?;
                    acc = if *f == Func::Min { acc.min(v) } else { acc.max(v) };
                }
                acc
            }
        },
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite(Printer(e).to_string()))
    }
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Binary(BinOp::Pow, ..) => 4,
        Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
    }
}

struct Printer<'a>(&'a Expr);

impl Printer<'_> {
    fn child(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
        if paren {
            write!(f, "({})", Printer(e))
        } else {
            write!(f, "{}", Printer(e))
        }
    }
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "t{}", i + 1),
            Expr::Neg(a) => {
                f.write_str("-")?;
                Printer::child(f, a, precedence(a) < 3)
            }
            Expr::Binary(op, a, b) => {
                let p = precedence(self.0);
                let sym = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => " * ",
                    BinOp::Div => " / ",
                    BinOp::Pow => "^",
                };
                if *op == BinOp::Pow {
                    Printer::child(f, a, precedence(a) <= p)?;
                    f.write_str(sym)?;
                    Printer::child(f, b, precedence(b) < 3)
                } else {
                    Printer::child(f, a, precedence(a) < p)?;
                    f.write_str(sym)?;
                    Printer::child(f, b, precedence(b) <= p)
                }
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", Printer(a))?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for TransformExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Printer(&self.root).fmt(f)
    }
}
