//! Expression front end over the stream operations.
//!
//! Grammar (whitespace-insensitive):
//!   expr := rational
//!         | "neg" "(" expr ")"            | "tdouble" "(" expr ")"
//!         | "mid" "(" expr "," expr ")"   | "mul" | "tadd" | "tsub" likewise
//!         | "cc" "(" expr "," expr "," expr ")"
//!         | "bigmid" "(" "[" expr { "," expr } ";" expr "]" ")"
//! Rational literals are "p/q" or "p" and must lie in [-1, 1]; arities are
//! checked while parsing. In bigmid the entries before ";" are the prefix
//! and the entry after it repeats forever.

use std::fmt;

use ival::exact::{parse_rational, Rational};
use ival::stream::{DigitStream, StreamSeq};
use num::{One, Signed};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Lit(Rational),
    Neg(Box<Expr>),
    TDouble(Box<Expr>),
    Mid(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    TAdd(Box<Expr>, Box<Expr>),
    TSub(Box<Expr>, Box<Expr>),
    Cc(Box<Expr>, Box<Expr>, Box<Expr>),
    BigMid(Vec<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExprError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at position {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ExprError {}

pub fn parse_expr(text: &str) -> Result<Expr, ExprError> {
    let mut p = Parser { chars: text.chars().collect(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if let Some(c) = p.peek() {
        return Err(p.error(format!("unexpected `{c}` after expression")));
    }
    Ok(e)
}

/// Builds the digit stream denoted by an expression.
pub fn build(e: &Expr) -> DigitStream {
    match e {
        Expr::Lit(r) => DigitStream::from_rational(r).expect("literals are range-checked"),
        Expr::Neg(a) => build(a).neg(),
        Expr::TDouble(a) => build(a).tdouble(),
        Expr::Mid(a, b) => build(a).mid(&build(b)),
        Expr::Mul(a, b) => build(a).mul(&build(b)),
        Expr::TAdd(a, b) => build(a).tadd(&build(b)),
        Expr::TSub(a, b) => build(a).tsub(&build(b)),
        Expr::Cc(l, a, b) => DigitStream::cc(&build(l), &build(a), &build(b)),
        Expr::BigMid(prefix, tail) => {
            let prefix: Vec<DigitStream> = prefix.iter().map(build).collect();
            DigitStream::bigmid(&StreamSeq::periodic(prefix, vec![build(tail)]))
        }
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn error(&self, message: String) -> ExprError {
        ExprError { position: self.pos, message }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        self.skip_ws();
        match self.peek() {
            Some(got) if got == c => {
                self.pos += 1;
                Ok(())
            }
            Some(got) => Err(self.error(format!("expected `{c}`, found `{got}`"))),
            None => Err(self.error(format!("expected `{c}`, found end of input"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() => self.call(),
            Some(c) if c == '-' || c.is_ascii_digit() => self.literal(),
            Some(c) => Err(self.error(format!("expected an expression, found `{c}`"))),
            None => Err(self.error("expected an expression, found end of input".to_string())),
        }
    }

    fn literal(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == '-' || c == '/' {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        let at = |message: String| ExprError { position: start, message };
        let r = parse_rational(&s).map_err(|e| at(e.to_string()))?;
        if r.abs() > Rational::one() {
            return Err(at(format!("literal {s} outside [-1, 1]")));
        }
        Ok(Expr::Lit(r))
    }

    fn name(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphabetic() {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        s
    }

    fn call(&mut self) -> Result<Expr, ExprError> {
        let at = self.pos;
        let name = self.name();
        self.expect('(')?;
        let expr = match name.as_str() {
            "neg" => Expr::Neg(Box::new(self.expr()?)),
            "tdouble" => Expr::TDouble(Box::new(self.expr()?)),
            "mid" | "mul" | "tadd" | "tsub" => {
                let a = Box::new(self.expr()?);
                self.expect(',')?;
                let b = Box::new(self.expr()?);
                match name.as_str() {
                    "mid" => Expr::Mid(a, b),
                    "mul" => Expr::Mul(a, b),
                    "tadd" => Expr::TAdd(a, b),
                    _ => Expr::TSub(a, b),
                }
            }
            "cc" => {
                let l = Box::new(self.expr()?);
                self.expect(',')?;
                let a = Box::new(self.expr()?);
                self.expect(',')?;
                let b = Box::new(self.expr()?);
                Expr::Cc(l, a, b)
            }
            "bigmid" => {
                self.expect('[')?;
                let mut entries = vec![self.expr()?];
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(',') => {
                            self.pos += 1;
                            entries.push(self.expr()?);
                        }
                        Some(';') => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.error("expected `,` or `;` in bigmid".to_string())),
                    }
                }
                let tail = Box::new(self.expr()?);
                self.expect(']')?;
                Expr::BigMid(entries, tail)
            }
            other => {
                return Err(ExprError {
                    position: at,
                    message: format!("unknown operation `{other}`"),
                })
            }
        };
        self.expect(')')?;
        Ok(expr)
    }
}
