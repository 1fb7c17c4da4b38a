//! Potential expressions: parsing, printing, evaluation and symbolic
//! differentiation.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' unsigned-int)?
//! base   := number | number 'i' | 'x' | func '(' expr ')' | '(' expr ')' | '-' base
//! func   := sin | cos | exp | sinh | cosh
//! ```
//!
//! There is no implicit multiplication, so `2x` is rejected while `2*x` is
//! accepted. Note that `-x^2` parses as `(-x)^2`, following the grammar.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sinh,
    Cosh,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }

    pub fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Exp => z.exp(),
            Func::Sinh => z.sinh(),
            Func::Cosh => z.cosh(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Complex64),
    X,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn real(v: f64) -> Expr {
        Expr::Num(Complex64::new(v, 0.0))
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            Expr::Num(c) => *c,
            Expr::X => Complex64::new(x, 0.0),
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, n) => powu(a.eval(x), *n),
            Expr::Call(f, a) => f.apply(a.eval(x)),
        }
    }

    pub fn as_constant(&self) -> Option<Complex64> {
        match self {
            Expr::Num(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(c) if c.re == 0.0 && c.im == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Num(c) if c.re == 1.0 && c.im == 0.0)
    }

    /// `order`-th derivative with respect to `x`.
    pub fn differentiate(&self, order: usize) -> Expr {
        let mut e = self.clone();
        for _ in 0..order {
            e = e.derivative();
        }
        e
    }

    fn derivative(&self) -> Expr {
        match self {
            Expr::Num(_) => Expr::real(0.0),
            Expr::X => Expr::real(1.0),
            Expr::Neg(a) => neg(a.derivative()),
            Expr::Add(a, b) => add(a.derivative(), b.derivative()),
            Expr::Sub(a, b) => sub(a.derivative(), b.derivative()),
            Expr::Mul(a, b) => add(
                mul(a.derivative(), (**b).clone()),
                mul((**a).clone(), b.derivative()),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.derivative(), (**b).clone()),
                    mul((**a).clone(), b.derivative()),
                ),
                pow((**b).clone(), 2),
            ),
            Expr::Pow(a, n) => match n {
                0 => Expr::real(0.0),
                _ => mul(
                    mul(Expr::real(*n as f64), pow((**a).clone(), n - 1)),
                    a.derivative(),
                ),
            },
            Expr::Call(f, a) => {
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Exp => call(Func::Exp, inner),
                    Func::Sinh => call(Func::Cosh, inner),
                    Func::Cosh => call(Func::Sinh, inner),
                };
                mul(outer, a.derivative())
            }
        }
    }
}

fn powu(z: Complex64, n: u32) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut base = z;
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            acc *= base;
        }
        base *= base;
        k >>= 1;
    }
    acc
}

// Constructors with the constant folding needed to keep repeated
// differentiation from blowing up.

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(c) => Expr::Num(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(p), Expr::Num(q)) => Expr::Num(p + q),
        _ if a.is_zero() => b,
        _ if b.is_zero() => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(p), Expr::Num(q)) => Expr::Num(p - q),
        _ if b.is_zero() => a,
        _ if a.is_zero() => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(p), Expr::Num(q)) => Expr::Num(p * q),
        _ if a.is_zero() || b.is_zero() => Expr::real(0.0),
        _ if a.is_one() => b,
        _ if b.is_one() => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(p), Expr::Num(q)) => Expr::Num(p / q),
        _ if a.is_zero() => Expr::real(0.0),
        _ if b.is_one() => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn pow(a: Expr, n: u32) -> Expr {
    match (&a, n) {
        (_, 0) => Expr::real(1.0),
        (_, 1) => a,
        (Expr::Num(c), _) => Expr::Num(powu(*c, n)),
        _ => Expr::Pow(Box::new(a), n),
    }
}

pub(crate) fn call(f: Func, a: Expr) -> Expr {
    match a {
        Expr::Num(c) => Expr::Num(f.apply(c)),
        other => Expr::Call(f, Box::new(other)),
    }
}

// Printing. Binary operators are always parenthesised, so printing followed
// by parsing reproduces the tree exactly.

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => write_num(f, *c),
            Expr::X => write!(f, "x"),
            Expr::Neg(a) => write!(f, "-{}", Base(a)),
            Expr::Add(a, b) => write!(f, "({} + {})", a, b),
            Expr::Sub(a, b) => write!(f, "({} - {})", a, b),
            Expr::Mul(a, b) => write!(f, "({} * {})", a, b),
            Expr::Div(a, b) => write!(f, "({} / {})", a, b),
            Expr::Pow(a, n) => write!(f, "{}^{}", Base(a), n),
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), a),
        }
    }
}

/// Wraps an operand that must print as a grammar `base`.
struct Base<'a>(&'a Expr);

impl fmt::Display for Base<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Expr::Pow(..) => write!(f, "({})", self.0),
            Expr::Num(c) if c.re < 0.0 || c.im < 0.0 || (c.re != 0.0 && c.im != 0.0) => {
                write!(f, "({})", self.0)
            }
            e => write!(f, "{}", e),
        }
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, c: Complex64) -> fmt::Result {
    let lit = |v: f64| -> String {
        let s = format!("{:?}", v.abs());
        if v < 0.0 {
            format!("-{}", s)
        } else {
            s
        }
    };
    if c.im == 0.0 {
        if c.re < 0.0 {
            write!(f, "({})", lit(c.re))
        } else {
            write!(f, "{}", lit(c.re))
        }
    } else if c.re == 0.0 {
        if c.im < 0.0 {
            write!(f, "(-{}i)", lit(-c.im))
        } else {
            write!(f, "{}i", lit(c.im))
        }
    } else {
        let im = if c.im < 0.0 {
            format!(" - {}i", lit(-c.im))
        } else {
            format!(" + {}i", lit(c.im))
        };
        write!(f, "({}{})", lit(c.re), im)
    }
}

// Parsing.

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Returns the token and its starting offset.
    fn next(&mut self) -> Result<(Tok, usize)> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("").to_string();
            return Ok((Tok::Ident(word), start));
        }
        Err(Error::Syntax {
            pos: start,
            expected: vec!["number".into(), "x".into(), "function".into(), "'('".into(), "'-'".into()],
        })
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize)> {
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(Error::Syntax { pos: start, expected: vec!["digit".into()] });
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // `2exp(x)` is not a number with an exponent; leave the `e`.
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        let v: f64 = text
            .parse()
            .map_err(|_| Error::Syntax { pos: start, expected: vec!["number".into()] })?;
        let imag = if self.src.get(self.pos) == Some(&b'i') {
            let after = self.src.get(self.pos + 1);
            if after.map_or(true, |b| !(b.is_ascii_alphanumeric() || *b == b'_')) {
                self.pos += 1;
                true
            } else {
                false
            }
        } else {
            false
        };
        Ok((Tok::Num(v, imag), start))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<()> {
        let (t, p) = self.lex.next()?;
        self.tok = t;
        self.at = p;
        Ok(())
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T> {
        Err(Error::Syntax { pos: self.at, expected: expected.iter().map(|s| s.to_string()).collect() })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Plus => {
                    self.bump()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.tok {
                Tok::Star => {
                    self.bump()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.tok != Tok::Caret {
            return Ok(base);
        }
        self.bump()?;
        match self.tok {
            Tok::Num(v, false) if v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64 => {
                let text = &self.lex.src[self.at..self.lex.pos];
                if text.iter().any(|b| !b.is_ascii_digit()) {
                    return self.fail(&["unsigned integer"]);
                }
                self.bump()?;
                Ok(Expr::Pow(Box::new(base), v as u32))
            }
            _ => self.fail(&["unsigned integer"]),
        }
    }

    fn base(&mut self) -> Result<Expr> {
        match self.tok.clone() {
            Tok::Num(v, imag) => {
                self.bump()?;
                Ok(Expr::Num(if imag { Complex64::new(0.0, v) } else { Complex64::new(v, 0.0) }))
            }
            Tok::Minus => {
                self.bump()?;
                Ok(Expr::Neg(Box::new(self.base()?)))
            }
            Tok::LParen => {
                self.bump()?;
                let e = self.expr()?;
                if self.tok != Tok::RParen {
                    return self.fail(&["')'", "operator"]);
                }
                self.bump()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let pos = self.at;
                if name == "x" {
                    self.bump()?;
                    return Ok(Expr::X);
                }
                let Some(f) = Func::from_name(&name) else {
                    return Err(Error::UnknownIdentifier { name, pos });
                };
                self.bump()?;
                if self.tok != Tok::LParen {
                    return self.fail(&["'('"]);
                }
                self.bump()?;
                let arg = self.expr()?;
                if self.tok != Tok::RParen {
                    return self.fail(&["')'", "operator"]);
                }
                self.bump()?;
                Ok(Expr::Call(f, Box::new(arg)))
            }
            _ => self.fail(&["number", "x", "function", "'('", "'-'"]),
        }
    }
}

/// Parses a single expression.
pub fn parse(source: &str) -> Result<Expr> {
    if source.trim().is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut p = Parser { lex: Lexer { src: source.as_bytes(), pos: 0 }, tok: Tok::End, at: 0 };
    p.bump()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return p.fail(&["operator", "end of input"]);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(src: &str, x: f64) -> Complex64 {
        parse(src).unwrap().eval(x)
    }

    #[test]
    fn evaluates_basic_forms() {
        assert_eq!(at("cos(x)", 0.0), Complex64::new(1.0, 0.0));
        assert_eq!(at("(1+1i)*x^2", 2.0), Complex64::new(4.0, 4.0));
        assert_eq!(at("2^10", 0.0), Complex64::new(1024.0, 0.0));
        assert!((at("1.5e-1*x", 2.0) - Complex64::new(0.3, 0.0)).norm() < 1e-15);
        assert_eq!(at("-x^2", 3.0), Complex64::new(9.0, 0.0));
        assert_eq!(at("-(x^2)", 3.0), Complex64::new(-9.0, 0.0));
    }

    #[test]
    fn reports_positions() {
        assert_eq!(parse("sin(").unwrap_err(), Error::Syntax {
            pos: 4,
            expected: vec!["number".into(), "x".into(), "function".into(), "'('".into(), "'-'".into()],
        });
        assert!(matches!(parse("tan(x)"), Err(Error::UnknownIdentifier { pos: 0, .. })));
        assert!(matches!(parse("2x"), Err(Error::Syntax { pos: 1, .. })));
        assert!(matches!(parse("x^2.5"), Err(Error::Syntax { pos: 2, .. })));
        assert_eq!(parse("  "), Err(Error::EmptyInput));
        assert!(matches!(parse("(x"), Err(Error::Syntax { pos: 2, .. })));
    }

    #[test]
    fn exponent_letter_is_not_swallowed() {
        assert!(matches!(parse("2exp(x)"), Err(Error::Syntax { pos: 1, .. })));
        assert_eq!(at("2*exp(0)", 1.0), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn derivatives() {
        let d = |s: &str, k: usize, x: f64| parse(s).unwrap().differentiate(k).eval(x);
        assert_eq!(d("x^2", 1, 3.0), Complex64::new(6.0, 0.0));
        assert!(d("sin(x)", 2, 0.0).norm() < 1e-15);
        assert!((d("exp((0+1i)*x)", 1, 0.0) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((d("1/x", 1, 2.0) - Complex64::new(-0.25, 0.0)).norm() < 1e-15);
        assert!((d("cosh(2*x)", 3, 0.5) - 8.0 * Complex64::new(1.0f64.sinh(), 0.0)).norm() < 1e-12);
        assert_eq!(parse("x").unwrap().differentiate(0), Expr::X);
    }

    #[test]
    fn printing_round_trips() {
        for s in ["-x^2", "x - (1 - x)", "sin(-1.5i*x)/(x+1)", "cosh(x)*1e-300", "-(-x)"] {
            let e = parse(s).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e, "{s}");
        }
    }
}
