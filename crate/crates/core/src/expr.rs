//! A small arithmetic expression language in one variable `x`.
//!
//! Grammar, lowest to highest precedence:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' power)?
//! atom    := number | 'x' | 'pi' | 'euler_gamma'
//!          | func '(' expr ')' | '(' expr ')'
//! func    := 'ln' | 'exp' | 'sin' | 'cos' | 'sqrt'
//! ```
//!
//! Exponents bind tighter than unary minus, so `-x^2` is `-(x^2)` and
//! `2^-3` is rejected; write `2^(-3)`. There is no implicit
//! multiplication.

use std::fmt;

use thiserror::Error;

use crate::arith::Real;
use crate::error::{Error, Result};
use crate::oracles;

pub const FUNCTION_NAMES: [&str; 5] = ["ln", "exp", "sin", "cos", "sqrt"];
pub const CONSTANT_NAMES: [&str; 3] = ["x", "pi", "euler_gamma"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Ln,
    Exp,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "ln" => Func::Ln,
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Ln => "ln",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
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

/// Parsed expression tree. Numeric literals keep their source text and are
/// converted at evaluation precision.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(String),
    Var,
    Pi,
    EulerGamma,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Evaluates at `x`, converting every literal and constant to `bits`.
    pub fn evaluate(&self, x: &Real, bits: u32) -> Result<Real> {
        Ok(match self {
            Expr::Number(text) => Real::parse(text, bits)?,
            Expr::Var => x.with_precision(bits),
            Expr::Pi => Real::pi(bits),
            Expr::EulerGamma => oracles::euler_gamma(bits),
            Expr::Neg(inner) => -inner.evaluate(x, bits)?,
            Expr::Binary(op, lhs, rhs) => {
                let l = lhs.evaluate(x, bits)?;
                let r = rhs.evaluate(x, bits)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r.is_zero() {
                            return Err(self.domain_error("division by zero", x));
                        }
                        l / r
                    }
                    BinOp::Pow => {
                        let integral = r.nearest_integer().filter(|_| r.is_finite());
                        if l.is_zero() && r.signum() <= 0 {
                            return Err(self.domain_error("zero raised to a non-positive power", x));
                        }
                        if l.is_sign_negative() && integral.is_none() {
                            return Err(self.domain_error(
                                "negative base with non-integer exponent",
                                x,
                            ));
                        }
                        match integral {
                            Some(n) if l.is_sign_negative() => {
                                let n = i32::try_from(n).map_err(|_| {
                                    self.domain_error("integer exponent out of range", x)
                                })?;
                                l.powi(n)
                            }
                            _ => l.pow(&r),
                        }
                    }
                }
            }
            Expr::Call(func, arg) => {
                let v = arg.evaluate(x, bits)?;
                match func {
                    Func::Ln => {
                        if v.signum() <= 0 {
                            return Err(self.domain_error("logarithm of a non-positive value", x));
                        }
                        v.ln()
                    }
                    Func::Exp => v.exp(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Sqrt => {
                        if v.is_sign_negative() {
                            return Err(self.domain_error("square root of a negative value", x));
                        }
                        v.sqrt()
                    }
                }
            }
        })
    }

    fn domain_error(&self, what: &str, x: &Real) -> Error {
        Error::domain(format!("{what} in `{self}` at x = {x}"))
    }
}

/// Fully parenthesized rendering; `parse(e.to_string())` rebuilds `e`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(text) => f.write_str(text),
            Expr::Var => f.write_str("x"),
            Expr::Pi => f.write_str("pi"),
            Expr::EulerGamma => f.write_str("euler_gamma"),
            Expr::Neg(inner) => write!(f, "(-{inner})"),
            Expr::Binary(op, lhs, rhs) => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}; valid names are: {}", valid.join(", "))]
    UnknownIdentifier {
        offset: usize,
        name: String,
        valid: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq)]
enum TokenKind {
    Number(String),
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

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(n) => format!("number `{n}`"),
            TokenKind::Ident(i) => format!("identifier `{i}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::End => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(source: &str) -> std::result::Result<Vec<Token>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => TokenKind::Plus,
            b'-' => TokenKind::Minus,
            b'*' => TokenKind::Star,
            b'/' => TokenKind::Slash,
            b'^' => TokenKind::Caret,
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b'0'..=b'9' | b'.' => {
                let len = scan_number(&bytes[i..]).ok_or_else(|| ParseError::Syntax {
                    offset: start,
                    expected: vec!["number".into()],
                    found: format!("`{}`", char::from(c)),
                })?;
                i += len;
                tokens.push(Token {
                    kind: TokenKind::Number(source[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(source[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            _ => {
                let ch = source[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: vec!["number".into(), "identifier".into(), "operator".into()],
                    found: format!("`{ch}`"),
                });
            }
        };
        tokens.push(Token { kind, offset: start });
        i += 1;
    }
    tokens.push(Token {
        kind: TokenKind::End,
        offset: source.len(),
    });
    Ok(tokens)
}

/// Length of the decimal literal at the start of `bytes`:
/// `digits [. digits] [(e|E) [+|-] digits]` with at least one mantissa digit.
fn scan_number(bytes: &[u8]) -> Option<usize> {
    let mut i = 0;
    let mut mantissa_digits = 0;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
        mantissa_digits += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
            mantissa_digits += 1;
        }
    }
    if mantissa_digits == 0 {
        return None;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let digits_start = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j == digits_start {
            return None;
        }
        i = j;
    }
    Some(i)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let tok = self.peek();
        ParseError::Syntax {
            offset: tok.offset,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: tok.kind.describe(),
        }
    }

    fn expr(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> std::result::Result<Expr, ParseError> {
        if self.peek().kind == TokenKind::Minus {
            self.advance();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek().kind == TokenKind::Caret {
            self.advance();
            let exponent = self.power()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> std::result::Result<Expr, ParseError> {
        const ATOM: [&str; 4] = ["number", "identifier", "`(`", "function call"];
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Number(text) => {
                self.advance();
                Ok(Expr::Number(text))
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                self.advance();
                match name.as_str() {
                    "x" => Ok(Expr::Var),
                    "pi" => Ok(Expr::Pi),
                    "euler_gamma" => Ok(Expr::EulerGamma),
                    _ => match Func::from_name(&name) {
                        Some(func) => {
                            if self.peek().kind != TokenKind::LParen {
                                return Err(self.error(&["`(`"]));
                            }
                            self.advance();
                            let arg = self.expr()?;
                            self.expect_rparen()?;
                            Ok(Expr::Call(func, Box::new(arg)))
                        }
                        None => Err(ParseError::UnknownIdentifier {
                            offset: tok.offset,
                            name,
                            valid: CONSTANT_NAMES
                                .iter()
                                .chain(FUNCTION_NAMES.iter())
                                .map(|s| s.to_string())
                                .collect(),
                        }),
                    },
                }
            }
            _ => Err(self.error(&ATOM)),
        }
    }

    fn expect_rparen(&mut self) -> std::result::Result<(), ParseError> {
        if self.peek().kind == TokenKind::RParen {
            self.advance();
            Ok(())
        } else {
            Err(self.error(&["`)`", "operator"]))
        }
    }
}

/// Parses `source` into an expression tree.
pub fn parse(source: &str) -> std::result::Result<Expr, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    if parser.peek().kind == TokenKind::End {
        return Err(parser.error(&["expression"]));
    }
    let expr = parser.expr()?;
    if parser.peek().kind != TokenKind::End {
        return Err(parser.error(&["operator", "end of input"]));
    }
    Ok(expr)
}
