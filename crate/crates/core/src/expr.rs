//! Univariate real expressions over `x`.
//!
//! Expressions are parsed from strings such as `"x^2 - pi*cos(x)"`, evaluated
//! in IEEE double precision and differentiated symbolically. Exponents are
//! integer literals, so derivatives stay within the same node kinds and never
//! introduce logarithms.
//!
//! Precedence, from tightest to loosest: unary minus, `^`, `* /`, `+ -`.
//! Binary operators are left-associative. Note that `-x^2` therefore parses
//! as `(-x)^2`.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Elementary functions accepted by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sinh,
    Cosh,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "sinh" => Some(Func::Sinh),
            "cosh" => Some(Func::Cosh),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
        }
    }
}

/// Abstract syntax tree of a function of `x`.
///
/// Values are immutable once built. The smart constructors (`add`, `mul`, ...)
/// fold literal arithmetic and drop additive/multiplicative identities; no
/// other simplification is attempted.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unexpected {found}, expected {expected}")]
    UnexpectedToken { found: String, expected: &'static str },
    #[error("unexpected end of input, expected {0}")]
    UnexpectedEnd(&'static str),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("exponent must be an integer literal, found `{0}`")]
    NonIntegerExponent(String),
    #[error("malformed number `{0}`")]
    BadNumber(String),
}

/// Parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at position {position}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: f64 },
    #[error("zero raised to negative power {exponent} at x = {x}")]
    ZeroToNegativePower { x: f64, exponent: i32 },
}

impl EvalError {
    pub fn x(&self) -> f64 {
        match *self {
            EvalError::DivisionByZero { x } | EvalError::ZeroToNegativePower { x, .. } => x,
        }
    }
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr::Const(c)
    }

    pub fn var() -> Self {
        Expr::Var
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(0.0), _) => b,
            (_, Some(0.0)) => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (Some(0.0), _) => Expr::neg(b),
            (_, Some(0.0)) => a,
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(0.0), _) | (_, Some(0.0)) => Expr::Const(0.0),
            (Some(1.0), _) => b,
            (_, Some(1.0)) => a,
            (Some(-1.0), _) => Expr::neg(b),
            (_, Some(-1.0)) => Expr::neg(a),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            // a zero literal divisor is kept so evaluation reports it
            (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
            (_, Some(1.0)) => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(base: Expr, exponent: i32) -> Expr {
        match (base.as_const(), exponent) {
            (_, 0) => Expr::Const(1.0),
            (_, 1) => base,
            (Some(c), n) if !(c == 0.0 && n < 0) => Expr::Const(c.powi(n)),
            _ => Expr::Pow(Box::new(base), exponent),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        match arg.as_const() {
            Some(c) => Expr::Const(func.apply(c)),
            None => Expr::Call(func, Box::new(arg)),
        }
    }

    /// Evaluates the expression at `x`.
    ///
    /// Overflow is not an error: it propagates as an infinity.
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var => x,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => {
                let num = a.eval(x)?;
                let den = b.eval(x)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero { x });
                }
                num / den
            }
            Expr::Pow(base, n) => {
                let b = base.eval(x)?;
                if b == 0.0 && *n < 0 {
                    return Err(EvalError::ZeroToNegativePower { x, exponent: *n });
                }
                b.powi(*n)
            }
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Call(f, a) => f.apply(a.eval(x)?),
        })
    }

    /// First derivative with respect to `x`.
    pub fn derivative(&self) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var => Expr::Const(1.0),
            Expr::Add(a, b) => Expr::add(a.derivative(), b.derivative()),
            Expr::Sub(a, b) => Expr::sub(a.derivative(), b.derivative()),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.derivative(), (**b).clone()),
                Expr::mul((**a).clone(), b.derivative()),
            ),
            Expr::Div(a, b) => Expr::div(
                Expr::sub(
                    Expr::mul(a.derivative(), (**b).clone()),
                    Expr::mul((**a).clone(), b.derivative()),
                ),
                Expr::pow((**b).clone(), 2),
            ),
            Expr::Pow(base, n) => Expr::mul(
                Expr::mul(Expr::Const(f64::from(*n)), Expr::pow((**base).clone(), n - 1)),
                base.derivative(),
            ),
            Expr::Neg(a) => Expr::neg(a.derivative()),
            Expr::Call(f, a) => {
                let inner = a.derivative();
                let arg = (**a).clone();
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, arg),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, arg)),
                    Func::Exp => Expr::call(Func::Exp, arg),
                    Func::Sinh => Expr::call(Func::Cosh, arg),
                    Func::Cosh => Expr::call(Func::Sinh, arg),
                };
                Expr::mul(outer, inner)
            }
        }
    }

    /// Derivative of the given order; order 0 returns a copy.
    pub fn nth_derivative(&self, order: usize) -> Expr {
        let mut e = self.clone();
        for _ in 0..order {
            e = e.derivative();
        }
        e
    }

    /// The composition `x ↦ self(-x)`.
    pub fn reflect(&self) -> Expr {
        self.substitute_var(&Expr::neg(Expr::Var))
    }

    fn substitute_var(&self, replacement: &Expr) -> Expr {
        let sub = |e: &Expr| e.substitute_var(replacement);
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var => replacement.clone(),
            Expr::Add(a, b) => Expr::add(sub(a), sub(b)),
            Expr::Sub(a, b) => Expr::sub(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::div(sub(a), sub(b)),
            Expr::Pow(a, n) => Expr::pow(sub(a), *n),
            Expr::Neg(a) => Expr::neg(sub(a)),
            Expr::Call(f, a) => Expr::call(*f, sub(a)),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.size() + b.size()
            }
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Call(_, a) => 1 + a.size(),
        }
    }
}

/// Parses `source` into an expression.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0, end: source.len() };
    let expr = parser.expression()?;
    match parser.peek() {
        None => Ok(expr),
        Some(tok) => Err(ParseError {
            kind: ParseErrorKind::UnexpectedToken {
                found: tok.kind.describe(),
                expected: "operator or end of input",
            },
            position: tok.position,
        }),
    }
}

/// Symbolic derivative of the given order (at least one).
pub fn differentiate(e: &Expr, order: usize) -> Expr {
    e.nth_derivative(order)
}

pub fn evaluate(e: &Expr, x: f64) -> Result<f64, EvalError> {
    e.eval(x)
}

pub fn reflect(e: &Expr) -> Expr {
    e.reflect()
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// Fully parenthesised so that the output re-parses to the same tree shape.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var => f.write_str("x"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) => write!(f, "({a})^{n}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64, String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(_, text) => format!("number `{text}`"),
            TokenKind::Ident(name) => format!("identifier `{name}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    position: usize,
}

fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(TokenKind::Plus),
            b'-' => Some(TokenKind::Minus),
            b'*' => Some(TokenKind::Star),
            b'/' => Some(TokenKind::Slash),
            b'^' => Some(TokenKind::Caret),
            b'(' => Some(TokenKind::LParen),
            b')' => Some(TokenKind::RParen),
            _ => None,
        };
        if let Some(kind) = single {
            tokens.push(Token { kind, position: start });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // scientific notation: only when a digit follows the marker
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &source[start..i];
            let value: f64 = text.parse().map_err(|_| ParseError {
                kind: ParseErrorKind::BadNumber(text.to_string()),
                position: start,
            })?;
            tokens.push(Token { kind: TokenKind::Number(value, text.to_string()), position: start });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push(Token { kind: TokenKind::Ident(source[start..i].to_string()), position: start });
            continue;
        }
        let ch = source[start..].chars().next().unwrap_or('?');
        return Err(ParseError { kind: ParseErrorKind::UnexpectedChar(ch), position: start });
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        match self.peek() {
            Some(tok) => ParseError {
                kind: ParseErrorKind::UnexpectedToken { found: tok.kind.describe(), expected },
                position: tok.position,
            },
            None => ParseError { kind: ParseErrorKind::UnexpectedEnd(expected), position: self.end },
        }
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&TokenKind::Plus) {
                lhs = Expr::add(lhs, self.term()?);
            } else if self.eat(&TokenKind::Minus) {
                lhs = Expr::sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.power()?;
        loop {
            if self.eat(&TokenKind::Star) {
                lhs = Expr::mul(lhs, self.power()?);
            } else if self.eat(&TokenKind::Slash) {
                lhs = Expr::div(lhs, self.power()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.unary()?;
        while self.eat(&TokenKind::Caret) {
            let exponent = self.integer_exponent()?;
            base = Expr::pow(base, exponent);
        }
        Ok(base)
    }

    fn integer_exponent(&mut self) -> Result<i32, ParseError> {
        let negative = if self.eat(&TokenKind::Minus) {
            true
        } else {
            self.eat(&TokenKind::Plus);
            false
        };
        match self.next() {
            Some(Token { kind: TokenKind::Number(value, text), position }) => {
                if value.fract() != 0.0 || value.abs() > f64::from(i32::MAX) {
                    return Err(ParseError { kind: ParseErrorKind::NonIntegerExponent(text), position });
                }
                let n = value as i32;
                Ok(if negative { -n } else { n })
            }
            Some(tok) => Err(ParseError {
                kind: ParseErrorKind::NonIntegerExponent(match tok.kind {
                    TokenKind::Ident(name) => name,
                    other => other.describe(),
                }),
                position: tok.position,
            }),
            None => Err(ParseError {
                kind: ParseErrorKind::UnexpectedEnd("integer exponent"),
                position: self.end,
            }),
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&TokenKind::Minus) {
            return Ok(Expr::neg(self.unary()?));
        }
        if self.eat(&TokenKind::Plus) {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.unexpected("operand"));
        };
        match tok.kind {
            TokenKind::Number(value, _) => {
                self.pos += 1;
                Ok(Expr::Const(value))
            }
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.expression()?;
                if !self.eat(&TokenKind::RParen) {
                    return Err(self.unexpected("`)`"));
                }
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                self.pos += 1;
                match name.as_str() {
                    "x" => Ok(Expr::Var),
                    "pi" => Ok(Expr::Const(PI)),
                    _ => {
                        let func = Func::from_name(&name).ok_or(ParseError {
                            kind: ParseErrorKind::UnknownIdentifier(name.clone()),
                            position: tok.position,
                        })?;
                        if !self.eat(&TokenKind::LParen) {
                            return Err(self.unexpected("`(` after function name"));
                        }
                        let arg = self.expression()?;
                        if !self.eat(&TokenKind::RParen) {
                            return Err(self.unexpected("`)`"));
                        }
                        Ok(Expr::call(func, arg))
                    }
                }
            }
            _ => Err(self.unexpected("operand")),
        }
    }
}
