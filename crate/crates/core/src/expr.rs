//! Coefficient expressions.
//!
//! Grammar:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | atom
//! atom  := number | 'pi' | ident | func '(' expr ')' | '(' expr ')'
//! func  := 'sin' | 'cos' | 'exp' | 'abs'
//! ```
//!
//! An expression has at most one free variable: `y` for functions on the unit
//! torus (`c`, `g`, `a`) and `x` for exterior data (`phi`).

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variable {
    X,
    Y,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::X => "x",
            Variable::Y => "y",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => libm::sin(v),
            Func::Cos => libm::cos(v),
            Func::Exp => libm::exp(v),
            Func::Abs => libm::fabs(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Pi,
    Var,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, value: f64) -> Result<f64> {
        Ok(match self {
            Node::Num(v) => *v,
            Node::Pi => core::f64::consts::PI,
            Node::Var => value,
            Node::Neg(inner) => -inner.eval(value)?,
            Node::Call(f, arg) => f.apply(arg.eval(value)?),
            Node::Bin(op, lhs, rhs) => {
                let l = lhs.eval(value)?;
                let r = rhs.eval(value)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(Error::Domain("division by zero"));
                        }
                        l / r
                    }
                }
            }
        })
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, var: &str) -> fmt::Result {
        match self {
            // `{:?}` is the shortest representation that round-trips.
            Node::Num(v) => write!(f, "{v:?}"),
            Node::Pi => f.write_str("pi"),
            Node::Var => f.write_str(var),
            Node::Neg(inner) => {
                f.write_str("(-")?;
                inner.write(f, var)?;
                f.write_str(")")
            }
            Node::Call(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.write(f, var)?;
                f.write_str(")")
            }
            Node::Bin(op, lhs, rhs) => {
                f.write_str("(")?;
                lhs.write(f, var)?;
                f.write_str(match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => " * ",
                    BinOp::Div => " / ",
                })?;
                rhs.write(f, var)?;
                f.write_str(")")
            }
        }
    }
}

/// A parsed, immutable coefficient expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    var: Option<Variable>,
}

impl Expr {
    /// The free variable, if the expression mentions one.
    pub fn variable(&self) -> Option<Variable> {
        self.var
    }

    pub fn eval(&self, value: f64) -> Result<f64> {
        self.root.eval(value)
    }

    /// Evaluates at `offset + i * spacing` for `i in 0..n`.
    pub fn sample(&self, n: usize, offset: f64, spacing: f64) -> Result<Vec<f64>> {
        (0..n)
            .map(|i| self.eval(offset + i as f64 * spacing))
            .collect()
    }

    /// Samples on the torus grid `y_j = j / n`.
    pub fn sample_torus(&self, n: usize) -> Result<Vec<f64>> {
        self.sample(n, 0.0, 1.0 / n as f64)
    }

    /// True when the expression does not depend on its variable.
    pub fn is_constant(&self) -> bool {
        self.var.is_none()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let var = self.var.map_or("y", Variable::name);
        self.root.write(f, var)
    }
}

impl core::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        parse(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedToken,
    UnbalancedParen,
    UnknownIdentifier,
    EmptyInput,
}

/// First offending character position (in chars, not bytes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("{kind:?} at position {position}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

fn lex(input: &str) -> core::result::Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = input.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let start = i;
        let tok = match ch {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            c if c.is_ascii_digit() || c == '.' => {
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => {
                        out.push((start, Tok::Num(v)));
                        continue;
                    }
                    _ => {
                        return Err(ParseError {
                            position: start,
                            kind: ParseErrorKind::UnexpectedToken,
                        })
                    }
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(chars[start..i].iter().collect())));
                continue;
            }
            _ => {
                return Err(ParseError {
                    position: start,
                    kind: ParseErrorKind::UnexpectedToken,
                })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    depth: usize,
    var: Option<Variable>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn fail(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            position: self.here(),
            kind,
        }
    }

    /// Error for a missing operand or token: running off the end with an
    /// open parenthesis is reported as unbalanced.
    fn missing(&self) -> ParseError {
        if self.pos >= self.toks.len() && self.depth > 0 {
            self.fail(ParseErrorKind::UnbalancedParen)
        } else {
            self.fail(ParseErrorKind::UnexpectedToken)
        }
    }

    fn expr(&mut self) -> core::result::Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> core::result::Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> core::result::Result<Node, ParseError> {
        if let Some(Tok::Minus) = self.peek() {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn parenthesized(&mut self) -> core::result::Result<Node, ParseError> {
        // caller has consumed '('
        self.depth += 1;
        let inner = self.expr()?;
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                self.depth -= 1;
                Ok(inner)
            }
            None => Err(self.fail(ParseErrorKind::UnbalancedParen)),
            Some(_) => Err(self.fail(ParseErrorKind::UnexpectedToken)),
        }
    }

    fn atom(&mut self) -> core::result::Result<Node, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.missing());
        };
        let at = self.here();
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Tok::LParen => {
                self.pos += 1;
                self.parenthesized()
            }
            Tok::RParen => Err(self.fail(if self.depth == 0 {
                ParseErrorKind::UnbalancedParen
            } else {
                ParseErrorKind::UnexpectedToken
            })),
            Tok::Ident(name) => {
                self.pos += 1;
                if name == "pi" {
                    return Ok(Node::Pi);
                }
                let var = match name.as_str() {
                    "x" => Some(Variable::X),
                    "y" => Some(Variable::Y),
                    _ => None,
                };
                if let Some(var) = var {
                    return match self.var {
                        Some(existing) if existing != var => Err(ParseError {
                            position: at,
                            kind: ParseErrorKind::UnknownIdentifier,
                        }),
                        _ => {
                            self.var = Some(var);
                            Ok(Node::Var)
                        }
                    };
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ParseError {
                        position: at,
                        kind: ParseErrorKind::UnknownIdentifier,
                    });
                };
                match self.peek() {
                    Some(Tok::LParen) => {
                        self.pos += 1;
                        Ok(Node::Call(func, Box::new(self.parenthesized()?)))
                    }
                    None => Err(self.missing()),
                    Some(_) => Err(self.fail(ParseErrorKind::UnexpectedToken)),
                }
            }
            Tok::Plus | Tok::Minus | Tok::Star | Tok::Slash => {
                Err(self.fail(ParseErrorKind::UnexpectedToken))
            }
        }
    }
}

/// Parses an expression. Either `x` or `y` may appear, but not both.
pub fn parse(input: &str) -> core::result::Result<Expr, ParseError> {
    let toks = lex(input)?;
    if toks.is_empty() {
        return Err(ParseError {
            position: 0,
            kind: ParseErrorKind::EmptyInput,
        });
    }
    let mut parser = Parser {
        toks,
        pos: 0,
        end: input.chars().count(),
        depth: 0,
        var: None,
    };
    let root = parser.expr()?;
    if let Some(tok) = parser.peek() {
        let kind = if *tok == Tok::RParen {
            ParseErrorKind::UnbalancedParen
        } else {
            ParseErrorKind::UnexpectedToken
        };
        return Err(parser.fail(kind));
    }
    Ok(Expr {
        root,
        var: parser.var,
    })
}

/// Outcome of a sampled period-1 check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicityReport {
    pub samples: usize,
    pub tol: f64,
    /// `max_i |e(y_i) - e(y_i + 1)|`; infinite if evaluation failed.
    pub max_deviation: f64,
    pub pass: bool,
}

/// Checks `|e(y_i) - e(y_i + 1)| <= tol` at `samples` equispaced points of `[0, 1)`.
pub fn validate_periodic(e: &Expr, samples: usize, tol: f64) -> Result<PeriodicityReport> {
    if samples < 2 {
        return Err(Error::InvalidParameter(
            "periodicity check needs at least 2 samples".into(),
        ));
    }
    let mut max_deviation: f64 = 0.0;
    for i in 0..samples {
        let y = i as f64 / samples as f64;
        let dev = match (e.eval(y), e.eval(y + 1.0)) {
            (Ok(a), Ok(b)) => libm::fabs(a - b),
            _ => f64::INFINITY,
        };
        if !(dev <= max_deviation) {
            max_deviation = if dev.is_nan() { f64::INFINITY } else { dev };
        }
    }
    Ok(PeriodicityReport {
        samples,
        tol,
        max_deviation,
        pass: max_deviation <= tol,
    })
}
