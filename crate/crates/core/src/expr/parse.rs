//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term { ("+"|"-") term } ;
//! term   := factor { ("*"|"/") factor } ;
//! factor := base [ "^" signed-integer ] ;
//! base   := number | ident | ident "(" expr ")" | "(" expr ")" | "-" factor ;
//! ```
//!
//! Parsing first produces a [`Syntax`] tree that preserves operand order, which
//! the Grassmann-valued lowering in the supergeometry module depends on.

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use super::{Func, ScalarExpr};

/// Nesting limit for parentheses, calls and unary minus.
const MAX_DEPTH: usize = 200;
/// Largest accepted magnitude of a decimal exponent in a number literal.
const MAX_DECIMAL_EXPONENT: i64 = 400;
/// Largest accepted magnitude of an integer power.
pub const MAX_EXPONENT: i64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. } | ParseError::UnknownIdentifier { position, .. } => *position,
        }
    }
}

/// Order-preserving parse tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Syntax {
    pub kind: SyntaxKind,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SyntaxKind {
    Number(BigRational),
    Ident(String),
    Call(String, Box<Syntax>),
    Neg(Box<Syntax>),
    /// Summands in source order; `true` marks a subtracted term.
    Sum(Vec<(bool, Syntax)>),
    /// Factors in source order; `true` marks a divisor.
    Product(Vec<(bool, Syntax)>),
    Pow(Box<Syntax>, i64),
}

/// Parses `text` and resolves identifiers against the coordinate `names`.
pub fn parse<S: AsRef<str>>(text: &str, names: &[S]) -> Result<ScalarExpr, ParseError> {
    let syntax = parse_syntax(text)?;
    lower(&syntax, names)
}

/// Parses `text` without resolving identifiers.
pub fn parse_syntax(text: &str) -> Result<Syntax, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, depth: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

fn lower<S: AsRef<str>>(s: &Syntax, names: &[S]) -> Result<ScalarExpr, ParseError> {
    Ok(match &s.kind {
        SyntaxKind::Number(v) => ScalarExpr::constant(v.clone()),
        SyntaxKind::Ident(name) => match names.iter().position(|n| n.as_ref() == name) {
            Some(i) => ScalarExpr::var(i),
            None => {
                return Err(ParseError::UnknownIdentifier { name: name.clone(), position: s.position })
            }
        },
        SyntaxKind::Call(name, arg) => match Func::from_name(name) {
            Some(f) => ScalarExpr::func(f, lower(arg, names)?),
            None => {
                return Err(ParseError::UnknownIdentifier { name: name.clone(), position: s.position })
            }
        },
        SyntaxKind::Neg(a) => -lower(a, names)?,
        SyntaxKind::Sum(terms) => {
            let mut out = Vec::with_capacity(terms.len());
            for (negate, t) in terms {
                let t = lower(t, names)?;
                out.push(if *negate { -t } else { t });
            }
            ScalarExpr::sum(out)
        }
        SyntaxKind::Product(factors) => {
            let mut out = Vec::with_capacity(factors.len());
            let mut negative = false;
            for (divide, mut f) in factors.iter().map(|(d, f)| (d, f)) {
                // A leading minus applies to the whole product.
                while let SyntaxKind::Neg(inner) = &f.kind {
                    negative = !negative;
                    f = inner;
                }
                let f = lower(f, names)?;
                out.push(if *divide { f.recip() } else { f });
            }
            let p = ScalarExpr::product(out);
            if negative {
                -p
            } else {
                p
            }
        }
        SyntaxKind::Pow(a, n) => ScalarExpr::pow(lower(a, names)?, *n),
    })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { position: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn node(kind: SyntaxKind, position: usize) -> Syntax {
        Syntax { kind, position }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("expression nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Syntax, ParseError> {
        let start = self.pos;
        let first = self.term()?;
        let mut terms = vec![(false, first)];
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    terms.push((false, self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    terms.push((true, self.term()?));
                }
                _ => break,
            }
        }
        if terms.len() == 1 {
            return Ok(terms.pop().unwrap().1);
        }
        Ok(Self::node(SyntaxKind::Sum(terms), start))
    }

    fn term(&mut self) -> Result<Syntax, ParseError> {
        let start = self.pos;
        let first = self.factor()?;
        let mut factors = vec![(false, first)];
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    factors.push((false, self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    factors.push((true, self.factor()?));
                }
                _ => break,
            }
        }
        if factors.len() == 1 {
            return Ok(factors.pop().unwrap().1);
        }
        Ok(Self::node(SyntaxKind::Product(factors), start))
    }

    fn factor(&mut self) -> Result<Syntax, ParseError> {
        self.enter()?;
        let base = self.base()?;
        let out = if self.peek() == Some(b'^') {
            let start = self.pos;
            self.pos += 1;
            let n = self.signed_integer()?;
            Self::node(SyntaxKind::Pow(Box::new(base), n), start)
        } else {
            base
        };
        self.depth -= 1;
        Ok(out)
    }

    fn signed_integer(&mut self) -> Result<i64, ParseError> {
        let negative = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                true
            }
            Some(b'+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected integer exponent"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let value: i64 = match digits.parse::<i64>() {
            Ok(v) if v <= MAX_EXPONENT => v,
            _ => {
                return Err(ParseError::Syntax {
                    position: start,
                    message: format!("exponent magnitude exceeds {MAX_EXPONENT}"),
                })
            }
        };
        Ok(if negative { -value } else { value })
    }

    fn base(&mut self) -> Result<Syntax, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'-') => {
                let start = self.pos;
                self.pos += 1;
                let inner = self.factor()?;
                Ok(Self::node(SyntaxKind::Neg(Box::new(inner)), start))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let id_start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[id_start..self.pos]).expect("ascii").to_string();
                if self.peek() == Some(b'(') {
                    self.pos += 1;
                    let arg = self.expr()?;
                    if self.peek() != Some(b')') {
                        return Err(self.error("expected `)`"));
                    }
                    self.pos += 1;
                    Ok(Self::node(SyntaxKind::Call(name, Box::new(arg)), id_start))
                } else {
                    Ok(Self::node(SyntaxKind::Ident(name), id_start))
                }
            }
            Some(c) => Err(self.error(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Syntax, ParseError> {
        let start = self.pos;
        let mut mantissa = String::new();
        let mut frac_digits: i64 = 0;
        let mut seen_dot = false;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_digit() {
                mantissa.push(c as char);
                if seen_dot {
                    frac_digits += 1;
                }
            } else if c == b'.' && !seen_dot {
                seen_dot = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if mantissa.is_empty() {
            return Err(ParseError::Syntax { position: start, message: "malformed number".into() });
        }
        let mut exponent: i64 = 0;
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            let negative = match self.src.get(self.pos) {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let exp_start = self.pos;
            while self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if exp_start == self.pos {
                self.pos = save;
                return Err(self.error("malformed exponent in number"));
            }
            let digits = std::str::from_utf8(&self.src[exp_start..self.pos]).expect("ascii");
            exponent = match digits.parse::<i64>() {
                Ok(v) if v <= MAX_DECIMAL_EXPONENT => v,
                _ => {
                    return Err(ParseError::Syntax {
                        position: exp_start,
                        message: "decimal exponent out of range".into(),
                    })
                }
            };
            if negative {
                exponent = -exponent;
            }
        }
        let digits: BigInt = mantissa.parse().expect("decimal digits");
        let shift = exponent - frac_digits;
        if mantissa.len() as i64 > 2 * MAX_DECIMAL_EXPONENT || shift.abs() > 2 * MAX_DECIMAL_EXPONENT {
            return Err(ParseError::Syntax { position: start, message: "number literal too long".into() });
        }
        let ten = BigInt::from(10);
        let scale = num_traits::pow(ten, shift.unsigned_abs() as usize);
        let value = if shift >= 0 {
            BigRational::from_integer(digits * scale)
        } else {
            BigRational::new(digits, scale)
        };
        Ok(Self::node(SyntaxKind::Number(value), start))
    }
}
