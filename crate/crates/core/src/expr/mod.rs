//! Exact symbolic scalar expressions over chart coordinates.
//!
//! Every [`ScalarExpr`] is kept in a normal form by its constructors: sums and
//! products are flattened, constants are folded into a single leading rational,
//! like terms and like factors are merged, and a rational constant multiplying
//! a lone sum is distributed over it. Two expressions that are equal after this
//! light normalization compare equal structurally; anything deeper (trig
//! identities, rational-function cancellation) is decided numerically by
//! [`eq_randomized`].

mod diff;
mod eval;
mod parse;
mod sampling;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use eval::{DomainKind, EvalError};
pub use parse::{parse, parse_syntax, ParseError, Syntax, SyntaxKind, MAX_EXPONENT};
pub use sampling::{
    eq_randomized, sample_points, DomainSpecError, PointSampler, SamplingDomain, SamplingError,
    Verdict,
};

/// Elementary functions admitted by the expression grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

/// One node of an expression tree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Const(BigRational),
    Var(usize),
    Sum(Vec<ScalarExpr>),
    Product(Vec<ScalarExpr>),
    Pow(ScalarExpr, i64),
    Func(Func, ScalarExpr),
}

#[derive(Debug)]
struct Inner {
    node: Node,
    /// Bit `i` set when variable `i` occurs; bit 63 stands for every index >= 63.
    vars: u64,
}

/// Immutable, cheaply clonable symbolic scalar.
#[derive(Clone)]
pub struct ScalarExpr(Arc<Inner>);

fn var_bit(i: usize) -> u64 {
    1u64 << i.min(63)
}

impl ScalarExpr {
    fn raw(node: Node) -> ScalarExpr {
        let vars = match &node {
            Node::Const(_) => 0,
            Node::Var(i) => var_bit(*i),
            Node::Sum(xs) | Node::Product(xs) => xs.iter().fold(0, |m, x| m | x.0.vars),
            Node::Pow(b, _) => b.0.vars,
            Node::Func(_, a) => a.0.vars,
        };
        ScalarExpr(Arc::new(Inner { node, vars }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    /// Whether the expression may depend on coordinate `i` (conservative for i >= 63).
    pub fn may_depend_on(&self, i: usize) -> bool {
        self.0.vars & var_bit(i) != 0
    }

    pub fn constant(value: BigRational) -> ScalarExpr {
        ScalarExpr::raw(Node::Const(value))
    }

    pub fn int(value: i64) -> ScalarExpr {
        ScalarExpr::constant(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn rational(numer: i64, denom: i64) -> ScalarExpr {
        ScalarExpr::constant(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn zero() -> ScalarExpr {
        ScalarExpr::int(0)
    }

    pub fn one() -> ScalarExpr {
        ScalarExpr::int(1)
    }

    pub fn var(index: usize) -> ScalarExpr {
        ScalarExpr::raw(Node::Var(index))
    }

    pub fn as_const(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Structural zero test (the only zero test the algebra layer performs).
    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    /// Normalized sum.
    pub fn sum<I: IntoIterator<Item = ScalarExpr>>(terms: I) -> ScalarExpr {
        let mut constant = BigRational::zero();
        let mut groups: BTreeMap<ScalarExpr, BigRational> = BTreeMap::new();
        let mut stack: Vec<ScalarExpr> = terms.into_iter().collect();
        stack.reverse();
        while let Some(t) = stack.pop() {
            match t.node() {
                Node::Const(c) => constant += c,
                Node::Sum(ts) => stack.extend(ts.iter().rev().cloned()),
                _ => {
                    let (c, rest) = split_coefficient(&t);
                    *groups.entry(rest).or_insert_with(BigRational::zero) += c;
                }
            }
        }
        let mut out: Vec<ScalarExpr> = groups
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(rest, c)| scale_raw(rest, c))
            .collect();
        out.sort();
        if out.is_empty() {
            return ScalarExpr::constant(constant);
        }
        if constant.is_zero() && out.len() == 1 {
            return out.pop().unwrap();
        }
        if !constant.is_zero() {
            out.insert(0, ScalarExpr::constant(constant));
        }
        ScalarExpr::raw(Node::Sum(out))
    }

    /// Normalized product.
    pub fn product<I: IntoIterator<Item = ScalarExpr>>(factors: I) -> ScalarExpr {
        let mut coeff = BigRational::one();
        let mut powers: BTreeMap<ScalarExpr, i128> = BTreeMap::new();
        let mut stack: Vec<ScalarExpr> = factors.into_iter().collect();
        while let Some(f) = stack.pop() {
            match f.node() {
                Node::Const(c) => coeff *= c,
                Node::Product(fs) => stack.extend(fs.iter().cloned()),
                Node::Pow(b, n) => *powers.entry(b.clone()).or_insert(0) += *n as i128,
                _ => *powers.entry(f.clone()).or_insert(0) += 1,
            }
        }
        if coeff.is_zero() {
            return ScalarExpr::zero();
        }
        let mut out = Vec::with_capacity(powers.len());
        for (base, e) in powers {
            if e == 0 {
                continue;
            }
            let e = i64::try_from(e).unwrap_or(if e > 0 { i64::MAX } else { i64::MIN });
            let p = ScalarExpr::pow(base, e);
            match p.node() {
                Node::Const(c) => coeff *= c,
                Node::Product(fs) => {
                    for f in fs {
                        match f.node() {
                            Node::Const(c) => coeff *= c,
                            _ => out.push(f.clone()),
                        }
                    }
                }
                _ => out.push(p),
            }
        }
        if coeff.is_zero() {
            return ScalarExpr::zero();
        }
        out.sort();
        if out.is_empty() {
            return ScalarExpr::constant(coeff);
        }
        if out.len() == 1 {
            if coeff.is_one() {
                return out.pop().unwrap();
            }
            if let Node::Sum(ts) = out[0].node() {
                let ts = ts.clone();
                return ScalarExpr::sum(
                    ts.into_iter()
                        .map(|t| ScalarExpr::product([ScalarExpr::constant(coeff.clone()), t])),
                );
            }
        }
        if !coeff.is_one() {
            out.insert(0, ScalarExpr::constant(coeff));
        }
        ScalarExpr::raw(Node::Product(out))
    }

    /// Normalized integer power.
    pub fn pow(base: ScalarExpr, n: i64) -> ScalarExpr {
        if n == 0 {
            return ScalarExpr::one();
        }
        if n == 1 {
            return base;
        }
        match base.node() {
            Node::Const(c) => {
                if c.is_zero() {
                    if n > 0 {
                        return ScalarExpr::zero();
                    }
                    return ScalarExpr::raw(Node::Pow(base, n));
                }
                match fold_power(c, n) {
                    Some(v) => ScalarExpr::constant(v),
                    None => ScalarExpr::raw(Node::Pow(base, n)),
                }
            }
            Node::Pow(b, m) => match m.checked_mul(n) {
                Some(mn) => ScalarExpr::pow(b.clone(), mn),
                None => ScalarExpr::raw(Node::Pow(base, n)),
            },
            Node::Product(fs) => {
                let fs = fs.clone();
                ScalarExpr::product(fs.into_iter().map(|f| ScalarExpr::pow(f, n)))
            }
            _ => ScalarExpr::raw(Node::Pow(base, n)),
        }
    }

    pub fn func(f: Func, arg: ScalarExpr) -> ScalarExpr {
        if let Some(c) = arg.as_const() {
            let zero = c.is_zero();
            let one = c.is_one();
            match f {
                Func::Sin | Func::Tan | Func::Sinh | Func::Sqrt if zero => return ScalarExpr::zero(),
                Func::Cos | Func::Cosh | Func::Exp if zero => return ScalarExpr::one(),
                Func::Log if one => return ScalarExpr::zero(),
                Func::Sqrt if one => return ScalarExpr::one(),
                _ => {}
            }
        }
        ScalarExpr::raw(Node::Func(f, arg))
    }

    pub fn sin(self) -> ScalarExpr {
        ScalarExpr::func(Func::Sin, self)
    }

    pub fn cos(self) -> ScalarExpr {
        ScalarExpr::func(Func::Cos, self)
    }

    pub fn powi(&self, n: i64) -> ScalarExpr {
        ScalarExpr::pow(self.clone(), n)
    }

    pub fn recip(&self) -> ScalarExpr {
        ScalarExpr::pow(self.clone(), -1)
    }

    pub fn scale(&self, c: &BigRational) -> ScalarExpr {
        ScalarExpr::product([ScalarExpr::constant(c.clone()), self.clone()])
    }

    /// Rebuilds the tree bottom-up through the normalizing constructors.
    pub fn normalize(&self) -> ScalarExpr {
        match self.node() {
            Node::Const(_) | Node::Var(_) => self.clone(),
            Node::Sum(ts) => ScalarExpr::sum(ts.iter().map(|t| t.normalize())),
            Node::Product(fs) => ScalarExpr::product(fs.iter().map(|f| f.normalize())),
            Node::Pow(b, n) => ScalarExpr::pow(b.normalize(), *n),
            Node::Func(f, a) => ScalarExpr::func(*f, a.normalize()),
        }
    }

    /// Multiplies out products of sums and positive powers of sums (up to
    /// exponent [`MAX_EXPAND_POWER`]), recursively, including inside function
    /// arguments. Polynomial identities in the atoms become structural
    /// equalities after expansion.
    pub fn expand(&self) -> ScalarExpr {
        match self.node() {
            Node::Const(_) | Node::Var(_) => self.clone(),
            Node::Sum(ts) => ScalarExpr::sum(ts.iter().map(|t| t.expand())),
            Node::Product(fs) => {
                let mut acc = vec![ScalarExpr::one()];
                for f in fs {
                    acc = multiply_out(&acc, &summands(&f.expand()));
                }
                ScalarExpr::sum(acc)
            }
            Node::Pow(b, n) => {
                let b = b.expand();
                match b.node() {
                    Node::Sum(ts) if (2..=MAX_EXPAND_POWER).contains(n) => {
                        let mut acc = vec![ScalarExpr::one()];
                        for _ in 0..*n {
                            acc = multiply_out(&acc, ts);
                        }
                        ScalarExpr::sum(acc)
                    }
                    _ => ScalarExpr::pow(b, *n),
                }
            }
            Node::Func(f, a) => ScalarExpr::func(*f, a.expand()),
        }
    }

    /// Number of nodes, counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Sum(xs) | Node::Product(xs) => 1 + xs.iter().map(|x| x.size()).sum::<usize>(),
            Node::Pow(b, _) => 1 + b.size(),
            Node::Func(_, a) => 1 + a.size(),
        }
    }

    /// Renders with the given coordinate names.
    pub fn display<'a, S: AsRef<str>>(&'a self, names: &'a [S]) -> DisplayExpr<'a, S> {
        DisplayExpr { expr: self, names }
    }
}

/// Largest power of a sum that [`ScalarExpr::expand`] multiplies out.
pub const MAX_EXPAND_POWER: i64 = 8;

fn summands(e: &ScalarExpr) -> Vec<ScalarExpr> {
    match e.node() {
        Node::Sum(ts) => ts.clone(),
        _ => vec![e.clone()],
    }
}

fn multiply_out(a: &[ScalarExpr], b: &[ScalarExpr]) -> Vec<ScalarExpr> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(ScalarExpr::product([x.clone(), y.clone()]));
        }
    }
    out
}

/// Splits `c * rest` with `c` the leading rational of a product.
fn split_coefficient(t: &ScalarExpr) -> (BigRational, ScalarExpr) {
    if let Node::Product(fs) = t.node() {
        if let Node::Const(c) = fs[0].node() {
            let rest = if fs.len() == 2 {
                fs[1].clone()
            } else {
                ScalarExpr::raw(Node::Product(fs[1..].to_vec()))
            };
            return (c.clone(), rest);
        }
    }
    (BigRational::one(), t.clone())
}

/// `c * rest` for an already normal `rest` that is not a constant or a sum.
fn scale_raw(rest: ScalarExpr, c: BigRational) -> ScalarExpr {
    if c.is_one() {
        return rest;
    }
    let mut fs = vec![ScalarExpr::constant(c)];
    match rest.node() {
        Node::Product(inner) => fs.extend(inner.iter().cloned()),
        _ => fs.push(rest),
    }
    ScalarExpr::raw(Node::Product(fs))
}

/// Folds `c^n` when the result stays small enough to be worth carrying exactly.
fn fold_power(c: &BigRational, n: i64) -> Option<BigRational> {
    const MAX_BITS: u64 = 4096;
    let bits = c.numer().bits().max(c.denom().bits()).max(1);
    let mag = n.unsigned_abs();
    if bits.checked_mul(mag)? > MAX_BITS {
        return None;
    }
    let e = u32::try_from(mag).ok()?;
    let numer = num_traits::pow(c.numer().clone(), e as usize);
    let denom = num_traits::pow(c.denom().clone(), e as usize);
    let v = BigRational::new(numer, denom);
    Some(if n < 0 { v.recip() } else { v })
}

impl PartialEq for ScalarExpr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.node == other.0.node
    }
}

impl Eq for ScalarExpr {}

impl PartialOrd for ScalarExpr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ScalarExpr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.node.cmp(&other.0.node)
    }
}

impl Hash for ScalarExpr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.node.hash(state)
    }
}

impl fmt::Debug for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..64).map(|i| format!("x{i}")).collect();
        write_signed(self, &names, f)
    }
}

impl From<i64> for ScalarExpr {
    fn from(v: i64) -> Self {
        ScalarExpr::int(v)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl std::ops::$tr<ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $m(self, rhs: ScalarExpr) -> ScalarExpr {
                let f: fn(ScalarExpr, ScalarExpr) -> ScalarExpr = $body;
                f(self, rhs)
            }
        }
        impl std::ops::$tr<&ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $m(self, rhs: &ScalarExpr) -> ScalarExpr {
                let f: fn(ScalarExpr, ScalarExpr) -> ScalarExpr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$tr<ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $m(self, rhs: ScalarExpr) -> ScalarExpr {
                let f: fn(ScalarExpr, ScalarExpr) -> ScalarExpr = $body;
                f(self.clone(), rhs)
            }
        }
        impl std::ops::$tr<&ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $m(self, rhs: &ScalarExpr) -> ScalarExpr {
                let f: fn(ScalarExpr, ScalarExpr) -> ScalarExpr = $body;
                f(self, rhs.clone())
            }
        }
    };
}

binop!(Add, add, |a, b| ScalarExpr::sum([a, b]));
binop!(Sub, sub, |a, b| ScalarExpr::sum([a, -b]));
binop!(Mul, mul, |a, b| ScalarExpr::product([a, b]));
binop!(Div, div, |a, b| ScalarExpr::product([a, ScalarExpr::pow(b, -1)]));

impl std::ops::Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::product([ScalarExpr::int(-1), self])
    }
}

impl std::ops::Neg for &ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        -(self.clone())
    }
}

impl std::iter::Sum for ScalarExpr {
    fn sum<I: Iterator<Item = ScalarExpr>>(iter: I) -> ScalarExpr {
        ScalarExpr::sum(iter)
    }
}

impl std::iter::Product for ScalarExpr {
    fn product<I: Iterator<Item = ScalarExpr>>(iter: I) -> ScalarExpr {
        ScalarExpr::product(iter)
    }
}

/// Display adapter carrying coordinate names.
pub struct DisplayExpr<'a, S> {
    expr: &'a ScalarExpr,
    names: &'a [S],
}

impl<S: AsRef<str>> fmt::Display for DisplayExpr<'_, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_signed(self.expr, self.names, f)
    }
}

/// Separates a leading minus sign so that sums print as `a - b`.
fn negated_part(e: &ScalarExpr) -> Option<ScalarExpr> {
    match e.node() {
        Node::Const(c) if c.is_negative() => Some(ScalarExpr::constant(-c)),
        Node::Product(fs) => match fs[0].node() {
            Node::Const(c) if c.is_negative() => {
                let c = -c;
                let mut rest: Vec<ScalarExpr> = Vec::with_capacity(fs.len());
                if !c.is_one() {
                    rest.push(ScalarExpr::constant(c));
                }
                rest.extend(fs[1..].iter().cloned());
                Some(if rest.len() == 1 {
                    rest.pop().unwrap()
                } else {
                    ScalarExpr::raw(Node::Product(rest))
                })
            }
            _ => None,
        },
        _ => None,
    }
}

fn write_signed<S: AsRef<str>>(e: &ScalarExpr, names: &[S], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.node() {
        Node::Sum(ts) => {
            for (i, t) in ts.iter().enumerate() {
                match negated_part(t) {
                    Some(abs) => {
                        f.write_str(if i == 0 { "-" } else { " - " })?;
                        write_term(&abs, names, f)?;
                    }
                    None => {
                        if i > 0 {
                            f.write_str(" + ")?;
                        }
                        write_term(t, names, f)?;
                    }
                }
            }
            Ok(())
        }
        _ => match negated_part(e) {
            Some(abs) => {
                f.write_str("-")?;
                write_term(&abs, names, f)
            }
            None => write_term(e, names, f),
        },
    }
}

/// A summand: products, powers and atoms print without parentheses.
fn write_term<S: AsRef<str>>(e: &ScalarExpr, names: &[S], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.node() {
        Node::Const(c) => write!(f, "{c}"),
        Node::Product(fs) => {
            for (i, x) in fs.iter().enumerate() {
                if i > 0 {
                    f.write_str("*")?;
                }
                write_factor(x, names, f)?;
            }
            Ok(())
        }
        Node::Sum(_) => {
            f.write_str("(")?;
            write_signed(e, names, f)?;
            f.write_str(")")
        }
        _ => write_factor(e, names, f),
    }
}

fn write_factor<S: AsRef<str>>(e: &ScalarExpr, names: &[S], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.node() {
        Node::Const(c) if c.is_integer() && !c.is_negative() => write!(f, "{c}"),
        Node::Var(_) | Node::Func(..) => write_atom(e, names, f),
        Node::Pow(b, n) => {
            write_atom(b, names, f)?;
            write!(f, "^{n}")
        }
        _ => {
            f.write_str("(")?;
            write_signed(e, names, f)?;
            f.write_str(")")
        }
    }
}

fn write_atom<S: AsRef<str>>(e: &ScalarExpr, names: &[S], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.node() {
        Node::Var(i) => match names.get(*i) {
            Some(n) => f.write_str(n.as_ref()),
            None => write!(f, "x{i}"),
        },
        Node::Func(func, a) => {
            write!(f, "{}(", func.name())?;
            write_signed(a, names, f)?;
            f.write_str(")")
        }
        Node::Const(c) if c.is_integer() && !c.is_negative() => write!(f, "{c}"),
        _ => {
            f.write_str("(")?;
            write_signed(e, names, f)?;
            f.write_str(")")
        }
    }
}

/// Converts a rational to the nearest double.
pub fn rational_to_f64(c: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (c.numer().to_f64(), c.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Scale down very large numerators and denominators together.
    let shift = c.numer().bits().max(c.denom().bits()).saturating_sub(900);
    let n = (c.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (c.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}
