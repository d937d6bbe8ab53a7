//! Z2-graded coordinate algebras: Grassmann-valued scalars over a chart with
//! even and odd coordinates, supermetrics and their Levi-Civita data.
//!
//! Odd coordinates are formal. A [`SuperScalar`] is a finite sum
//! `Σ_S c_S(x) θ^S` over increasing subsets `S` of the odd coordinates, with
//! coefficients [`ScalarExpr`] in the even coordinates only. Identities are
//! checked monomial by monomial with [`eq_randomized`] on the coefficients.

mod metric;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::connection::ConnectionError;
use crate::expr::{
    eq_randomized, parse_syntax, Func, ParseError, SamplingDomain, SamplingError, ScalarExpr, Syntax, SyntaxKind,
    Verdict,
};

pub use metric::{
    check_inverse, check_parities, super_christoffel, super_inverse_metric, super_riemann, SuperMetric, SuperTable,
};

/// Largest number of odd coordinates a chart may have.
pub const MAX_ODD: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SuperError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("at position {position}: {what} needs an argument without Grassmann part")]
    NotBody { position: usize, what: &'static str },
    #[error("chart error: {0}")]
    Chart(String),
    #[error("metric has {got} entries in a row or column, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("g[{row}][{col}] has a term of the wrong parity")]
    Parity { row: usize, col: usize },
    #[error("graded symmetry fails for g[{row}][{col}] at monomial {mask:#b}: {lhs} vs {rhs} at {witness:?}")]
    GradedSymmetry { row: usize, col: usize, mask: u32, witness: Vec<f64>, lhs: f64, rhs: f64 },
    #[error("body of the metric is not invertible: {0}")]
    Body(ConnectionError),
    #[error("division by a scalar whose body vanishes")]
    ZeroBody,
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("{what}: mismatch at {index:?}, monomial {mask:#b}: {lhs} vs {rhs} at {witness:?}")]
    Mismatch { what: String, index: Vec<usize>, mask: u32, witness: Vec<f64>, lhs: f64, rhs: f64 },
}

/// Sum of Grassmann monomials with even-coordinate coefficients. Bit `k` of
/// a key stands for the `k`-th odd coordinate; monomials are kept in
/// increasing order `θ^{k1} θ^{k2} ⋯` with `k1 < k2 < ⋯`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuperScalar {
    terms: BTreeMap<u32, ScalarExpr>,
}

/// Sign of `θ^A θ^B` relative to the sorted monomial `θ^{A ∪ B}`, or `None`
/// when the product vanishes.
fn reorder_sign(a: u32, b: u32) -> Option<bool> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> j).count_ones();
        rest &= rest - 1;
    }
    Some(swaps % 2 == 1)
}

impl SuperScalar {
    pub fn zero() -> Self {
        SuperScalar::default()
    }

    pub fn one() -> Self {
        SuperScalar::even(ScalarExpr::one())
    }

    /// Scalar without Grassmann part.
    pub fn even(c: ScalarExpr) -> Self {
        SuperScalar::monomial(0, c)
    }

    /// `c · θ^mask`.
    pub fn monomial(mask: u32, c: ScalarExpr) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(mask, c);
        }
        SuperScalar { terms }
    }

    /// The `k`-th odd coordinate.
    pub fn generator(k: usize) -> Self {
        SuperScalar::monomial(1 << k, ScalarExpr::one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &ScalarExpr)> {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    pub fn coefficient(&self, mask: u32) -> ScalarExpr {
        self.terms.get(&mask).cloned().unwrap_or_else(ScalarExpr::zero)
    }

    /// Grassmann-degree-zero part.
    pub fn body(&self) -> ScalarExpr {
        self.coefficient(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The common parity of all monomials, `None` for a mixed scalar and
    /// `Some(false)` for zero.
    pub fn parity(&self) -> Option<bool> {
        let mut it = self.terms.keys().map(|m| m.count_ones() % 2 == 1);
        let first = it.next().unwrap_or(false);
        it.all(|p| p == first).then_some(first)
    }

    /// Whether every monomial has parity `p`.
    pub fn has_parity(&self, p: bool) -> bool {
        self.terms.keys().all(|m| (m.count_ones() % 2 == 1) == p)
    }

    fn add_term(&mut self, mask: u32, c: ScalarExpr) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.remove(&mask) {
            Some(old) => old + c,
            None => c,
        };
        if !sum.is_zero() {
            self.terms.insert(mask, sum);
        }
    }

    pub fn map_coefficients(&self, f: impl Fn(&ScalarExpr) -> ScalarExpr) -> SuperScalar {
        let mut out = SuperScalar::zero();
        for (m, c) in &self.terms {
            out.add_term(*m, f(c));
        }
        out
    }

    /// Multiplies every coefficient by the even scalar `c`.
    pub fn scale(&self, c: &ScalarExpr) -> SuperScalar {
        self.map_coefficients(|x| x * c)
    }

    pub fn expanded(&self) -> SuperScalar {
        self.map_coefficients(ScalarExpr::expand)
    }

    /// Partial derivative in the `i`-th even coordinate.
    pub fn partial_even(&self, i: usize) -> SuperScalar {
        self.map_coefficients(|c| c.partial(i))
    }

    /// Left derivative in the `k`-th odd coordinate: `∂_θ` is moved past the
    /// odd factors standing in front of `θ^k`.
    pub fn partial_odd(&self, k: usize) -> SuperScalar {
        let bit = 1u32 << k;
        let mut out = SuperScalar::zero();
        for (m, c) in &self.terms {
            if m & bit == 0 {
                continue;
            }
            let before = (m & (bit - 1)).count_ones();
            out.add_term(m & !bit, if before % 2 == 1 { -c.clone() } else { c.clone() });
        }
        out
    }

    /// Inverse via `b⁻¹ = b0⁻¹ Σ_j (-ν b0⁻¹)^j` with `b = b0 + ν`, `ν`
    /// nilpotent.
    pub fn recip(&self) -> Result<SuperScalar, SuperError> {
        let b0 = self.body();
        if b0.is_zero() {
            return Err(SuperError::ZeroBody);
        }
        let inv0 = b0.recip();
        let mut nil = self.clone();
        nil.terms.remove(&0);
        let step = -&nil.scale(&inv0);
        let mut power = SuperScalar::one();
        let mut sum = SuperScalar::one();
        loop {
            power = &power * &step;
            if power.is_zero() {
                break;
            }
            sum = &sum + &power;
        }
        Ok(sum.scale(&inv0))
    }

    /// Integer power; negative exponents go through [`SuperScalar::recip`].
    pub fn pow(&self, n: i64) -> Result<SuperScalar, SuperError> {
        if n < 0 {
            return self.recip()?.pow(-n);
        }
        let b0 = self.body();
        let mut nil = self.clone();
        nil.terms.remove(&0);
        if nil.is_zero() {
            return Ok(SuperScalar::even(ScalarExpr::pow(b0, n)));
        }
        // (b0 + ν)^n = Σ_j C(n, j) b0^{n-j} ν^j, finite because ν is nilpotent.
        let mut out = SuperScalar::zero();
        let mut nu_j = SuperScalar::one();
        let mut binom = BigInt::from(1);
        for j in 0..=n {
            if nu_j.is_zero() {
                break;
            }
            let c = ScalarExpr::constant(BigRational::from_integer(binom.clone())) * ScalarExpr::pow(b0.clone(), n - j);
            out = &out + &nu_j.scale(&c);
            nu_j = &nu_j * &nil;
            binom = binom * BigInt::from(n - j) / BigInt::from(j + 1);
        }
        Ok(out)
    }

    pub fn display<'a>(&'a self, chart: &'a SuperChart) -> DisplaySuper<'a> {
        DisplaySuper { value: self, chart }
    }
}

/// Bilinear product with Grassmann reordering signs.
pub fn super_mul(a: &SuperScalar, b: &SuperScalar) -> SuperScalar {
    let mut out = SuperScalar::zero();
    for (ma, ca) in &a.terms {
        for (mb, cb) in &b.terms {
            if let Some(neg) = reorder_sign(*ma, *mb) {
                let p = ca * cb;
                out.add_term(ma | mb, if neg { -p } else { p });
            }
        }
    }
    out
}

/// Left partial derivative in chart coordinate `coord`.
pub fn super_partial(chart: &SuperChart, a: &SuperScalar, coord: usize) -> SuperScalar {
    match chart.slot(coord) {
        Slot::Even(i) => a.partial_even(i),
        Slot::Odd(k) => a.partial_odd(k),
    }
}

impl std::ops::Add for &SuperScalar {
    type Output = SuperScalar;
    fn add(self, rhs: &SuperScalar) -> SuperScalar {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, c.clone());
        }
        out
    }
}

impl std::ops::Sub for &SuperScalar {
    type Output = SuperScalar;
    fn sub(self, rhs: &SuperScalar) -> SuperScalar {
        self + &-rhs
    }
}

impl std::ops::Neg for &SuperScalar {
    type Output = SuperScalar;
    fn neg(self) -> SuperScalar {
        self.map_coefficients(|c| -c.clone())
    }
}

impl std::ops::Mul for &SuperScalar {
    type Output = SuperScalar;
    fn mul(self, rhs: &SuperScalar) -> SuperScalar {
        super_mul(self, rhs)
    }
}

impl std::iter::Sum for SuperScalar {
    fn sum<I: Iterator<Item = SuperScalar>>(iter: I) -> SuperScalar {
        iter.fold(SuperScalar::zero(), |acc, x| &acc + &x)
    }
}

/// Position of a chart coordinate among the even or the odd coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Even(usize),
    Odd(usize),
}

/// Coordinates with parities; the sampling domain covers the even ones, in
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperChart {
    names: Vec<String>,
    parities: Vec<bool>,
    slots: Vec<Slot>,
    even_names: Vec<String>,
    domain: SamplingDomain,
}

impl SuperChart {
    pub fn new(names: Vec<String>, parities: Vec<bool>, domain: SamplingDomain) -> Result<Self, SuperError> {
        if names.is_empty() {
            return Err(SuperError::Chart("a chart needs at least one coordinate".into()));
        }
        if parities.len() != names.len() {
            return Err(SuperError::Chart(format!("{} parities for {} coordinates", parities.len(), names.len())));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(SuperError::Chart(format!("duplicate coordinate name `{n}`")));
            }
            if Func::from_name(n).is_some() {
                return Err(SuperError::Chart(format!("coordinate name `{n}` is a function name")));
            }
        }
        let odd = parities.iter().filter(|p| **p).count();
        if odd > MAX_ODD {
            return Err(SuperError::Chart(format!("at most {MAX_ODD} odd coordinates are supported, got {odd}")));
        }
        let (mut e, mut o) = (0, 0);
        let mut slots = Vec::with_capacity(names.len());
        let mut even_names = Vec::new();
        for (name, &p) in names.iter().zip(&parities) {
            if p {
                slots.push(Slot::Odd(o));
                o += 1;
            } else {
                slots.push(Slot::Even(e));
                even_names.push(name.clone());
                e += 1;
            }
        }
        if domain.dimension() != e {
            return Err(SuperError::Chart(format!(
                "sampling domain has {} intervals for {e} even coordinates",
                domain.dimension()
            )));
        }
        Ok(SuperChart { names, parities, slots, even_names, domain })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn even_names(&self) -> &[String] {
        &self.even_names
    }

    pub fn parities(&self) -> &[bool] {
        &self.parities
    }

    pub fn dimension(&self) -> usize {
        self.names.len()
    }

    pub fn is_odd(&self, coord: usize) -> bool {
        self.parities[coord]
    }

    pub fn slot(&self, coord: usize) -> Slot {
        self.slots[coord]
    }

    pub fn domain(&self) -> &SamplingDomain {
        &self.domain
    }

    /// Parses a Grassmann-valued expression. Products keep their source
    /// order, so `th2*th1` is `-th1*th2`.
    pub fn parse(&self, text: &str) -> Result<SuperScalar, SuperError> {
        let syntax = parse_syntax(text)?;
        self.lower(&syntax)
    }

    fn lower(&self, s: &Syntax) -> Result<SuperScalar, SuperError> {
        let body_only = |v: SuperScalar, what: &'static str| -> Result<ScalarExpr, SuperError> {
            if v.terms.keys().any(|m| *m != 0) {
                return Err(SuperError::NotBody { position: s.position, what });
            }
            Ok(v.body())
        };
        Ok(match &s.kind {
            SyntaxKind::Number(v) => SuperScalar::even(ScalarExpr::constant(v.clone())),
            SyntaxKind::Ident(name) => match self.names.iter().position(|n| n == name) {
                Some(i) => match self.slots[i] {
                    Slot::Even(e) => SuperScalar::even(ScalarExpr::var(e)),
                    Slot::Odd(k) => SuperScalar::generator(k),
                },
                None => {
                    return Err(ParseError::UnknownIdentifier { name: name.clone(), position: s.position }.into());
                }
            },
            SyntaxKind::Call(name, arg) => match Func::from_name(name) {
                Some(f) => SuperScalar::even(ScalarExpr::func(f, body_only(self.lower(arg)?, "a function")?)),
                None => {
                    return Err(ParseError::UnknownIdentifier { name: name.clone(), position: s.position }.into());
                }
            },
            SyntaxKind::Neg(a) => -&self.lower(a)?,
            SyntaxKind::Sum(terms) => {
                let mut out = SuperScalar::zero();
                for (negate, t) in terms {
                    let t = self.lower(t)?;
                    out = if *negate { &out - &t } else { &out + &t };
                }
                out
            }
            SyntaxKind::Product(factors) => {
                let mut out = SuperScalar::one();
                for (divide, f) in factors {
                    let f = self.lower(f)?;
                    let f = if *divide { f.recip()? } else { f };
                    out = &out * &f;
                }
                out
            }
            SyntaxKind::Pow(a, n) => self.lower(a)?.pow(*n)?,
        })
    }
}

/// Printer returned by [`SuperScalar::display`].
pub struct DisplaySuper<'a> {
    value: &'a SuperScalar,
    chart: &'a SuperChart,
}

impl fmt::Display for DisplaySuper<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.value.is_zero() {
            return write!(f, "0");
        }
        let odd_names: Vec<&String> =
            self.chart.names.iter().zip(&self.chart.parities).filter(|(_, p)| **p).map(|(n, _)| n).collect();
        for (i, (mask, c)) in self.value.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let coeff = c.display(&self.chart.even_names).to_string();
            if *mask == 0 {
                write!(f, "{coeff}")?;
                continue;
            }
            if c.is_one() {
            } else if coeff.contains([' ', '+']) || coeff.starts_with('-') {
                write!(f, "({coeff})*")?;
            } else {
                write!(f, "{coeff}*")?;
            }
            let gens: Vec<&str> = (0..MAX_ODD).filter(|k| mask & (1 << k) != 0).map(|k| odd_names[k].as_str()).collect();
            write!(f, "{}", gens.join("*"))?;
        }
        Ok(())
    }
}

/// Compares two superscalars monomial by monomial.
pub fn super_eq(a: &SuperScalar, b: &SuperScalar, dom: &SamplingDomain) -> Result<Option<(u32, Verdict)>, SuperError> {
    let masks: std::collections::BTreeSet<u32> = a.terms.keys().chain(b.terms.keys()).copied().collect();
    for m in masks {
        let (x, y) = (a.coefficient(m), b.coefficient(m));
        if x == y {
            continue;
        }
        let v = eq_randomized(&x, &y, dom)?;
        if !v.is_equal() {
            return Ok(Some((m, v)));
        }
    }
    Ok(None)
}
