//! The multigraded algebra of iterated differential forms over a coordinate
//! chart.
//!
//! A form is a finite sum of monomials `c · d_{S1}x^{μ1} ⋯ d_{Sm}x^{μm}` with a
//! scalar coefficient `c`. Each generator `d_S x^μ` carries the multidegree
//! `(parity of x^μ; indicator of S)` in `Z2 ⊕ Z^k`, and two generators of
//! degrees `(p; a)` and `(q; b)` commute up to the Koszul sign
//! `(-1)^{pq + Σ a_i b_i}`.

mod derivation;
mod ops;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::expr::ScalarExpr;

pub use derivation::{BasisOp, FormDerivation};
pub use ops::FormContext;

/// Largest supported iteration depth.
pub const MAX_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormError {
    #[error("slot {slot} is outside the iteration depth 1..={depth}")]
    DepthOverflow { slot: usize, depth: usize },
    #[error("iteration depth {0} is outside 1..={MAX_DEPTH}")]
    BadDepth(usize),
    #[error("coordinate index {index} is out of range for a chart of dimension {dimension}")]
    CoordOutOfRange { index: usize, dimension: usize },
    #[error("kappa is defined on slots 1 and 2 only; found a generator using slot {slot}")]
    KappaOutsideDepthTwo { slot: usize },
    #[error("form is not homogeneous")]
    Inhomogeneous,
    #[error("the zero form has no degree")]
    ZeroForm,
    #[error("expected {expected} tensor components, got {got}")]
    ComponentCount { expected: usize, got: usize },
}

/// Element of `Z2 ⊕ Z^k`. Trailing zero degrees are trimmed so that degrees
/// of different declared lengths compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiDegree {
    pub parity: bool,
    degrees: Vec<i32>,
}

impl MultiDegree {
    pub fn new(parity: bool, mut degrees: Vec<i32>) -> Self {
        while degrees.last() == Some(&0) {
            degrees.pop();
        }
        MultiDegree { parity, degrees }
    }

    /// Degree in slot `slot` (1-based).
    pub fn degree(&self, slot: usize) -> i32 {
        slot.checked_sub(1).and_then(|i| self.degrees.get(i)).copied().unwrap_or(0)
    }

    pub fn degrees(&self) -> &[i32] {
        &self.degrees
    }

    /// Unit vector `e_slot` with the given parity.
    pub fn unit(parity: bool, slot: usize) -> Self {
        let mut d = vec![0; slot];
        d[slot - 1] = 1;
        MultiDegree::new(parity, d)
    }
}

impl std::ops::Add for &MultiDegree {
    type Output = MultiDegree;
    fn add(self, rhs: &MultiDegree) -> MultiDegree {
        let len = self.degrees.len().max(rhs.degrees.len());
        let d = (1..=len).map(|s| self.degree(s) + rhs.degree(s)).collect();
        MultiDegree::new(self.parity != rhs.parity, d)
    }
}

impl std::ops::Neg for &MultiDegree {
    type Output = MultiDegree;
    fn neg(self) -> MultiDegree {
        MultiDegree::new(self.parity, self.degrees.iter().map(|d| -d).collect())
    }
}

impl fmt::Display for MultiDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({};", u8::from(self.parity))?;
        for (i, d) in self.degrees.iter().enumerate() {
            write!(f, "{}{d}", if i == 0 { "" } else { "," })?;
        }
        f.write_str(")")
    }
}

/// Koszul sign `(-1)^{p_a p_b + Σ a_i b_i}` as `±1`.
pub fn koszul_sign(a: &MultiDegree, b: &MultiDegree) -> i32 {
    if koszul_odd(a, b) {
        -1
    } else {
        1
    }
}

fn koszul_odd(a: &MultiDegree, b: &MultiDegree) -> bool {
    let mut odd = a.parity && b.parity;
    for (x, y) in a.degrees.iter().zip(&b.degrees) {
        odd ^= (x * y) & 1 != 0;
    }
    odd
}

/// The generator `d_S x^μ`; `slots` is the bitmask of `S` (bit 0 is slot 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Generator {
    slots: u8,
    coord: usize,
    odd: bool,
}

impl Generator {
    pub(crate) fn new(slots: u8, coord: usize, odd: bool) -> Self {
        debug_assert!(slots != 0);
        Generator { slots, coord, odd }
    }

    pub fn coord(&self) -> usize {
        self.coord
    }

    pub fn slot_mask(&self) -> u8 {
        self.slots
    }

    /// Slots of `S` in increasing order, 1-based.
    pub fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..8).filter(move |b| self.slots & (1 << b) != 0).map(|b| b + 1)
    }

    pub fn contains_slot(&self, slot: usize) -> bool {
        (1..=MAX_DEPTH).contains(&slot) && self.slots & (1 << (slot - 1)) != 0
    }

    pub fn is_odd_coordinate(&self) -> bool {
        self.odd
    }

    pub fn degree(&self) -> MultiDegree {
        let top = 8 - self.slots.leading_zeros() as usize;
        let d = (0..top).map(|b| i32::from(self.slots >> b & 1)).collect();
        MultiDegree::new(self.odd, d)
    }

    /// Whether exchanging `self` and `other` costs a minus sign.
    fn swap_is_odd(&self, other: &Generator) -> bool {
        (self.odd && other.odd) ^ ((self.slots & other.slots).count_ones() % 2 == 1)
    }

    /// Whether a repeated copy of this generator annihilates the monomial.
    fn squares_to_zero(&self) -> bool {
        self.swap_is_odd(self)
    }

    fn write(&self, names: &[impl AsRef<str>], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in (0..8).rev() {
            if self.slots & (1 << b) != 0 {
                write!(f, "d{}", b + 1)?;
            }
        }
        match names.get(self.coord) {
            Some(n) => write!(f, "x^{}", n.as_ref()),
            None => write!(f, "x^{}", self.coord),
        }
    }
}

impl Ord for Generator {
    /// Order by `|S|`, then `S` lexicographically, then coordinate.
    fn cmp(&self, other: &Self) -> Ordering {
        self.slots
            .count_ones()
            .cmp(&other.slots.count_ones())
            .then_with(|| other.slots.reverse_bits().cmp(&self.slots.reverse_bits()))
            .then_with(|| self.coord.cmp(&other.coord))
            .then_with(|| self.odd.cmp(&other.odd))
    }
}

impl PartialOrd for Generator {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sorts a product of generators into normal order. Returns `None` when the
/// product vanishes and otherwise whether the reordering cost a minus sign.
pub(crate) fn normalize_monomial(gens: &mut [Generator]) -> Option<bool> {
    let mut negative = false;
    for i in 1..gens.len() {
        let mut j = i;
        while j > 0 && gens[j - 1] > gens[j] {
            negative ^= gens[j - 1].swap_is_odd(&gens[j]);
            gens.swap(j - 1, j);
            j -= 1;
        }
    }
    if gens.windows(2).any(|w| w[0] == w[1] && w[0].squares_to_zero()) {
        return None;
    }
    Some(negative)
}

/// Normal-form linear combination of monomials with scalar coefficients.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct IteratedForm {
    terms: BTreeMap<Vec<Generator>, ScalarExpr>,
}

impl IteratedForm {
    pub fn zero() -> Self {
        IteratedForm::default()
    }

    pub fn scalar(c: ScalarExpr) -> Self {
        let mut f = IteratedForm::zero();
        f.add_term(Vec::new(), c);
        f
    }

    pub fn one() -> Self {
        IteratedForm::scalar(ScalarExpr::one())
    }

    /// `c · g1 ⋯ gm`, with the generators in any order.
    pub fn monomial(c: ScalarExpr, gens: Vec<Generator>) -> Self {
        let mut f = IteratedForm::zero();
        f.add_term(gens, c);
        f
    }

    pub fn generator(g: Generator) -> Self {
        IteratedForm::monomial(ScalarExpr::one(), vec![g])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of monomials.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Monomials in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&[Generator], &ScalarExpr)> {
        self.terms.iter().map(|(g, c)| (g.as_slice(), c))
    }

    /// Adds `c · gens`, normalizing the generator order first.
    pub(crate) fn add_term(&mut self, mut gens: Vec<Generator>, c: ScalarExpr) {
        if c.is_zero() {
            return;
        }
        let Some(negative) = normalize_monomial(&mut gens) else {
            return;
        };
        let c = if negative { -c } else { c };
        self.add_normal_term(gens, c);
    }

    fn add_normal_term(&mut self, gens: Vec<Generator>, c: ScalarExpr) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(gens) {
            Entry::Vacant(v) => {
                if !c.is_zero() {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// Coefficient of the product `gens` (in any order), with the reordering
    /// sign applied so that `self` contains `coefficient · gens`.
    pub fn coefficient(&self, gens: &[Generator]) -> ScalarExpr {
        let mut key = gens.to_vec();
        let Some(negative) = normalize_monomial(&mut key) else {
            return ScalarExpr::zero();
        };
        match self.terms.get(&key) {
            Some(c) if negative => -c,
            Some(c) => c.clone(),
            None => ScalarExpr::zero(),
        }
    }

    /// Degree of a homogeneous nonzero form.
    pub fn degree(&self) -> Result<MultiDegree, FormError> {
        let mut it = self.terms.keys().map(|g| monomial_degree(g));
        let first = it.next().ok_or(FormError::ZeroForm)?;
        if it.all(|d| d == first) {
            Ok(first)
        } else {
            Err(FormError::Inhomogeneous)
        }
    }

    /// Multiplies every coefficient by the scalar `c`.
    pub fn scale(&self, c: &ScalarExpr) -> IteratedForm {
        let mut out = IteratedForm::zero();
        for (g, x) in &self.terms {
            out.add_normal_term(g.clone(), c * x);
        }
        out
    }

    /// Applies `f` to every coefficient.
    pub fn map_coefficients(&self, f: impl Fn(&ScalarExpr) -> ScalarExpr) -> IteratedForm {
        let mut out = IteratedForm::zero();
        for (g, x) in &self.terms {
            out.add_normal_term(g.clone(), f(x));
        }
        out
    }

    /// Expands every coefficient with [`ScalarExpr::expand`].
    pub fn expanded(&self) -> IteratedForm {
        self.map_coefficients(|c| c.expand())
    }

    /// Scalar part (coefficient of the empty monomial).
    pub fn scalar_part(&self) -> ScalarExpr {
        self.terms.get(&Vec::new()).cloned().unwrap_or_else(ScalarExpr::zero)
    }

    /// Highest slot used by any generator.
    pub fn max_slot(&self) -> usize {
        let mask = self.terms.keys().flatten().fold(0u8, |m, g| m | g.slots);
        8 - mask.leading_zeros() as usize
    }

    pub fn display<'a, S: AsRef<str>>(&'a self, names: &'a [S]) -> DisplayForm<'a, S> {
        DisplayForm { form: self, names }
    }
}

pub(crate) fn monomial_degree(gens: &[Generator]) -> MultiDegree {
    gens.iter().fold(MultiDegree::default(), |acc, g| &acc + &g.degree())
}

impl fmt::Debug for IteratedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: [&str; 0] = [];
        write!(f, "{}", self.display(&names))
    }
}

impl std::ops::Add<&IteratedForm> for &IteratedForm {
    type Output = IteratedForm;
    fn add(self, rhs: &IteratedForm) -> IteratedForm {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl std::ops::Add for IteratedForm {
    type Output = IteratedForm;
    fn add(mut self, rhs: IteratedForm) -> IteratedForm {
        self += &rhs;
        self
    }
}

impl std::ops::AddAssign<&IteratedForm> for IteratedForm {
    fn add_assign(&mut self, rhs: &IteratedForm) {
        for (g, c) in &rhs.terms {
            self.add_normal_term(g.clone(), c.clone());
        }
    }
}

impl std::ops::Neg for &IteratedForm {
    type Output = IteratedForm;
    fn neg(self) -> IteratedForm {
        self.map_coefficients(|c| -c)
    }
}

impl std::ops::Neg for IteratedForm {
    type Output = IteratedForm;
    fn neg(self) -> IteratedForm {
        -&self
    }
}

impl std::ops::Sub<&IteratedForm> for &IteratedForm {
    type Output = IteratedForm;
    fn sub(self, rhs: &IteratedForm) -> IteratedForm {
        self + &(-rhs)
    }
}

impl std::ops::Sub for IteratedForm {
    type Output = IteratedForm;
    fn sub(self, rhs: IteratedForm) -> IteratedForm {
        &self - &rhs
    }
}

impl std::ops::Mul<&IteratedForm> for &IteratedForm {
    type Output = IteratedForm;
    fn mul(self, rhs: &IteratedForm) -> IteratedForm {
        let mut out = IteratedForm::zero();
        for (ga, ca) in &self.terms {
            for (gb, cb) in &rhs.terms {
                let mut gens = Vec::with_capacity(ga.len() + gb.len());
                gens.extend_from_slice(ga);
                gens.extend_from_slice(gb);
                out.add_term(gens, ca * cb);
            }
        }
        out
    }
}

impl std::ops::Mul for IteratedForm {
    type Output = IteratedForm;
    fn mul(self, rhs: IteratedForm) -> IteratedForm {
        &self * &rhs
    }
}

impl std::iter::Sum for IteratedForm {
    fn sum<I: Iterator<Item = IteratedForm>>(iter: I) -> IteratedForm {
        iter.fold(IteratedForm::zero(), |acc, f| acc + f)
    }
}

/// Renders monomials as `coeff · d1x^mu d2x^nu d2d1x^rho`, one per line.
pub struct DisplayForm<'a, S> {
    form: &'a IteratedForm,
    names: &'a [S],
}

impl<S: AsRef<str>> fmt::Display for DisplayForm<'_, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.form.is_zero() {
            return f.write_str("0");
        }
        for (i, (gens, c)) in self.form.terms().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            let coeff = c.display(self.names).to_string();
            if gens.is_empty() {
                f.write_str(&coeff)?;
                continue;
            }
            if coeff.contains(' ') {
                write!(f, "({coeff}) ·")?;
            } else {
                write!(f, "{coeff} ·")?;
            }
            for g in gens {
                f.write_str(" ")?;
                g.write(self.names, f)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
