//! Form-valued derivations `Σ C_i · B_i` with coefficient forms `C_i` and
//! basis operators `B_i`.

use super::{FormContext, FormError, IteratedForm, MultiDegree};

/// Basis derivations a [`FormDerivation`] is assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisOp {
    /// Coordinate partial `∂_μ` acting on coefficients.
    Partial(usize),
    /// Insertion `i^{(slot)}_{∂_coord}`.
    Insert { slot: usize, coord: usize },
    /// Insertion of an insertion, `i^{(2)}_{i_{∂_coord}}`.
    InsertInsertion { coord: usize },
}

impl BasisOp {
    pub fn degree(&self, ctx: &FormContext) -> MultiDegree {
        match *self {
            BasisOp::Partial(mu) => MultiDegree::new(ctx.is_odd(mu), Vec::new()),
            BasisOp::Insert { slot, coord } => -&MultiDegree::unit(ctx.is_odd(coord), slot),
            BasisOp::InsertInsertion { coord } => MultiDegree::new(ctx.is_odd(coord), vec![-1, -1]),
        }
    }

    pub fn apply(&self, ctx: &FormContext, f: &IteratedForm) -> Result<IteratedForm, FormError> {
        match *self {
            BasisOp::Partial(mu) => ctx.partial(mu, f),
            BasisOp::Insert { slot, coord } => ctx.insert_coordinate_field(slot, coord, f),
            BasisOp::InsertInsertion { coord } => ctx.insert_insertion(coord, f),
        }
    }
}

/// A finite sum of terms `C · B`; applying a term to `F` gives `C · B(F)`.
#[derive(Debug, Clone, Default)]
pub struct FormDerivation {
    terms: Vec<(IteratedForm, BasisOp)>,
}

impl FormDerivation {
    pub fn new() -> Self {
        FormDerivation::default()
    }

    pub fn push(&mut self, coefficient: IteratedForm, op: BasisOp) {
        if !coefficient.is_zero() {
            self.terms.push((coefficient, op));
        }
    }

    pub fn with(mut self, coefficient: IteratedForm, op: BasisOp) -> Self {
        self.push(coefficient, op);
        self
    }

    pub fn terms(&self) -> &[(IteratedForm, BasisOp)] {
        &self.terms
    }

    /// Degree of a homogeneous derivation.
    pub fn degree(&self, ctx: &FormContext) -> Result<MultiDegree, FormError> {
        let mut degrees = Vec::new();
        for (c, op) in &self.terms {
            degrees.push(&c.degree()? + &op.degree(ctx));
        }
        let first = degrees.pop().ok_or(FormError::ZeroForm)?;
        if degrees.iter().all(|d| *d == first) {
            Ok(first)
        } else {
            Err(FormError::Inhomogeneous)
        }
    }

    pub fn apply(&self, ctx: &FormContext, f: &IteratedForm) -> Result<IteratedForm, FormError> {
        let mut out = IteratedForm::zero();
        for (c, op) in &self.terms {
            let image = op.apply(ctx, f)?;
            if !image.is_zero() {
                out += &(c * &image);
            }
        }
        Ok(out)
    }
}
