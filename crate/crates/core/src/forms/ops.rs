//! Operators on iterated forms: differentials, the slot involution, insertions
//! and Lie derivatives.

use crate::expr::ScalarExpr;

use super::{FormError, Generator, IteratedForm, MultiDegree, MAX_DEPTH};

/// Chart data the operators need: coordinate count, coordinate parities and
/// the iteration depth cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormContext {
    parities: Vec<bool>,
    depth: usize,
}

impl FormContext {
    pub const DEFAULT_DEPTH: usize = 3;

    /// Classical chart of dimension `n` with the default depth cap.
    pub fn new(n: usize) -> Self {
        FormContext { parities: vec![false; n], depth: Self::DEFAULT_DEPTH }
    }

    /// Chart with the given coordinate parities (`true` for odd).
    pub fn with_parities(parities: Vec<bool>) -> Self {
        FormContext { parities, depth: Self::DEFAULT_DEPTH }
    }

    pub fn with_depth(mut self, depth: usize) -> Result<Self, FormError> {
        if !(1..=MAX_DEPTH).contains(&depth) {
            return Err(FormError::BadDepth(depth));
        }
        self.depth = depth;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.parities.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_odd(&self, coord: usize) -> bool {
        self.parities.get(coord).copied().unwrap_or(false)
    }

    fn check_slot(&self, slot: usize) -> Result<(), FormError> {
        if slot == 0 || slot > self.depth {
            return Err(FormError::DepthOverflow { slot, depth: self.depth });
        }
        Ok(())
    }

    fn check_coord(&self, coord: usize) -> Result<(), FormError> {
        if coord >= self.dimension() {
            return Err(FormError::CoordOutOfRange { index: coord, dimension: self.dimension() });
        }
        Ok(())
    }

    /// The generator `d_S x^coord` for a nonempty slot set `S`.
    pub fn generator(&self, slots: &[usize], coord: usize) -> Result<Generator, FormError> {
        self.check_coord(coord)?;
        let mut mask = 0u8;
        for &s in slots {
            self.check_slot(s)?;
            mask |= 1 << (s - 1);
        }
        if mask == 0 {
            return Err(FormError::DepthOverflow { slot: 0, depth: self.depth });
        }
        Ok(Generator::new(mask, coord, self.is_odd(coord)))
    }

    /// The form `d_S x^coord`.
    ///
    /// # Panics
    /// Panics when a slot or the coordinate is out of range.
    pub fn dx(&self, slots: &[usize], coord: usize) -> IteratedForm {
        IteratedForm::generator(self.generator(slots, coord).expect("valid generator"))
    }

    /// Embeds a covariant k-tensor, given as a row-major `n^k` array, as
    /// `s_{β1…βk} d1x^β1 ⋯ dkx^βk`.
    pub fn embed_tensor(&self, k: usize, components: &[ScalarExpr]) -> Result<IteratedForm, FormError> {
        if k > 0 {
            self.check_slot(k)?;
        }
        let n = self.dimension();
        let expected = n.pow(k as u32);
        if components.len() != expected {
            return Err(FormError::ComponentCount { expected, got: components.len() });
        }
        let mut out = IteratedForm::zero();
        for (flat, c) in components.iter().enumerate() {
            let mut rest = flat;
            let mut gens = vec![Generator::new(1, 0, false); k];
            for slot in (1..=k).rev() {
                let coord = rest % n;
                rest /= n;
                gens[slot - 1] = Generator::new(1 << (slot - 1), coord, self.is_odd(coord));
            }
            out.add_term(gens, c.clone());
        }
        Ok(out)
    }

    /// The differential `d_slot`.
    pub fn differential(&self, slot: usize, f: &IteratedForm) -> Result<IteratedForm, FormError> {
        self.check_slot(slot)?;
        let bit = 1u8 << (slot - 1);
        let delta = MultiDegree::unit(false, slot);
        Ok(apply_leibniz(
            f,
            &delta,
            |c| self.scalar_differential(bit, c),
            |g| {
                if g.slot_mask() & bit != 0 {
                    IteratedForm::zero()
                } else {
                    IteratedForm::generator(Generator::new(g.slot_mask() | bit, g.coord(), g.is_odd_coordinate()))
                }
            },
        ))
    }

    fn scalar_differential(&self, bit: u8, c: &ScalarExpr) -> IteratedForm {
        let mut out = IteratedForm::zero();
        for mu in 0..self.dimension() {
            if !c.may_depend_on(mu) {
                continue;
            }
            let d = c.partial(mu);
            out.add_term(vec![Generator::new(bit, mu, self.is_odd(mu))], d);
        }
        out
    }

    /// The involution exchanging slots 1 and 2.
    pub fn kappa(&self, f: &IteratedForm) -> Result<IteratedForm, FormError> {
        let mut out = IteratedForm::zero();
        for (gens, c) in f.terms() {
            let mut swapped = Vec::with_capacity(gens.len());
            for g in gens {
                let mask = g.slot_mask();
                if mask & !0b11 != 0 {
                    let slot = 8 - mask.leading_zeros() as usize;
                    return Err(FormError::KappaOutsideDepthTwo { slot });
                }
                let m = ((mask & 1) << 1) | ((mask >> 1) & 1);
                swapped.push(Generator::new(m, g.coord(), g.is_odd_coordinate()));
            }
            out.add_term(swapped, c.clone());
        }
        Ok(out)
    }

    /// The coordinate partial `∂_coord` acting on coefficients; it annihilates
    /// every generator.
    pub fn partial(&self, coord: usize, f: &IteratedForm) -> Result<IteratedForm, FormError> {
        self.check_coord(coord)?;
        Ok(f.map_coefficients(|c| c.partial(coord)))
    }

    /// Insertion `i^{(slot)}_{∂_coord}`, a derivation of degree `(p; -e_slot)`.
    pub fn insert_coordinate_field(
        &self,
        slot: usize,
        coord: usize,
        f: &IteratedForm,
    ) -> Result<IteratedForm, FormError> {
        self.check_slot(slot)?;
        self.check_coord(coord)?;
        let bit = 1u8 << (slot - 1);
        let delta = -&MultiDegree::unit(self.is_odd(coord), slot);
        Ok(apply_leibniz(
            f,
            &delta,
            |_| IteratedForm::zero(),
            |g| {
                if g.slot_mask() == bit && g.coord() == coord {
                    IteratedForm::one()
                } else {
                    IteratedForm::zero()
                }
            },
        ))
    }

    /// Insertion `i^{(slot)}_X` of the even vector field `X = X^μ ∂_μ`.
    pub fn insert_field(&self, slot: usize, x: &[ScalarExpr], f: &IteratedForm) -> Result<IteratedForm, FormError> {
        self.check_slot(slot)?;
        if x.len() != self.dimension() {
            return Err(FormError::ComponentCount { expected: self.dimension(), got: x.len() });
        }
        let mut out = IteratedForm::zero();
        for (mu, xm) in x.iter().enumerate() {
            if xm.is_zero() {
                continue;
            }
            out += &self.insert_coordinate_field(slot, mu, f)?.scale(xm);
        }
        Ok(out)
    }

    /// The insertion `i^{(2)}_{i_{∂_coord}}` of bidegree `(-1,-1)`: it sends
    /// `d2d1x^μ` to `δ^μ_coord` and kills every other generator.
    pub fn insert_insertion(&self, coord: usize, f: &IteratedForm) -> Result<IteratedForm, FormError> {
        self.check_coord(coord)?;
        self.check_slot(2)?;
        let delta = MultiDegree::new(self.is_odd(coord), vec![-1, -1]);
        Ok(apply_leibniz(
            f,
            &delta,
            |_| IteratedForm::zero(),
            |g| {
                if g.slot_mask() == 0b11 && g.coord() == coord {
                    IteratedForm::one()
                } else {
                    IteratedForm::zero()
                }
            },
        ))
    }

    /// Lie derivative `i_X d_slot + d_slot i_X` along the even field `X`.
    pub fn lie(&self, slot: usize, x: &[ScalarExpr], f: &IteratedForm) -> Result<IteratedForm, FormError> {
        let a = self.insert_field(slot, x, &self.differential(slot, f)?)?;
        let b = self.differential(slot, &self.insert_field(slot, x, f)?)?;
        Ok(a + b)
    }
}

/// Applies the derivation of degree `delta` determined by its values on
/// scalars and on generators, via the graded Leibniz rule.
pub(crate) fn apply_leibniz(
    f: &IteratedForm,
    delta: &MultiDegree,
    on_scalar: impl Fn(&ScalarExpr) -> IteratedForm,
    on_generator: impl Fn(&Generator) -> IteratedForm,
) -> IteratedForm {
    let mut out = IteratedForm::zero();
    for (gens, c) in f.terms() {
        for (dg, dc) in on_scalar(c).terms() {
            let mut all = dg.to_vec();
            all.extend_from_slice(gens);
            out.add_term(all, dc.clone());
        }
        let mut negative = false;
        for k in 0..gens.len() {
            let image = on_generator(&gens[k]);
            for (ig, ic) in image.terms() {
                let mut all = Vec::with_capacity(gens.len() + ig.len());
                all.extend_from_slice(&gens[..k]);
                all.extend_from_slice(ig);
                all.extend_from_slice(&gens[k + 1..]);
                let coeff = c * ic;
                out.add_term(all, if negative { -coeff } else { coeff });
            }
            negative ^= super::koszul_odd(delta, &gens[k].degree());
        }
    }
    out
}
