//! Covariant derivatives on components and through form-valued derivations.

use num_rational::BigRational;

use crate::expr::{SamplingDomain, ScalarExpr};
use crate::forms::{BasisOp, FormContext, FormDerivation, IteratedForm};

use super::{compare_components, levi_civita_symbols, Components, Connection, ConnectionError, TensorField2};

/// `(∇s)_{β1…βk;μ} = ∂_μ s_{β1…βk} - Σ_i Γ^α_{μβi} s_{β1…α…βk}`, with the
/// derivative index last.
pub fn covariant_derivative(conn: &Connection, s: &Components) -> Components {
    let n = conn.dimension();
    let k = s.rank();
    Components::from_fn(n, k + 1, |idx| {
        let (betas, mu) = (&idx[..k], idx[k]);
        let mut terms = vec![s.get(betas).partial(mu)];
        let mut moved = betas.to_vec();
        for i in 0..k {
            for a in 0..n {
                let c = conn.symbol(a, mu, betas[i]);
                if c.is_zero() {
                    continue;
                }
                moved[i] = a;
                terms.push(-(c * s.get(&moved)));
            }
            moved[i] = betas[i];
        }
        ScalarExpr::sum(terms)
    })
}

/// The derivation `∇^{(k)}` raising the iteration depth from `k` to `k + 1`:
///
/// * `k = 0`: `d1x^μ ∂_μ`
/// * `k = 1`: `d2x^μ (∂_μ - Γ^α_{μβ} d1x^β i^{(1)}_{∂α})`
/// * `k = 2`: `d3x^μ (∂_μ - Γ^α_{μβ} d1x^β i^{(1)}_{∂α} - Γ^α_{μβ} d2x^β i^{(2)}_{∂α}
///   - d1(Γ^α_{μβ} d2x^β) i^{(2)}_{i_{∂α}})`
pub fn nabla_tower_operator(ctx: &FormContext, conn: &Connection, k: usize) -> Result<FormDerivation, ConnectionError> {
    if k > 2 {
        return Err(crate::forms::FormError::DepthOverflow { slot: k + 1, depth: 3 }.into());
    }
    let ctx = &ctx.clone().with_depth(3)?;
    let n = conn.dimension();
    let top = k + 1;
    let mut op = FormDerivation::new();
    for mu in 0..n {
        op.push(ctx.dx(&[top], mu), BasisOp::Partial(mu));
    }
    for slot in 1..=k {
        for a in 0..n {
            let mut coeff = IteratedForm::zero();
            for mu in 0..n {
                for b in 0..n {
                    let g = conn.symbol(a, mu, b);
                    if g.is_zero() {
                        continue;
                    }
                    coeff += &(&ctx.dx(&[top], mu) * &ctx.dx(&[slot], b)).scale(&-g);
                }
            }
            op.push(coeff, BasisOp::Insert { slot, coord: a });
        }
    }
    if k == 2 {
        for a in 0..n {
            let mut coeff = IteratedForm::zero();
            for mu in 0..n {
                let mut inner = IteratedForm::zero();
                for b in 0..n {
                    inner += &ctx.dx(&[2], b).scale(conn.symbol(a, mu, b));
                }
                coeff += &(&ctx.dx(&[top], mu) * &ctx.differential(1, &inner)?);
            }
            op.push(-coeff, BasisOp::InsertInsertion { coord: a });
        }
    }
    Ok(op)
}

/// Applies `∇^{(k)}` to `ι_k(s)` for a covariant k-tensor `s` (`k <= 2`) and
/// reads off the components by `i^{(1)}_{∂β1} ∘ ⋯ ∘ i^{(k)}_{∂βk} ∘ i^{(k+1)}_{∂μ}`,
/// laid out like [`covariant_derivative`].
pub fn nabla_tower(ctx: &FormContext, conn: &Connection, s: &Components) -> Result<Components, ConnectionError> {
    let k = s.rank();
    let op = nabla_tower_operator(ctx, conn, k)?;
    let ctx = ctx.clone().with_depth(3)?;
    let image = op.apply(&ctx, &ctx.embed_tensor(k, s.data())?)?;
    let n = conn.dimension();
    let mut out = Components::zeros(n, k + 1);
    for idx in Components::zeros(n, k + 1).indices() {
        let mut f = ctx.insert_coordinate_field(k + 1, idx[k], &image)?;
        for slot in (1..=k).rev() {
            f = ctx.insert_coordinate_field(slot, idx[slot - 1], &f)?;
        }
        out.set(&idx, f.scalar_part());
    }
    Ok(out)
}

/// Checks that the tower reproduces [`covariant_derivative`].
pub fn check_nabla_tower(
    ctx: &FormContext,
    conn: &Connection,
    s: &Components,
    dom: &SamplingDomain,
) -> Result<(), ConnectionError> {
    let via_forms = nabla_tower(ctx, conn, s)?;
    compare_components("nabla tower", &via_forms, &covariant_derivative(conn, s), dom)
}

/// Checks `∇g = 0` on components and through the tower.
pub fn check_metricity(
    ctx: &FormContext,
    conn: &Connection,
    field: &TensorField2,
    dom: &SamplingDomain,
) -> Result<(), ConnectionError> {
    let n = field.dimension();
    let zero = Components::zeros(n, 3);
    compare_components("covariant derivative of g", &covariant_derivative(conn, field.g()), &zero, dom)?;
    compare_components("nabla tower of g", &nabla_tower(ctx, conn, field.g())?, &zero, dom)
}

/// The torsion correction `T(ω)_{αν;μ} = ½ (T^β_{νμ} ω_{αβ} - T^β_{αμ} ω_{νβ})`,
/// laid out like [`covariant_derivative`] of `ω`.
pub fn torsion_term(torsion: &Components, omega: &Components) -> Components {
    let n = omega.dimension();
    let half = BigRational::new(1.into(), 2.into());
    Components::from_fn(n, 3, |i| {
        let (a, v, m) = (i[0], i[1], i[2]);
        let s: ScalarExpr = (0..n)
            .map(|b| torsion.get(&[b, v, m]) * omega.get(&[a, b]) - torsion.get(&[b, a, m]) * omega.get(&[v, b]))
            .sum();
        s.scale(&half)
    })
}

/// Checks `∇²τ = ∇_g²ω + T(ω)`, where the left side is the depth-2 tower of
/// the connection of `τ` applied to `τ` and `∇_g` is the connection of `g`
/// alone.
pub fn check_second_derivative_identity(
    ctx: &FormContext,
    field: &TensorField2,
    dom: &SamplingDomain,
) -> Result<(), ConnectionError> {
    let conn = levi_civita_symbols(field);
    let lhs = nabla_tower(ctx, &conn, field.tau())?;
    let conn_g = levi_civita_symbols(&field.metric_part());
    let rhs = covariant_derivative(&conn_g, field.omega())
        .zip_with(&torsion_term(conn.torsion(), field.omega()), |a, b| a + b);
    compare_components("second covariant derivative identity", &lhs, &rhs, dom)
}
