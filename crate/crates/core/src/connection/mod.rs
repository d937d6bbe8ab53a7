//! The connection of a covariant 2-tensor `τ = g + ω` with nondegenerate
//! symmetric part.
//!
//! Index layouts used throughout (all arrays are [`Components`], row-major):
//!
//! * `tau`, `g`, `omega`, `g_inv`: `[μ][ν]`.
//! * Christoffel data of the first kind `γ`: `[δ][β][μ]` for
//!   `γ_{δ,βμ} = ∂_μ τ_{βδ} + ∂_β τ_{δμ} - ∂_δ τ_{βμ}`.
//! * Connection symbols `Γ`: `[α][μ][β]` for `Γ^α_{μβ}`, with `α` upper,
//!   `μ` the direction (paired with `d2x^μ`) and `β` the argument (paired
//!   with `d1x^β`). The covariant derivative of a 1-form is
//!   `(∇s)_{β;μ} = ∂_μ s_β - Γ^α_{μβ} s_α`.
//! * Torsion `T`: same layout as `Γ`, `T^α_{μβ} = Γ^α_{μβ} - Γ^α_{βμ}`.
//! * Riemann `R`: `[σ][μ][δ][α]` for
//!   `R_{σμ δ}^α = ∂_σ Γ^α_{μδ} - ∂_μ Γ^α_{σδ} + Γ^α_{σβ} Γ^β_{μδ} - Γ^α_{μβ} Γ^β_{σδ}`.
//! * Ricci: `[μ][δ]` for `Ric_{μδ} = Σ_α R_{μα δ}^α`. With this contraction
//!   the unit 2-sphere has `Ric = -g`.

mod covariant;
mod curvature;

use thiserror::Error;

use crate::expr::{
    eq_randomized, parse, DomainSpecError, EvalError, ParseError, SamplingDomain, SamplingError, ScalarExpr,
    Verdict,
};
use crate::forms::{FormContext, FormError, IteratedForm};

pub use covariant::{
    check_metricity, check_nabla_tower, check_second_derivative_identity, covariant_derivative, nabla_tower,
    nabla_tower_operator, torsion_term,
};
pub use curvature::{curvature_commutator_oracle, ricci, riemann, Curvature, OracleReport};

/// Largest dimension accepted by the symbolic inverse.
pub const MAX_INVERSE_DIMENSION: usize = 6;
/// Determinant magnitude below which a sampled metric counts as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConnectionError {
    #[error("degenerate metric: det g = {det:e} at {witness:?}")]
    Degenerate { witness: Vec<f64>, det: f64 },
    #[error("symbolic inverse supports dimension at most {MAX_INVERSE_DIMENSION}, got {0}")]
    TooLarge(usize),
    #[error("component array has {got} entries, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("chart error: {0}")]
    Chart(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("{what} mismatch at {index:?}: {lhs} vs {rhs} at {witness:?}")]
    Mismatch { what: String, index: Vec<usize>, witness: Vec<f64>, lhs: f64, rhs: f64 },
}

/// Ordered coordinates, their parities and the sampling domain used for
/// randomized identity checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    names: Vec<String>,
    parities: Vec<bool>,
    domain: SamplingDomain,
}

impl Chart {
    /// Classical chart; `domain` must have one interval per coordinate.
    pub fn new(names: Vec<String>, domain: SamplingDomain) -> Result<Self, ConnectionError> {
        let n = names.len();
        Chart::with_parities(names, vec![false; n], domain)
    }

    /// Chart whose sampling domain covers the even coordinates only, in
    /// order.
    pub fn with_parities(
        names: Vec<String>,
        parities: Vec<bool>,
        domain: SamplingDomain,
    ) -> Result<Self, ConnectionError> {
        if names.is_empty() {
            return Err(ConnectionError::Chart("a chart needs at least one coordinate".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(ConnectionError::Chart(format!("duplicate coordinate name `{n}`")));
            }
            if crate::expr::Func::from_name(n).is_some() {
                return Err(ConnectionError::Chart(format!("coordinate name `{n}` is a function name")));
            }
        }
        if parities.len() != names.len() {
            return Err(ConnectionError::Chart(format!(
                "{} parities for {} coordinates",
                parities.len(),
                names.len()
            )));
        }
        let even = parities.iter().filter(|p| !**p).count();
        if domain.dimension() != even {
            return Err(ConnectionError::Chart(format!(
                "sampling domain has {} intervals for {even} even coordinates",
                domain.dimension()
            )));
        }
        Ok(Chart { names, parities, domain })
    }

    /// Convenience constructor from `(name, lo, hi)` triples with default
    /// sampling options.
    pub fn from_intervals(coords: &[(&str, f64, f64)]) -> Result<Self, ConnectionError> {
        let domain = SamplingDomain::new(coords.iter().map(|c| (c.1, c.2)).collect())
            .map_err(|e: DomainSpecError| ConnectionError::Chart(e.to_string()))?;
        Chart::new(coords.iter().map(|c| c.0.to_string()).collect(), domain)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn parities(&self) -> &[bool] {
        &self.parities
    }

    pub fn dimension(&self) -> usize {
        self.names.len()
    }

    pub fn domain(&self) -> &SamplingDomain {
        &self.domain
    }

    pub fn with_domain(mut self, domain: SamplingDomain) -> Result<Self, ConnectionError> {
        if domain.dimension() != self.domain.dimension() {
            return Err(ConnectionError::Chart("sampling domain dimension changed".into()));
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn parse(&self, text: &str) -> Result<ScalarExpr, ParseError> {
        parse(text, &self.names)
    }

    pub fn form_context(&self) -> FormContext {
        FormContext::with_parities(self.parities.clone())
    }
}

/// Dense array of scalar components of rank `rank` over `n` coordinates,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    n: usize,
    rank: usize,
    data: Vec<ScalarExpr>,
}

impl Components {
    pub fn from_fn(n: usize, rank: usize, mut f: impl FnMut(&[usize]) -> ScalarExpr) -> Self {
        let len = n.pow(rank as u32);
        let mut idx = vec![0; rank];
        let mut data = Vec::with_capacity(len);
        for flat in 0..len {
            unflatten(flat, n, &mut idx);
            data.push(f(&idx));
        }
        Components { n, rank, data }
    }

    pub fn zeros(n: usize, rank: usize) -> Self {
        Components::from_fn(n, rank, |_| ScalarExpr::zero())
    }

    pub fn from_vec(n: usize, rank: usize, data: Vec<ScalarExpr>) -> Result<Self, ConnectionError> {
        let expected = n.pow(rank as u32);
        if data.len() != expected {
            return Err(ConnectionError::Shape { expected, got: data.len() });
        }
        Ok(Components { n, rank, data })
    }

    /// Square matrix from rows.
    pub fn from_rows(rows: Vec<Vec<ScalarExpr>>) -> Result<Self, ConnectionError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(ConnectionError::Shape { expected: n, got: r.len() });
            }
            data.extend(r);
        }
        Components::from_vec(n, 2, data)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn data(&self) -> &[ScalarExpr] {
        &self.data
    }

    fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.n);
            acc * self.n + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> &ScalarExpr {
        &self.data[self.flat(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: ScalarExpr) {
        let k = self.flat(idx);
        self.data[k] = value;
    }

    /// All multi-indices in storage order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.data.len()).map(|flat| {
            let mut idx = vec![0; self.rank];
            unflatten(flat, self.n, &mut idx);
            idx
        })
    }

    pub fn map(&self, f: impl Fn(&ScalarExpr) -> ScalarExpr) -> Components {
        Components { n: self.n, rank: self.rank, data: self.data.iter().map(f).collect() }
    }

    pub fn zip_with(&self, other: &Components, f: impl Fn(&ScalarExpr, &ScalarExpr) -> ScalarExpr) -> Components {
        assert_eq!((self.n, self.rank), (other.n, other.rank), "component shapes differ");
        Components {
            n: self.n,
            rank: self.rank,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.data.iter().all(ScalarExpr::is_zero)
    }

    pub fn eval_at(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.data.iter().map(|e| e.eval_at(point)).collect()
    }
}

fn unflatten(mut flat: usize, n: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % n;
        flat /= n;
    }
}

/// Compares two component arrays entrywise with [`eq_randomized`].
pub fn compare_components(
    what: &str,
    a: &Components,
    b: &Components,
    dom: &SamplingDomain,
) -> Result<(), ConnectionError> {
    if (a.n, a.rank) != (b.n, b.rank) {
        return Err(ConnectionError::Shape { expected: a.data.len(), got: b.data.len() });
    }
    for (idx, (x, y)) in a.indices().zip(a.data.iter().zip(&b.data)) {
        if x == y {
            continue;
        }
        if let Verdict::NotEqual { witness, lhs, rhs } = eq_randomized(x, y, dom)? {
            return Err(ConnectionError::Mismatch { what: what.to_string(), index: idx, witness, lhs, rhs });
        }
    }
    Ok(())
}

/// Splits `τ` into its symmetric and skew parts.
pub fn split(tau: &Components) -> (Components, Components) {
    let half = num_rational::BigRational::new(1.into(), 2.into());
    let g = Components::from_fn(tau.n, 2, |i| (tau.get(&[i[0], i[1]]) + tau.get(&[i[1], i[0]])).scale(&half));
    let w = Components::from_fn(tau.n, 2, |i| (tau.get(&[i[0], i[1]]) - tau.get(&[i[1], i[0]])).scale(&half));
    (g, w)
}

fn minor(m: &[Vec<ScalarExpr>], row: usize, col: usize) -> Vec<Vec<ScalarExpr>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, x)| x.clone()).collect())
        .collect()
}

/// Laplace expansion along the first row, skipping structural zeros.
pub(crate) fn determinant(m: &[Vec<ScalarExpr>]) -> ScalarExpr {
    match m.len() {
        0 => ScalarExpr::one(),
        1 => m[0][0].clone(),
        _ => {
            let mut terms = Vec::new();
            for (j, a) in m[0].iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let t = a * &determinant(&minor(m, 0, j));
                terms.push(if j % 2 == 1 { -t } else { t });
            }
            ScalarExpr::sum(terms)
        }
    }
}

fn rows(c: &Components) -> Vec<Vec<ScalarExpr>> {
    (0..c.n).map(|i| (0..c.n).map(|j| c.get(&[i, j]).clone()).collect()).collect()
}

/// Symbolic inverse of a square matrix via the adjugate, after checking that
/// the determinant stays away from zero at the sampled points.
pub fn inverse_metric(g: &Components, dom: &SamplingDomain) -> Result<Components, ConnectionError> {
    let n = g.n;
    if n > MAX_INVERSE_DIMENSION {
        return Err(ConnectionError::TooLarge(n));
    }
    let m = rows(g);
    let det = determinant(&m);
    let mut sampler = dom.sampler();
    for _ in 0..dom.trials() {
        let point = sampler.next_admissible(|p| det.eval_at(p).map(|_| ()))?;
        let value = det.eval_at(&point)?;
        if value.abs() < DEGENERACY_THRESHOLD {
            return Err(ConnectionError::Degenerate { witness: point, det: value });
        }
    }
    let inv_det = det.recip();
    Ok(Components::from_fn(n, 2, |i| {
        let (r, c) = (i[0], i[1]);
        let cof = determinant(&minor(&m, c, r));
        let cof = if (r + c) % 2 == 1 { -cof } else { cof };
        cof * &inv_det
    }))
}

/// A covariant 2-tensor together with its split and the inverse of its
/// symmetric part.
#[derive(Debug, Clone)]
pub struct TensorField2 {
    tau: Components,
    g: Components,
    omega: Components,
    g_inv: Components,
}

impl TensorField2 {
    pub fn new(tau: Components, dom: &SamplingDomain) -> Result<Self, ConnectionError> {
        if tau.rank != 2 {
            return Err(ConnectionError::Shape { expected: tau.n * tau.n, got: tau.data.len() });
        }
        let (g, omega) = split(&tau);
        let g_inv = inverse_metric(&g, dom)?;
        Ok(TensorField2 { tau, g, omega, g_inv })
    }

    /// `τ = g + ω` from a metric and a skew part; `g` is symmetrized and
    /// `ω` skew-symmetrized first.
    pub fn from_parts(g: &Components, omega: &Components, dom: &SamplingDomain) -> Result<Self, ConnectionError> {
        TensorField2::new(g.zip_with(omega, |a, b| a + b), dom)
    }

    /// The field with the same metric and vanishing skew part.
    pub fn metric_part(&self) -> TensorField2 {
        TensorField2 {
            tau: self.g.clone(),
            g: self.g.clone(),
            omega: Components::zeros(self.g.n, 2),
            g_inv: self.g_inv.clone(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.tau.n
    }

    pub fn tau(&self) -> &Components {
        &self.tau
    }

    pub fn g(&self) -> &Components {
        &self.g
    }

    pub fn omega(&self) -> &Components {
        &self.omega
    }

    pub fn g_inv(&self) -> &Components {
        &self.g_inv
    }

    pub fn has_skew_part(&self) -> bool {
        !self.omega.is_structurally_zero()
    }
}

/// Which computation produced a [`Connection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// `Γ^α_{μβ} = ½ g^{αδ} γ_{δ,βμ}` directly on components.
    Coordinate,
    /// Insertion operators applied to the Christoffel form.
    FormOperator,
}

/// Connection symbols and their torsion.
#[derive(Debug, Clone)]
pub struct Connection {
    gamma: Components,
    torsion: Components,
    provenance: Provenance,
}

impl Connection {
    pub fn from_symbols(gamma: Components, provenance: Provenance) -> Self {
        let torsion = Components::from_fn(gamma.n, 3, |i| gamma.get(&[i[0], i[1], i[2]]) - gamma.get(&[i[0], i[2], i[1]]));
        Connection { gamma, torsion, provenance }
    }

    pub fn dimension(&self) -> usize {
        self.gamma.n
    }

    /// `Γ^α_{μβ}` as `[α][μ][β]`.
    pub fn symbols(&self) -> &Components {
        &self.gamma
    }

    pub fn symbol(&self, alpha: usize, mu: usize, beta: usize) -> &ScalarExpr {
        self.gamma.get(&[alpha, mu, beta])
    }

    /// `T^α_{μβ} = Γ^α_{μβ} - Γ^α_{βμ}` as `[α][μ][β]`.
    pub fn torsion(&self) -> &Components {
        &self.torsion
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
}

/// `γ_{δ,βμ} = ∂_μ τ_{βδ} + ∂_β τ_{δμ} - ∂_δ τ_{βμ}` as `[δ][β][μ]`.
pub fn christoffel_first(tau: &Components) -> Components {
    Components::from_fn(tau.n, 3, |i| {
        let (d, b, m) = (i[0], i[1], i[2]);
        tau.get(&[b, d]).partial(m) + tau.get(&[d, m]).partial(b) - tau.get(&[b, m]).partial(d)
    })
}

/// The Christoffel form `-d2 d1 (τ_{μν} d1x^μ d2x^ν)`.
pub fn christoffel_form(ctx: &FormContext, tau: &Components) -> Result<IteratedForm, ConnectionError> {
    let t = ctx.embed_tensor(2, tau.data())?;
    Ok(-ctx.differential(2, &ctx.differential(1, &t)?)?)
}

/// The middle coefficients of the Christoffel form, laid out like
/// [`christoffel_first`]: entry `[δ][β][μ]` is the coefficient of
/// `d1x^β d2x^μ d2d1x^δ`.
pub fn christoffel_form_coefficients(ctx: &FormContext, form: &IteratedForm) -> Result<Components, ConnectionError> {
    let n = ctx.dimension();
    let mut out = Components::zeros(n, 3);
    for d in 0..n {
        for b in 0..n {
            for m in 0..n {
                let gens = [ctx.generator(&[1], b)?, ctx.generator(&[2], m)?, ctx.generator(&[1, 2], d)?];
                out.set(&[d, b, m], form.coefficient(&gens));
            }
        }
    }
    Ok(out)
}

/// `Γ^α_{μβ} = ½ g^{αδ} γ_{δ,βμ}`.
pub fn levi_civita_symbols(field: &TensorField2) -> Connection {
    let gamma1 = christoffel_first(&field.tau);
    let half = num_rational::BigRational::new(1.into(), 2.into());
    let n = field.dimension();
    let symbols = Components::from_fn(n, 3, |i| {
        let (a, m, b) = (i[0], i[1], i[2]);
        let s: ScalarExpr = (0..n).map(|d| field.g_inv.get(&[a, d]) * gamma1.get(&[d, b, m])).sum();
        s.scale(&half)
    });
    Connection::from_symbols(symbols, Provenance::Coordinate)
}

/// Computes the connection by applying `½ g^{σα} i^{(2)}_{i_{∂_α}}` to the
/// Christoffel form, which yields `d2d1x^σ + Γ^σ_{μβ} d1x^β d2x^μ`.
///
/// Fails with [`ConnectionError::InternalInconsistency`] when the
/// `d2d1x` part is not `d2d1x^σ`.
pub fn levi_civita_form_operator(
    ctx: &FormContext,
    field: &TensorField2,
    dom: &SamplingDomain,
) -> Result<Connection, ConnectionError> {
    let n = field.dimension();
    let gamma_form = christoffel_form(ctx, &field.tau)?;
    // Sign (-1)^{|Ω|·(0,-1)} of the local formula for the Christoffel form's degree.
    let degree = gamma_form.degree()?;
    let negative = degree.degree(2) % 2 != 0;
    let inserted: Vec<IteratedForm> =
        (0..n).map(|a| ctx.insert_insertion(a, &gamma_form)).collect::<Result<_, _>>()?;
    let half = num_rational::BigRational::new(1.into(), 2.into());
    let mut symbols = Components::zeros(n, 3);
    for s in 0..n {
        let mut omega_s = IteratedForm::zero();
        for (a, ia) in inserted.iter().enumerate() {
            let c = field.g_inv.get(&[s, a]).scale(&half);
            if !c.is_zero() {
                omega_s += &ia.scale(&c);
            }
        }
        if negative {
            omega_s = -omega_s;
        }
        for b in 0..n {
            let lead = omega_s.coefficient(&[ctx.generator(&[1, 2], b)?]);
            let expected = if b == s { ScalarExpr::one() } else { ScalarExpr::zero() };
            if let Verdict::NotEqual { witness, lhs, .. } = eq_randomized(&lead, &expected, dom)? {
                return Err(ConnectionError::InternalInconsistency(format!(
                    "coefficient of d2d1x^{b} in the image of dx^{s} is {lhs} at {witness:?}, expected {}",
                    u8::from(b == s)
                )));
            }
        }
        for m in 0..n {
            for b in 0..n {
                let gens = [ctx.generator(&[1], b)?, ctx.generator(&[2], m)?];
                symbols.set(&[s, m, b], omega_s.coefficient(&gens));
            }
        }
    }
    Ok(Connection::from_symbols(symbols, Provenance::FormOperator))
}

/// `3 g^{αδ} ∂_{[μ} ω_{βδ]}` with unit-weight antisymmetrization over the
/// six permutations of `(μ, β, δ)`, as `[α][μ][β]`.
pub fn torsion_from_skew_part(field: &TensorField2) -> Components {
    let n = field.dimension();
    let w = &field.omega;
    let half = num_rational::BigRational::new(1.into(), 2.into());
    // 3 · (1/3!) = 1/2.
    let alt = |m: usize, b: usize, d: usize| -> ScalarExpr {
        let perms: [(usize, usize, usize, bool); 6] = [
            (m, b, d, false),
            (b, d, m, false),
            (d, m, b, false),
            (b, m, d, true),
            (m, d, b, true),
            (d, b, m, true),
        ];
        let s: ScalarExpr = perms
            .iter()
            .map(|&(x, y, z, neg)| {
                let t = w.get(&[y, z]).partial(x);
                if neg {
                    -t
                } else {
                    t
                }
            })
            .sum();
        s.scale(&half)
    };
    Components::from_fn(n, 3, |i| {
        let (a, m, b) = (i[0], i[1], i[2]);
        (0..n).map(|d| field.g_inv.get(&[a, d]) * alt(m, b, d)).sum()
    })
}

/// Lowers the upper index: `T_{αμβ} = g_{αδ} T^δ_{μβ}`.
pub fn lower_first_index(g: &Components, t: &Components) -> Components {
    let n = g.n;
    Components::from_fn(n, 3, |i| (0..n).map(|d| g.get(&[i[0], d]) * t.get(&[d, i[1], i[2]])).sum())
}

/// Checks the torsion of `conn` against [`torsion_from_skew_part`].
pub fn check_torsion(conn: &Connection, field: &TensorField2, dom: &SamplingDomain) -> Result<(), ConnectionError> {
    compare_components("torsion", conn.torsion(), &torsion_from_skew_part(field), dom)
}

/// Checks that the lowered torsion is totally antisymmetric.
pub fn check_torsion_antisymmetry(
    conn: &Connection,
    field: &TensorField2,
    dom: &SamplingDomain,
) -> Result<(), ConnectionError> {
    let low = lower_first_index(field.g(), conn.torsion());
    let n = field.dimension();
    let swapped = Components::from_fn(n, 3, |i| -low.get(&[i[1], i[0], i[2]]));
    compare_components("lowered torsion (first pair)", &low, &swapped, dom)?;
    let swapped = Components::from_fn(n, 3, |i| -low.get(&[i[0], i[2], i[1]]));
    compare_components("lowered torsion (last pair)", &low, &swapped, dom)
}
