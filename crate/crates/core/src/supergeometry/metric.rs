//! Supermetrics, their inverse and the Levi-Civita symbols and Riemann
//! tensor with the graded sign factors.

use crate::connection::{inverse_metric, Components};
use crate::expr::{ScalarExpr, Verdict};

use super::{super_eq, super_partial, SuperChart, SuperError, SuperScalar};

/// `g = g_{μν} d1θ^μ d2θ^ν` with graded symmetric, even components, together
/// with the inverse `g^{μν}` normalized by `(-1)^{γ̄ᾱ} g_{να} g^{νγ} = δ_α^γ`.
#[derive(Debug, Clone)]
pub struct SuperMetric {
    chart: SuperChart,
    g: Vec<Vec<SuperScalar>>,
    g_inv: Vec<Vec<SuperScalar>>,
}

fn sign(odd: bool, x: &SuperScalar) -> SuperScalar {
    if odd {
        -x
    } else {
        x.clone()
    }
}

impl SuperMetric {
    /// Validates shape, parity and graded symmetry, then inverts.
    pub fn new(chart: &SuperChart, g: Vec<Vec<SuperScalar>>) -> Result<Self, SuperError> {
        let n = chart.dimension();
        if g.len() != n {
            return Err(SuperError::Shape { expected: n, got: g.len() });
        }
        for row in &g {
            if row.len() != n {
                return Err(SuperError::Shape { expected: n, got: row.len() });
            }
        }
        let p = chart.parities();
        for (r, row) in g.iter().enumerate() {
            for (c, x) in row.iter().enumerate() {
                if !x.has_parity(p[r] ^ p[c]) {
                    return Err(SuperError::Parity { row: r, col: c });
                }
            }
        }
        for r in 0..n {
            for c in r + 1..n {
                let mirrored = sign(p[r] && p[c], &g[c][r]);
                if let Some((mask, Verdict::NotEqual { witness, lhs, rhs })) = super_eq(&g[r][c], &mirrored, chart.domain())? {
                    return Err(SuperError::GradedSymmetry { row: r, col: c, mask, witness, lhs, rhs });
                }
            }
        }
        let g_inv = super_inverse_metric(chart, &g)?;
        Ok(SuperMetric { chart: chart.clone(), g, g_inv })
    }

    /// Parses the components with [`SuperChart::parse`].
    pub fn parse(chart: &SuperChart, rows: &[Vec<String>]) -> Result<Self, SuperError> {
        let g = rows
            .iter()
            .map(|r| r.iter().map(|s| chart.parse(s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        SuperMetric::new(chart, g)
    }

    pub fn chart(&self) -> &SuperChart {
        &self.chart
    }

    pub fn dimension(&self) -> usize {
        self.chart.dimension()
    }

    pub fn component(&self, mu: usize, nu: usize) -> &SuperScalar {
        &self.g[mu][nu]
    }

    pub fn inverse(&self, mu: usize, nu: usize) -> &SuperScalar {
        &self.g_inv[mu][nu]
    }
}

fn mat_mul(a: &[Vec<SuperScalar>], b: &[Vec<SuperScalar>]) -> Vec<Vec<SuperScalar>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| &a[i][k] * &b[k][j]).sum()).collect())
        .collect()
}

/// Solves `Σ_ν g_{να} H_{νγ} = (-1)^{ᾱ} δ_{αγ}`, that is `H = (gᵀ)⁻¹ D`
/// with `D = diag((-1)^{ᾱ})`. The right inverse of `M = gᵀ = M0 + N`, with
/// `M0` its body, is `M0⁻¹ Σ_j (-N M0⁻¹)^j`; the series stops because `N`
/// is nilpotent.
pub fn super_inverse_metric(chart: &SuperChart, g: &[Vec<SuperScalar>]) -> Result<Vec<Vec<SuperScalar>>, SuperError> {
    let n = g.len();
    let body = Components::from_fn(n, 2, |i| g[i[1]][i[0]].body());
    let inv0 = inverse_metric(&body, chart.domain()).map_err(SuperError::Body)?;
    let inv0: Vec<Vec<SuperScalar>> =
        (0..n).map(|i| (0..n).map(|j| SuperScalar::even(inv0.get(&[i, j]).clone())).collect()).collect();
    let nil: Vec<Vec<SuperScalar>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut x = g[j][i].clone();
                    x.terms.remove(&0);
                    -&x
                })
                .collect()
        })
        .collect();
    let step = mat_mul(&nil, &inv0);
    let mut power = inv0.clone();
    let mut sum = inv0;
    loop {
        power = mat_mul(&power, &step);
        if power.iter().flatten().all(SuperScalar::is_zero) {
            break;
        }
        for (s, p) in sum.iter_mut().flatten().zip(power.iter().flatten()) {
            *s = &*s + p;
        }
    }
    let p = chart.parities();
    Ok(sum.into_iter().map(|row| row.into_iter().enumerate().map(|(j, x)| sign(p[j], &x)).collect()).collect())
}

/// Checks `Σ_ν (-1)^{γ̄ᾱ} g_{να} g^{νγ} = δ_α^γ` monomial by monomial.
pub fn check_inverse(metric: &SuperMetric) -> Result<(), SuperError> {
    let n = metric.dimension();
    let p = metric.chart.parities();
    for a in 0..n {
        for c in 0..n {
            let s: SuperScalar = (0..n).map(|v| &metric.g[v][a] * &metric.g_inv[v][c]).sum();
            let s = sign(p[a] && p[c], &s);
            let delta = if a == c { SuperScalar::one() } else { SuperScalar::zero() };
            if let Some((mask, Verdict::NotEqual { witness, lhs, rhs })) = super_eq(&s, &delta, metric.chart.domain())? {
                return Err(SuperError::Mismatch { what: "inverse identity".into(), index: vec![a, c], mask, witness, lhs, rhs });
            }
        }
    }
    Ok(())
}

/// Dense table indexed like [`Components`].
#[derive(Debug, Clone, PartialEq)]
pub struct SuperTable {
    n: usize,
    rank: usize,
    data: Vec<SuperScalar>,
}

impl SuperTable {
    fn from_fn(n: usize, rank: usize, mut f: impl FnMut(&[usize]) -> SuperScalar) -> Self {
        let len = n.pow(rank as u32);
        let mut idx = vec![0; rank];
        let data = (0..len)
            .map(|mut flat| {
                for slot in idx.iter_mut().rev() {
                    *slot = flat % n;
                    flat /= n;
                }
                f(&idx)
            })
            .collect();
        SuperTable { n, rank, data }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn get(&self, idx: &[usize]) -> &SuperScalar {
        let flat = idx.iter().fold(0, |acc, &i| acc * self.n + i);
        &self.data[flat]
    }

    /// Index tuples paired with entries, in storage order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, &SuperScalar)> + '_ {
        let (n, rank) = (self.n, self.rank);
        self.data.iter().enumerate().map(move |(mut flat, x)| {
            let mut idx = vec![0; rank];
            for slot in idx.iter_mut().rev() {
                *slot = flat % n;
                flat /= n;
            }
            (idx, x)
        })
    }

    /// Even part of each entry as a classical component array.
    pub fn body(&self) -> Components {
        Components::from_vec(self.n, self.rank, self.data.iter().map(SuperScalar::body).collect())
            .expect("shape preserved")
    }
}

/// `Γ_μ{}_β^α = ½ g^{γα} [(-1)^{γ̄γ̄ + μ̄(μ̄+γ̄)} ∂_μ g_{βγ} + (-1)^{γ̄γ̄ + β̄(μ̄+β̄+γ̄)} ∂_β g_{μγ} - ∂_γ g_{βμ}]`,
/// stored as `[α][μ][β]` like the classical symbols.
pub fn super_christoffel(metric: &SuperMetric) -> SuperTable {
    let n = metric.dimension();
    let chart = &metric.chart;
    let p = |i: usize| u32::from(chart.is_odd(i));
    let d = |x: &SuperScalar, i: usize| super_partial(chart, x, i);
    let half = ScalarExpr::rational(1, 2);
    SuperTable::from_fn(n, 3, |idx| {
        let (a, m, b) = (idx[0], idx[1], idx[2]);
        let mut total = SuperScalar::zero();
        for c in 0..n {
            let e1 = p(c) * p(c) + p(m) * (p(m) + p(c));
            let e2 = p(c) * p(c) + p(b) * (p(m) + p(b) + p(c));
            let bracket = &(&sign(e1 % 2 == 1, &d(&metric.g[b][c], m)) + &sign(e2 % 2 == 1, &d(&metric.g[m][c], b)))
                - &d(&metric.g[b][m], c);
            total = &total + &(&metric.g_inv[c][a] * &bracket);
        }
        total.scale(&half)
    })
}

/// `R_{γβ}{}_α^ν` stored as `[γ][β][α][ν]`:
///
/// ```text
/// (-1)^{ᾱ(β̄+γ̄) + β̄(β̄+ν̄)} ∂_β Γ_α{}_γ^ν - (-1)^{β̄(β̄+γ̄+ν̄)} ∂_γ Γ_α{}_β^ν
///   + (-1)^{μ̄β̄ + ᾱγ̄} Γ_μ{}_β^ν Γ_α{}_γ^μ - (-1)^{β̄(ᾱ+γ̄) + μ̄γ̄} Γ_μ{}_γ^ν Γ_α{}_β^μ
/// ```
pub fn super_riemann(metric: &SuperMetric, gamma: &SuperTable) -> SuperTable {
    let n = metric.dimension();
    let chart = &metric.chart;
    let p = |i: usize| u32::from(chart.is_odd(i));
    // Γ_μ{}_β^ν is gamma[ν][μ][β].
    let s = |nu: usize, mu: usize, beta: usize| gamma.get(&[nu, mu, beta]);
    SuperTable::from_fn(n, 4, |idx| {
        let (c, b, a, v) = (idx[0], idx[1], idx[2], idx[3]);
        let e1 = p(a) * (p(b) + p(c)) + p(b) * (p(b) + p(v));
        let e2 = p(b) * (p(b) + p(c) + p(v));
        let mut total = &sign(e1 % 2 == 1, &super_partial(chart, s(v, a, c), b))
            - &sign(e2 % 2 == 1, &super_partial(chart, s(v, a, b), c));
        for m in 0..n {
            let e3 = p(m) * p(b) + p(a) * p(c);
            let e4 = p(b) * (p(a) + p(c)) + p(m) * p(c);
            total = &total + &sign(e3 % 2 == 1, &(s(v, m, b) * s(m, a, c)));
            total = &total - &sign(e4 % 2 == 1, &(s(v, m, c) * s(m, a, b)));
        }
        total
    })
}

/// Checks that every entry of `table` has parity equal to the sum of the
/// parities of its indices.
pub fn check_parities(chart: &SuperChart, table: &SuperTable) -> Result<(), SuperError> {
    for (idx, x) in table.entries() {
        let expected = idx.iter().fold(false, |acc, &i| acc ^ chart.is_odd(i));
        if !x.has_parity(expected) {
            return Err(SuperError::Mismatch {
                what: "parity bookkeeping".into(),
                index: idx,
                mask: x.terms().map(|(m, _)| m).find(|m| (m.count_ones() % 2 == 1) != expected).unwrap_or(0),
                witness: Vec::new(),
                lhs: f64::NAN,
                rhs: f64::NAN,
            });
        }
    }
    Ok(())
}
