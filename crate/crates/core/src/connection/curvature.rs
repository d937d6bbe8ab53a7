//! Riemann and Ricci tensors, and a numerical covariant-commutator oracle.

use crate::expr::{EvalError, SamplingDomain, SamplingError, ScalarExpr};

use super::{Components, Connection, ConnectionError};

/// Riemann tensor `[σ][μ][δ][α]` and its contraction `[μ][δ]`.
#[derive(Debug, Clone)]
pub struct Curvature {
    pub riemann: Components,
    pub ricci: Components,
}

/// `R_{σμ δ}^α = ∂_σ Γ^α_{μδ} - ∂_μ Γ^α_{σδ} + Γ^α_{σβ} Γ^β_{μδ} - Γ^α_{μβ} Γ^β_{σδ}`.
pub fn riemann(conn: &Connection) -> Components {
    let n = conn.dimension();
    let g = |a: usize, m: usize, b: usize| conn.symbol(a, m, b);
    Components::from_fn(n, 4, |i| {
        let (s, m, d, a) = (i[0], i[1], i[2], i[3]);
        let mut terms = vec![g(a, m, d).partial(s), -g(a, s, d).partial(m)];
        for b in 0..n {
            terms.push(g(a, s, b) * g(b, m, d));
            terms.push(-(g(a, m, b) * g(b, s, d)));
        }
        ScalarExpr::sum(terms)
    })
}

/// `Ric_{μδ} = Σ_α R_{μα δ}^α`.
pub fn ricci(riemann: &Components) -> Components {
    let n = riemann.dimension();
    Components::from_fn(n, 2, |i| (0..n).map(|a| riemann.get(&[i[0], a, i[1], a]).clone()).sum())
}

impl Curvature {
    pub fn of(conn: &Connection) -> Curvature {
        let riemann = riemann(conn);
        let ricci = ricci(&riemann);
        Curvature { riemann, ricci }
    }
}

/// Outcome of [`curvature_commutator_oracle`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub points: usize,
    pub worst_deviation: f64,
    /// Point and index `[σ][μ][δ][α]` of the worst deviation.
    pub worst_point: Vec<f64>,
    pub worst_index: Vec<usize>,
    pub passed: bool,
}

/// Step of the five-point difference stencil.
const STENCIL_STEP: f64 = 1e-3;

/// Compares the Riemann components with
/// `(∇_{∂σ} ∇_{∂μ} - ∇_{∂μ} ∇_{∂σ}) ∂_δ`, computed from numerically evaluated
/// connection symbols only: `∇_{∂μ} ∂_δ = Γ^α_{μδ} ∂_α` is differentiated by
/// a five-point stencil and the connection terms are added algebraically.
///
/// A component passes when `|R - oracle| <= tol · (1 + |R|)`.
pub fn curvature_commutator_oracle(
    conn: &Connection,
    riemann: &Components,
    dom: &SamplingDomain,
    points: usize,
    tol: f64,
) -> Result<OracleReport, ConnectionError> {
    let n = conn.dimension();
    let symbols = conn.symbols();
    let eval_gamma = |p: &[f64]| -> Result<Vec<f64>, EvalError> { symbols.eval_at(p) };
    let at = |v: &[f64], a: usize, m: usize, b: usize| v[(a * n + m) * n + b];
    let mut sampler = dom.sampler();
    let mut report = OracleReport {
        points,
        worst_deviation: 0.0,
        worst_point: Vec::new(),
        worst_index: Vec::new(),
        passed: true,
    };
    for _ in 0..points {
        let stencil_ok = |p: &[f64]| -> Result<(), EvalError> {
            riemann.eval_at(p)?;
            for k in 0..n {
                for off in [-2.0, -1.0, 1.0, 2.0] {
                    let mut q = p.to_vec();
                    q[k] += off * STENCIL_STEP;
                    eval_gamma(&q)?;
                }
            }
            Ok(())
        };
        let point = sampler.next_admissible(stencil_ok).map_err(ConnectionError::from)?;
        let gamma0 = eval_gamma(&point)?;
        let r = riemann.eval_at(&point)?;
        // dgamma[s] = ∂_s Γ at the point, by the five-point stencil.
        let mut dgamma = Vec::with_capacity(n);
        for s in 0..n {
            let shifted = |off: f64| -> Result<Vec<f64>, SamplingError> {
                let mut q = point.clone();
                q[s] += off * STENCIL_STEP;
                eval_gamma(&q).map_err(|last| SamplingError::Exhausted { last })
            };
            let (m2, m1, p1, p2) = (shifted(-2.0)?, shifted(-1.0)?, shifted(1.0)?, shifted(2.0)?);
            let d: Vec<f64> = (0..gamma0.len())
                .map(|k| (m2[k] - 8.0 * m1[k] + 8.0 * p1[k] - p2[k]) / (12.0 * STENCIL_STEP))
                .collect();
            dgamma.push(d);
        }
        // (∇_σ W)^α with W^β = Γ^β_{μδ}: ∂_σ W^α + Γ^α_{σβ} W^β.
        let nabla_nabla = |s: usize, m: usize, d: usize, a: usize| -> f64 {
            let mut v = at(&dgamma[s], a, m, d);
            for b in 0..n {
                v += at(&gamma0, a, s, b) * at(&gamma0, b, m, d);
            }
            v
        };
        for s in 0..n {
            for m in 0..n {
                for d in 0..n {
                    for a in 0..n {
                        let oracle = nabla_nabla(s, m, d, a) - nabla_nabla(m, s, d, a);
                        let value = r[((s * n + m) * n + d) * n + a];
                        let dev = (value - oracle).abs();
                        if dev > tol * (1.0 + value.abs()) {
                            report.passed = false;
                        }
                        if dev > report.worst_deviation || report.worst_point.is_empty() {
                            report.worst_deviation = dev;
                            report.worst_point = point.clone();
                            report.worst_index = vec![s, m, d, a];
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}
