//! Residuals of the natural equations `Ric(τ) = 0` and of their split form
//! in terms of `g` and `ω`, plus a fit of the coupling constants relating
//! the two.
//!
//! With `A_{μνγ} = ∂_{[μ} ω_{νγ]}` (unit-weight antisymmetrization, `1/3!`
//! over the six permutations), the split system reads
//!
//! * `E_{μν} = R̄_{μν} + 9/16 g^{γρ} g^{δσ} A_{δμρ} A_{γνσ}`,
//! * `F_{μν} = ∇̄^γ A_{μνγ}`,
//!
//! where bars refer to the Levi-Civita connection of `g` alone.

use num_rational::BigRational;

use crate::connection::{covariant_derivative, levi_civita_symbols, Components, ConnectionError, Curvature, TensorField2};
use crate::expr::{sample_points, SamplingDomain, ScalarExpr};

/// Default number of sample points per model.
pub const DEFAULT_POINTS: usize = 20;
/// Coupling of the quadratic `ω` term as displayed for the split system.
pub const REFERENCE_QUADRATIC_CONSTANT: f64 = 9.0 / 16.0;
/// Below this `Σ rhs²` a fit is reported as undetermined.
const FIT_FLOOR: f64 = 1e-24;

/// A sample point with the values of all components there.
type Sample = (Vec<f64>, Vec<f64>);

/// Largest residual of one component over all points.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentResidual {
    pub index: Vec<usize>,
    pub max_abs: f64,
}

/// Residual of one family of equations.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationResidual {
    pub name: String,
    pub max_abs: f64,
    pub worst_point: Vec<f64>,
    pub components: Vec<ComponentResidual>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub equations: Vec<EquationResidual>,
    pub tol: f64,
    pub passed: bool,
}

impl ResidualReport {
    fn new(equations: Vec<EquationResidual>, tol: f64) -> Self {
        let passed = equations.iter().all(|e| e.max_abs < tol);
        ResidualReport { equations, tol, passed }
    }

    pub fn max_abs(&self) -> f64 {
        self.equations.iter().map(|e| e.max_abs).fold(0.0, f64::max)
    }
}

/// `count` points of `dom` (seeded by the domain) at which `τ` and `g^{-1}`
/// evaluate.
pub fn model_points(field: &TensorField2, dom: &SamplingDomain, count: usize) -> Result<Vec<Vec<f64>>, ConnectionError> {
    let exprs: Vec<ScalarExpr> = field.tau().data().iter().chain(field.g_inv().data()).cloned().collect();
    Ok(sample_points(&exprs, dom, count)?)
}

/// Evaluates a rank-2 array at every point and collects the component
/// maxima.
fn residual_of(name: &str, values: &[Sample], n: usize) -> EquationResidual {
    let mut components: Vec<ComponentResidual> = (0..n * n)
        .map(|k| ComponentResidual { index: vec![k / n, k % n], max_abs: 0.0 })
        .collect();
    let mut out = EquationResidual { name: name.to_string(), max_abs: 0.0, worst_point: Vec::new(), components: Vec::new() };
    for (point, v) in values {
        for (c, x) in components.iter_mut().zip(v) {
            c.max_abs = c.max_abs.max(x.abs());
            if x.abs() > out.max_abs || out.worst_point.is_empty() {
                out.max_abs = x.abs();
                out.worst_point = point.clone();
            }
        }
    }
    out.components = components;
    out
}

fn eval_rank2(c: &Components, points: &[Vec<f64>]) -> Result<Vec<Sample>, ConnectionError> {
    points.iter().map(|p| Ok((p.clone(), c.eval_at(p)?))).collect()
}

/// All components of `Ric(τ)` at `points`.
pub fn natural_residual(field: &TensorField2, points: &[Vec<f64>], tol: f64) -> Result<ResidualReport, ConnectionError> {
    let ricci = Curvature::of(&levi_civita_symbols(field)).ricci;
    let values = eval_rank2(&ricci, points)?;
    Ok(ResidualReport::new(vec![residual_of("Ric(tau)", &values, field.dimension())], tol))
}

/// `A_{μνγ} = ∂_{[μ} ω_{νγ]}` with weight `1/3!`.
pub fn skew_derivative(omega: &Components) -> Components {
    let n = omega.dimension();
    let sixth = BigRational::new(1.into(), 6.into());
    Components::from_fn(n, 3, |i| {
        let (m, v, g) = (i[0], i[1], i[2]);
        let even = [(m, v, g), (v, g, m), (g, m, v)];
        let odd = [(v, m, g), (m, g, v), (g, v, m)];
        let s: ScalarExpr = even
            .iter()
            .map(|&(a, b, c)| omega.get(&[b, c]).partial(a))
            .chain(odd.iter().map(|&(a, b, c)| -omega.get(&[b, c]).partial(a)))
            .sum();
        s.scale(&sixth)
    })
}

/// Numeric `g^{γρ} g^{δσ} A_{δμρ} A_{γνσ}` from evaluated `g^{-1}` and `A`.
fn quadratic_term(n: usize, g_inv: &[f64], a: &[f64]) -> Vec<f64> {
    let gi = |x: usize, y: usize| g_inv[x * n + y];
    let at = |x: usize, y: usize, z: usize| a[(x * n + y) * n + z];
    let mut out = vec![0.0; n * n];
    for m in 0..n {
        for v in 0..n {
            let mut s = 0.0;
            for g in 0..n {
                for r in 0..n {
                    for d in 0..n {
                        for sg in 0..n {
                            s += gi(g, r) * gi(d, sg) * at(d, m, r) * at(g, v, sg);
                        }
                    }
                }
            }
            out[m * n + v] = s;
        }
    }
    out
}

/// Pointwise values of the pieces of the split system.
struct SplitTerms {
    point: Vec<f64>,
    ricci_g: Vec<f64>,
    quadratic: Vec<f64>,
    divergence: Vec<f64>,
}

fn split_terms(field: &TensorField2, points: &[Vec<f64>]) -> Result<Vec<SplitTerms>, ConnectionError> {
    let n = field.dimension();
    let metric = field.metric_part();
    let conn_g = levi_civita_symbols(&metric);
    let ricci_g = Curvature::of(&conn_g).ricci;
    let a = skew_derivative(field.omega());
    let nabla_a = covariant_derivative(&conn_g, &a);
    points
        .iter()
        .map(|p| {
            let gi = field.g_inv().eval_at(p)?;
            let av = a.eval_at(p)?;
            let na = nabla_a.eval_at(p)?;
            let mut divergence = vec![0.0; n * n];
            for m in 0..n {
                for v in 0..n {
                    let mut s = 0.0;
                    for g in 0..n {
                        for l in 0..n {
                            s += gi[g * n + l] * na[((m * n + v) * n + g) * n + l];
                        }
                    }
                    divergence[m * n + v] = s;
                }
            }
            Ok(SplitTerms {
                point: p.clone(),
                ricci_g: ricci_g.eval_at(p)?,
                quadratic: quadratic_term(n, &gi, &av),
                divergence,
            })
        })
        .collect()
}

/// Both families of the split system at `points`, with the displayed
/// constant `9/16`.
pub fn einstein_split_residual(
    field: &TensorField2,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<ResidualReport, ConnectionError> {
    let n = field.dimension();
    let terms = split_terms(field, points)?;
    let first: Vec<_> = terms
        .iter()
        .map(|t| {
            let v = t.ricci_g.iter().zip(&t.quadratic).map(|(r, q)| r + REFERENCE_QUADRATIC_CONSTANT * q).collect();
            (t.point.clone(), v)
        })
        .collect();
    let second: Vec<_> = terms.iter().map(|t| (t.point.clone(), t.divergence.clone())).collect();
    Ok(ResidualReport::new(
        vec![
            residual_of("Ric(g) + 9/16 g g dw dw", &first, n),
            residual_of("div_g dw", &second, n),
        ],
        tol,
    ))
}

/// Least-squares constant `c` in `lhs ≈ c · rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantFit {
    pub relation: String,
    /// `None` when `rhs` vanishes at every point.
    pub constant: Option<f64>,
    /// Standard deviation of the per-point constants, over points where
    /// `rhs` does not vanish.
    pub std_dev: Option<f64>,
    pub points_used: usize,
    /// `max |lhs - c · rhs|` over all points and components (`max |lhs|`
    /// when undetermined).
    pub residual_after_fit: f64,
    pub reference_value: Option<f64>,
}

impl ConstantFit {
    fn fit(relation: &str, pairs: &[Sample], reference_value: Option<f64>) -> Self {
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let (mut num, mut den) = (0.0, 0.0);
        let mut per_point = Vec::new();
        for (lhs, rhs) in pairs {
            let (lr, rr) = (dot(lhs, rhs), dot(rhs, rhs));
            num += lr;
            den += rr;
            if rr > FIT_FLOOR {
                per_point.push(lr / rr);
            }
        }
        let constant = (den > FIT_FLOOR).then(|| num / den);
        let c = constant.unwrap_or(0.0);
        let residual_after_fit = pairs
            .iter()
            .flat_map(|(l, r)| l.iter().zip(r).map(|(a, b)| (a - c * b).abs()))
            .fold(0.0, f64::max);
        let std_dev = (!per_point.is_empty()).then(|| {
            let mean = per_point.iter().sum::<f64>() / per_point.len() as f64;
            (per_point.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / per_point.len() as f64).sqrt()
        });
        ConstantFit {
            relation: relation.to_string(),
            constant,
            std_dev,
            points_used: per_point.len(),
            residual_after_fit,
            reference_value,
        }
    }

    /// Whether a determined constant differs from the reference value.
    pub fn deviates_from_reference(&self) -> bool {
        match (self.constant, self.reference_value) {
            (Some(c), Some(p)) => (c - p).abs() > 1e-6 * (1.0 + p.abs()),
            _ => false,
        }
    }

    /// Stable (or undetermined) with a small residual after the fit.
    pub fn is_consistent(&self, std_tol: f64, residual_tol: f64) -> bool {
        self.std_dev.is_none_or(|s| s < std_tol) && self.residual_after_fit < residual_tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub points: usize,
    /// `Ric_{[μν]}(τ) ≈ c · ∇̄^γ A_{μνγ}`.
    pub antisymmetric: ConstantFit,
    /// `Ric_{(μν)}(τ) - R̄_{μν} ≈ c · g^{γρ} g^{δσ} A_{δμρ} A_{γνσ}`.
    pub symmetric: ConstantFit,
}

/// Compares the parts of `Ric(τ)` with the terms of the split system and
/// fits the constants relating them.
pub fn decomposition_check(field: &TensorField2, points: &[Vec<f64>]) -> Result<DecompositionReport, ConnectionError> {
    let n = field.dimension();
    let ricci = Curvature::of(&levi_civita_symbols(field)).ricci;
    let terms = split_terms(field, points)?;
    let mut anti = Vec::with_capacity(points.len());
    let mut sym = Vec::with_capacity(points.len());
    for t in &terms {
        let r = ricci.eval_at(&t.point)?;
        let part = |sign: f64| -> Vec<f64> {
            (0..n * n).map(|k| 0.5 * (r[k] + sign * r[(k % n) * n + k / n])).collect()
        };
        anti.push((part(-1.0), t.divergence.clone()));
        let s: Vec<f64> = part(1.0).iter().zip(&t.ricci_g).map(|(a, b)| a - b).collect();
        sym.push((s, t.quadratic.clone()));
    }
    Ok(DecompositionReport {
        points: points.len(),
        antisymmetric: ConstantFit::fit("Ric[tau] antisymmetric part = c * div_g dw", &anti, None),
        symmetric: ConstantFit::fit(
            "Ric[tau] symmetric part - Ric(g) = c * g g dw dw",
            &sym,
            Some(REFERENCE_QUADRATIC_CONSTANT),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::Chart;

    fn field(c: &Chart, rows: &[&[&str]]) -> TensorField2 {
        let rows = rows.iter().map(|r| r.iter().map(|s| c.parse(s).unwrap()).collect()).collect();
        TensorField2::new(Components::from_rows(rows).unwrap(), c.domain()).unwrap()
    }

    fn schwarzschild(omega: [&str; 2]) -> (Chart, TensorField2) {
        let c = Chart::from_intervals(&[("t", -10.0, 10.0), ("r", 3.0, 10.0), ("theta", 0.3, 2.8), ("phi", -3.0, 3.0)])
            .unwrap();
        let (w01, w23) = (omega[0], omega[1]);
        let f = field(
            &c,
            &[
                &["-(1 - 1/r)", w01, "0", "0"],
                &[&format!("-({w01})"), "1/(1 - 1/r)", "0", "0"],
                &["0", "0", "r^2", w23],
                &["0", "0", &format!("-({w23})"), "r^2*sin(theta)^2"],
            ],
        );
        (c, f)
    }

    fn sphere() -> (Chart, TensorField2) {
        let c = Chart::from_intervals(&[("theta", 0.3, 2.8), ("phi", -3.0, 3.0)]).unwrap();
        let f = field(&c, &[&["1", "0"], &["0", "sin(theta)^2"]]);
        (c, f)
    }

    fn flat4_omega() -> (Chart, TensorField2) {
        let c = Chart::from_intervals(&[("x1", -2.0, 2.0), ("x2", -2.0, 2.0), ("x3", -2.0, 2.0), ("x4", -2.0, 2.0)])
            .unwrap();
        let f = field(
            &c,
            &[
                &["1", "sin(x3)", "0", "0"],
                &["-sin(x3)", "1", "0", "0"],
                &["0", "0", "1", "0"],
                &["0", "0", "0", "1"],
            ],
        );
        (c, f)
    }

    #[test]
    fn natural_residual_examples() {
        let (c, f) = schwarzschild(["0", "0"]);
        let pts = model_points(&f, c.domain(), DEFAULT_POINTS).unwrap();
        assert_eq!(pts.len(), 20);
        let rep = natural_residual(&f, &pts, 1e-8).unwrap();
        assert!(rep.passed, "{}", rep.max_abs());

        let e = Chart::from_intervals(&[("x", 0.0, 1.0), ("y", 0.0, 1.0), ("z", 0.0, 1.0)]).unwrap();
        let flat = field(&e, &[&["1", "0", "0"], &["0", "1", "0"], &["0", "0", "1"]]);
        let rep = natural_residual(&flat, &model_points(&flat, e.domain(), 5).unwrap(), 1e-15).unwrap();
        assert_eq!(rep.max_abs(), 0.0);

        let (c, f) = sphere();
        let pts = model_points(&f, c.domain(), 10).unwrap();
        let rep = natural_residual(&f, &pts, 1e-8).unwrap();
        assert!(!rep.passed);
        assert!((rep.equations[0].components[0].max_abs - 1.0).abs() < 1e-12);
        let biggest_sin2 = pts.iter().map(|p| p[0].sin().powi(2)).fold(0.0, f64::max);
        assert!((rep.equations[0].components[3].max_abs - biggest_sin2).abs() < 1e-12);
        assert_eq!(rep.equations[0].components[1].max_abs, 0.0);
    }

    #[test]
    fn split_residual_examples() {
        let (c, f) = schwarzschild(["0", "0"]);
        let pts = model_points(&f, c.domain(), DEFAULT_POINTS).unwrap();
        let rep = einstein_split_residual(&f, &pts, 1e-8).unwrap();
        assert!(rep.passed, "{rep:?}");

        let (c, f) = sphere();
        let pts = model_points(&f, c.domain(), 10).unwrap();
        let split = einstein_split_residual(&f, &pts, 1e-8).unwrap();
        let natural = natural_residual(&f, &pts, 1e-8).unwrap();
        assert_eq!(split.equations[0].components, natural.equations[0].components);
        assert_eq!(split.equations[1].max_abs, 0.0);

        let e = Chart::from_intervals(&[("x", 0.0, 1.0), ("y", 0.0, 1.0), ("z", 0.0, 1.0)]).unwrap();
        let f = field(&e, &[&["1", "2", "0"], &["-2", "1", "1/3"], &["0", "-1/3", "1"]]);
        let rep = einstein_split_residual(&f, &model_points(&f, e.domain(), 5).unwrap(), 1e-15).unwrap();
        assert_eq!(rep.max_abs(), 0.0);
    }

    #[test]
    fn skew_derivative_is_the_cyclic_sum() {
        let (c, f) = flat4_omega();
        let a = skew_derivative(f.omega());
        let third_cos = c.parse("cos(x3)/3").unwrap();
        for idx in [[2, 0, 1], [0, 1, 2], [1, 2, 0]] {
            assert_eq!(a.get(&idx), &third_cos);
        }
        assert_eq!(a.get(&[1, 0, 2]), &-third_cos);
        assert!(a.get(&[0, 1, 3]).is_zero());
    }

    #[test]
    fn fitted_constants_are_stable_on_flat_metric() {
        let (c, f) = flat4_omega();
        let pts = model_points(&f, c.domain(), DEFAULT_POINTS).unwrap();
        let rep = decomposition_check(&f, &pts).unwrap();
        for fit in [&rep.antisymmetric, &rep.symmetric] {
            assert!(fit.constant.is_some());
            assert!(fit.is_consistent(1e-6, 1e-8), "{fit:?}");
        }
        assert!((rep.antisymmetric.constant.unwrap() + 1.5).abs() < 1e-9, "{:?}", rep.antisymmetric);
        assert!((rep.symmetric.constant.unwrap() + 2.25).abs() < 1e-9, "{:?}", rep.symmetric);
        assert!(rep.symmetric.deviates_from_reference());
    }

    #[test]
    fn fits_on_curved_metric_with_small_omega() {
        let (c, f) = schwarzschild(["r/20 + t/30", "theta*r/10"]);
        let pts = model_points(&f, c.domain(), DEFAULT_POINTS).unwrap();
        let rep = decomposition_check(&f, &pts).unwrap();
        assert!(rep.antisymmetric.residual_after_fit < 1e-8, "{:?}", rep.antisymmetric);
        assert!(rep.symmetric.residual_after_fit < 1e-8, "{:?}", rep.symmetric);
    }

    #[test]
    fn vanishing_omega_leaves_constants_undetermined() {
        let (c, f) = schwarzschild(["0", "0"]);
        let pts = model_points(&f, c.domain(), 5).unwrap();
        let rep = decomposition_check(&f, &pts).unwrap();
        for fit in [&rep.antisymmetric, &rep.symmetric] {
            assert_eq!(fit.constant, None);
            assert_eq!(fit.std_dev, None);
            assert!(fit.residual_after_fit < 1e-8);
        }
    }

    #[test]
    fn split_terms_depend_only_on_the_exterior_derivative() {
        let (c, f) = flat4_omega();
        // Adding the closed form d(x1 dx2 + x4^2 dx3) leaves dω unchanged.
        let g = f.g().clone();
        let extra = Components::from_fn(4, 2, |i| match (i[0], i[1]) {
            (0, 1) => ScalarExpr::one(),
            (1, 0) => -ScalarExpr::one(),
            (3, 2) => c.parse("2*x4").unwrap(),
            (2, 3) => c.parse("-2*x4").unwrap(),
            _ => ScalarExpr::zero(),
        });
        let shifted = TensorField2::from_parts(&g, &f.omega().zip_with(&extra, |a, b| a + b), c.domain()).unwrap();
        let pts = model_points(&f, c.domain(), 8).unwrap();
        let a = einstein_split_residual(&f, &pts, 1.0).unwrap();
        let b = einstein_split_residual(&shifted, &pts, 1.0).unwrap();
        for (x, y) in a.equations.iter().zip(&b.equations) {
            for (p, q) in x.components.iter().zip(&y.components) {
                assert!((p.max_abs - q.max_abs).abs() < 1e-12);
            }
        }
    }
}
