//! Geodesic curvature of parameterized curves and fixed-step integration of
//! the geodesic equation `ẍ^μ = -Γ^μ_{ρα} ẋ^ρ ẋ^α`.

use thiserror::Error;

use crate::connection::{Components, Connection};
use crate::expr::{EvalError, SamplingDomain, ScalarExpr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeodesicError {
    #[error("curve has {got} components, chart has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("step count must be at least 1")]
    NoSteps,
    #[error("initial position {0:?} lies outside the chart domain")]
    StartOutsideDomain(Vec<f64>),
    #[error("trajectory left the chart domain after t = {}", last.time)]
    DomainExit { last: CurveState },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Position, velocity and parameter value of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveState {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub time: f64,
}

/// `K^μ = Γ^μ_{ρα} χ̇^ρ χ̇^α + χ̈^μ` at `t0`, where `curve` holds the
/// components `χ^μ(t)` as expressions in the single variable `t`.
pub fn geodesic_curvature(conn: &Connection, curve: &[ScalarExpr], t0: f64) -> Result<Vec<f64>, GeodesicError> {
    let n = conn.dimension();
    if curve.len() != n {
        return Err(GeodesicError::Dimension { expected: n, got: curve.len() });
    }
    let at = [t0];
    let mut x = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    for c in curve {
        let d = c.partial(0);
        x.push(c.eval_at(&at)?);
        v.push(d.eval_at(&at)?);
        a.push(d.partial(0).eval_at(&at)?);
    }
    let gamma = conn.symbols().eval_at(&x)?;
    Ok((0..n).map(|m| a[m] + contract(&gamma, n, m, &v)).collect())
}

/// `Γ^μ_{ρα} v^ρ v^α` from the flattened `[μ][ρ][α]` table.
fn contract(gamma: &[f64], n: usize, mu: usize, v: &[f64]) -> f64 {
    let mut s = 0.0;
    for r in 0..n {
        for a in 0..n {
            s += gamma[(mu * n + r) * n + a] * v[r] * v[a];
        }
    }
    s
}

/// Classical RK4 with `steps` equal steps from `start.time` to `t_end`.
/// Returns `steps + 1` states, the first being `start`.
pub fn integrate(
    conn: &Connection,
    domain: &SamplingDomain,
    start: &CurveState,
    t_end: f64,
    steps: usize,
) -> Result<Vec<CurveState>, GeodesicError> {
    let n = conn.dimension();
    if steps == 0 {
        return Err(GeodesicError::NoSteps);
    }
    for len in [start.position.len(), start.velocity.len(), domain.dimension()] {
        if len != n {
            return Err(GeodesicError::Dimension { expected: n, got: len });
        }
    }
    if !domain.contains(&start.position) {
        return Err(GeodesicError::StartOutsideDomain(start.position.clone()));
    }
    let symbols = conn.symbols();
    let h = (t_end - start.time) / steps as f64;
    // State vector: positions followed by velocities.
    let rhs = |y: &[f64]| -> Result<Vec<f64>, EvalError> {
        let gamma = symbols.eval_at(&y[..n])?;
        let mut dy = y[n..].to_vec();
        dy.extend((0..n).map(|m| -contract(&gamma, n, m, &y[n..])));
        Ok(dy)
    };
    let axpy = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let mut out = Vec::with_capacity(steps + 1);
    out.push(start.clone());
    let mut y: Vec<f64> = start.position.iter().chain(&start.velocity).copied().collect();
    for i in 1..=steps {
        let exit = |out: &Vec<CurveState>| GeodesicError::DomainExit { last: out.last().expect("nonempty").clone() };
        let stage = |y: &[f64]| -> Result<Vec<f64>, GeodesicError> {
            if !domain.contains(&y[..n]) {
                return Err(exit(&out));
            }
            rhs(y).map_err(|_| exit(&out))
        };
        let k1 = stage(&y)?;
        let k2 = stage(&axpy(&y, &k1, h / 2.0))?;
        let k3 = stage(&axpy(&y, &k2, h / 2.0))?;
        let k4 = stage(&axpy(&y, &k3, h))?;
        for j in 0..2 * n {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if !domain.contains(&y[..n]) || y.iter().any(|c| !c.is_finite()) {
            return Err(exit(&out));
        }
        out.push(CurveState {
            position: y[..n].to_vec(),
            velocity: y[n..].to_vec(),
            time: start.time + h * i as f64,
        });
    }
    Ok(out)
}

/// `g_{μν}(x) v^μ v^ν` for every state.
pub fn speed_along(g: &Components, trajectory: &[CurveState]) -> Result<Vec<f64>, GeodesicError> {
    let n = g.dimension();
    trajectory
        .iter()
        .map(|s| {
            let gv = g.eval_at(&s.position)?;
            let mut q = 0.0;
            for a in 0..n {
                for b in 0..n {
                    q += gv[a * n + b] * s.velocity[a] * s.velocity[b];
                }
            }
            Ok(q)
        })
        .collect()
}

/// Largest `|K^μ|` along a trajectory, with `χ̇` and `χ̈` taken from central
/// differences of the stored positions. Needs at least three states.
pub fn discrete_geodesic_curvature(conn: &Connection, trajectory: &[CurveState]) -> Result<f64, GeodesicError> {
    let n = conn.dimension();
    let mut worst: f64 = 0.0;
    for w in trajectory.windows(3) {
        let h = (w[2].time - w[0].time) / 2.0;
        let (xm, x0, xp) = (&w[0].position, &w[1].position, &w[2].position);
        let v: Vec<f64> = (0..n).map(|m| (xp[m] - xm[m]) / (2.0 * h)).collect();
        let gamma = conn.symbols().eval_at(x0)?;
        for m in 0..n {
            let a = (xp[m] - 2.0 * x0[m] + xm[m]) / (h * h);
            worst = worst.max((a + contract(&gamma, n, m, &v)).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::connection::{levi_civita_symbols, Chart, TensorField2};
    use crate::expr::parse;

    fn field(c: &Chart, rows: &[&[&str]]) -> TensorField2 {
        let rows = rows.iter().map(|r| r.iter().map(|s| c.parse(s).unwrap()).collect()).collect();
        TensorField2::new(Components::from_rows(rows).unwrap(), c.domain()).unwrap()
    }

    fn sphere() -> (Chart, TensorField2) {
        let c = Chart::from_intervals(&[("theta", 0.3, 2.8), ("phi", -7.0, 7.0)]).unwrap();
        let f = field(&c, &[&["1", "0"], &["0", "sin(theta)^2"]]);
        (c, f)
    }

    fn curve(parts: &[&str]) -> Vec<ScalarExpr> {
        parts.iter().map(|p| parse(p, &["t"]).unwrap()).collect()
    }

    fn state(x: &[f64], v: &[f64]) -> CurveState {
        CurveState { position: x.to_vec(), velocity: v.to_vec(), time: 0.0 }
    }

    #[test]
    fn curvature_of_model_curves() {
        let e = Chart::from_intervals(&[("x", -5.0, 5.0), ("y", -5.0, 5.0)]).unwrap();
        let flat = levi_civita_symbols(&field(&e, &[&["1", "0"], &["0", "1"]]));
        let k = geodesic_curvature(&flat, &curve(&["1 + 2*t", "3 - t"]), 0.7).unwrap();
        assert!(k.iter().all(|x| x.abs() < 1e-15));

        let (_, f) = sphere();
        let conn = levi_civita_symbols(&f);
        let k = geodesic_curvature(&conn, &curve(&["1.5707963267948966", "t"]), 0.3).unwrap();
        assert!(k.iter().all(|x| x.abs() < 1e-15), "{k:?}");
        let k = geodesic_curvature(&conn, &curve(&["0.7853981633974483", "t"]), 1.1).unwrap();
        assert!((k[0] + 0.5).abs() < 1e-14, "{k:?}");
        assert!(k[1].abs() < 1e-14);

        assert_eq!(
            geodesic_curvature(&conn, &curve(&["t"]), 0.0),
            Err(GeodesicError::Dimension { expected: 2, got: 1 })
        );
    }

    #[test]
    fn straight_lines_in_flat_space() {
        let e = Chart::from_intervals(&[("x", -5.0, 5.0), ("y", -5.0, 5.0), ("z", -5.0, 5.0)]).unwrap();
        let f = field(&e, &[&["1", "0", "0"], &["0", "1", "0"], &["0", "0", "1"]]);
        let conn = levi_civita_symbols(&f);
        let traj = integrate(&conn, e.domain(), &state(&[0.0, 1.0, -1.0], &[0.3, -0.2, 0.5]), 2.0, 50).unwrap();
        assert_eq!(traj.len(), 51);
        let last = traj.last().unwrap();
        assert!((last.time - 2.0).abs() < 1e-12);
        for (x, want) in last.position.iter().zip([0.6, 0.6, 0.0]) {
            assert!((x - want).abs() < 1e-12);
        }
        let speeds = speed_along(f.g(), &traj).unwrap();
        assert!(speeds.iter().all(|s| (s - 0.38).abs() < 1e-12));
    }

    #[test]
    fn sphere_equator_stays_on_equator() {
        let (c, f) = sphere();
        let conn = levi_civita_symbols(&f);
        let traj = integrate(&conn, c.domain(), &state(&[PI / 2.0, 0.0], &[0.0, 1.0]), 2.0 * PI, 10_000).unwrap();
        let dev = traj.iter().map(|s| (s.position[0] - PI / 2.0).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-6);
        let speeds = speed_along(f.g(), &traj).unwrap();
        assert!(speeds.iter().all(|s| (s - 1.0).abs() < 1e-8));
    }

    #[test]
    fn tilted_great_circle_conserves_speed_and_has_small_curvature() {
        let (c, f) = sphere();
        let conn = levi_civita_symbols(&f);
        let steps = 2000;
        let traj = integrate(&conn, c.domain(), &state(&[PI / 2.0, 0.0], &[0.5, 1.0]), 3.0, steps).unwrap();
        let speeds = speed_along(f.g(), &traj).unwrap();
        assert!(speeds.iter().all(|s| (s / speeds[0] - 1.0).abs() < 1e-8));
        let h = 3.0 / steps as f64;
        assert!(discrete_geodesic_curvature(&conn, &traj).unwrap() < 10.0 * h * h);
    }

    #[test]
    fn torsion_does_not_change_geodesics() {
        let c = Chart::from_intervals(&[("x1", -3.0, 3.0), ("x2", -3.0, 3.0), ("x3", -3.0, 3.0)]).unwrap();
        let tau = field(&c, &[&["1", "x3", "0"], &["-x3", "1", "0"], &["0", "0", "1"]]);
        let with = levi_civita_symbols(&tau);
        let without = levi_civita_symbols(&tau.metric_part());
        let s0 = state(&[0.1, -0.2, 0.3], &[0.4, 0.3, -0.5]);
        let a = integrate(&with, c.domain(), &s0, 3.0, 300).unwrap();
        let b = integrate(&without, c.domain(), &s0, 3.0, 300).unwrap();
        for (p, q) in a.iter().zip(&b) {
            for (x, y) in p.position.iter().zip(&q.position) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn schwarzschild_infall_keeps_timelike_normalization() {
        let c = Chart::from_intervals(&[("t", -100.0, 100.0), ("r", 3.0, 10.0), ("theta", 0.3, 2.8), ("phi", -7.0, 7.0)])
            .unwrap();
        let f = field(
            &c,
            &[
                &["-(1 - 1/r)", "0", "0", "0"],
                &["0", "1/(1 - 1/r)", "0", "0"],
                &["0", "0", "r^2", "0"],
                &["0", "0", "0", "r^2*sin(theta)^2"],
            ],
        );
        let conn = levi_civita_symbols(&f);
        let r0: f64 = 8.0;
        let s0 = state(&[0.0, r0, PI / 2.0, 0.0], &[1.0 / (1.0 - 1.0 / r0).sqrt(), 0.0, 0.0, 0.0]);
        let traj = integrate(&conn, c.domain(), &s0, 10.0, 1000).unwrap();
        assert!(traj.last().unwrap().position[1] < r0);
        let speeds = speed_along(f.g(), &traj).unwrap();
        assert!(speeds.iter().all(|s| (s + 1.0).abs() < 1e-7), "{:?}", speeds.last());
    }

    #[test]
    fn leaving_the_domain_reports_the_last_state() {
        let e = Chart::from_intervals(&[("x", 0.0, 1.0), ("y", 0.0, 1.0)]).unwrap();
        let conn = levi_civita_symbols(&field(&e, &[&["1", "0"], &["0", "1"]]));
        let err = integrate(&conn, e.domain(), &state(&[0.5, 0.5], &[1.0, 0.0]), 2.0, 20).unwrap_err();
        match err {
            GeodesicError::DomainExit { last } => {
                assert!(last.position[0] <= 1.0 && last.position[0] > 0.85);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            integrate(&conn, e.domain(), &state(&[1.5, 0.5], &[1.0, 0.0]), 2.0, 20),
            Err(GeodesicError::StartOutsideDomain(vec![1.5, 0.5]))
        );
        assert_eq!(integrate(&conn, e.domain(), &state(&[0.5, 0.5], &[1.0, 0.0]), 2.0, 0), Err(GeodesicError::NoSteps));
    }
}
