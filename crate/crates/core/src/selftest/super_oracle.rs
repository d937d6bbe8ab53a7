//! Independent evaluation of the super Christoffel symbols of the built-in
//! 1|2 model: dense Grassmann arithmetic over two generators, the metric
//! written out by hand, a five-point stencil in `x`, a dense linear solve
//! for the inverse and hand-simplified sign tables.

#![allow(clippy::needless_range_loop)]

use crate::supergeometry::{SuperMetric, SuperTable};

/// Dense Grassmann numbers over two generators, basis `1, θ1, θ2, θ1θ2`.
type G4 = [f64; 4];

fn g4_mul(a: G4, b: G4) -> G4 {
    [
        a[0] * b[0],
        a[0] * b[1] + a[1] * b[0],
        a[0] * b[2] + a[2] * b[0],
        a[0] * b[3] + a[3] * b[0] + a[1] * b[2] - a[2] * b[1],
    ]
}

fn g4_add(a: G4, b: G4) -> G4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn g4_scale(s: f64, a: G4) -> G4 {
    a.map(|x| s * x)
}

/// The built-in 1|2 metric written out by hand.
fn oracle_metric(x: f64) -> [[G4; 3]; 3] {
    let z = [0.0; 4];
    let h = 1.0 + x * x;
    [
        [[x.exp(), 0.0, 0.0, x], [0.0, 0.0, x, 0.0], z],
        [[0.0, 0.0, x, 0.0], z, [h, 0.0, 0.0, 0.0]],
        [z, [-h, 0.0, 0.0, 0.0], z],
    ]
}

/// Left derivative in coordinate `i` (0 = x by a five-point stencil).
fn oracle_partial(x: f64, r: usize, c: usize, i: usize) -> G4 {
    let g = |x: f64| oracle_metric(x)[r][c];
    match i {
        0 => {
            let h = 1e-3;
            let (m2, m1, p1, p2) = (g(x - 2.0 * h), g(x - h), g(x + h), g(x + 2.0 * h));
            std::array::from_fn(|k| (m2[k] - 8.0 * m1[k] + 8.0 * p1[k] - p2[k]) / (12.0 * h))
        }
        1 => {
            let a = g(x);
            [a[1], 0.0, a[3], 0.0]
        }
        _ => {
            let a = g(x);
            [a[2], -a[3], 0.0, 0.0]
        }
    }
}

/// Dense Gaussian elimination with partial pivoting.
fn solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    x
}

/// `H` with `Σ_ν g_{να} H_{νγ} = (-1)^{γ̄ᾱ} δ_{αγ}`, solved as a real linear
/// system in the 36 coefficients of `H`.
fn oracle_inverse(x: f64) -> [[G4; 3]; 3] {
    let g = oracle_metric(x);
    // (-1)^{γ̄ᾱ} on the diagonal: + for x, - for both odd coordinates.
    let diag_sign = [1.0, -1.0, -1.0];
    let apply = |h: &[f64]| -> Vec<f64> {
        let hh = |v: usize, c: usize| -> G4 { std::array::from_fn(|k| h[(v * 3 + c) * 4 + k]) };
        let mut out = Vec::with_capacity(36);
        for a in 0..3 {
            for c in 0..3 {
                let s = (0..3).fold([0.0; 4], |acc, v| g4_add(acc, g4_mul(g[v][a], hh(v, c))));
                out.extend(s);
            }
        }
        out
    };
    let cols: Vec<Vec<f64>> = (0..36)
        .map(|j| {
            let mut e = vec![0.0; 36];
            e[j] = 1.0;
            apply(&e)
        })
        .collect();
    let m: Vec<Vec<f64>> = (0..36).map(|i| (0..36).map(|j| cols[j][i]).collect()).collect();
    let mut rhs = vec![0.0; 36];
    for (a, s) in diag_sign.iter().enumerate() {
        rhs[(a * 3 + a) * 4] = *s;
    }
    let h = solve(m, rhs);
    std::array::from_fn(|v| std::array::from_fn(|c| std::array::from_fn(|k| h[(v * 3 + c) * 4 + k])))
}

/// Parities of `(x, θ1, θ2)`.
const ODD: [bool; 3] = [false, true, true];

/// `(-1)^{γ̄γ̄ + μ̄(μ̄+γ̄)}`, which is `+1` only when `γ` and `μ` are both even.
fn first_sign(c: usize, m: usize) -> f64 {
    if !ODD[c] && !ODD[m] {
        1.0
    } else {
        -1.0
    }
}

/// `(-1)^{γ̄γ̄ + β̄(μ̄+β̄+γ̄)}`, which is `(-1)^{γ̄}` for even `β` and
/// `(-1)^{1+μ̄}` for odd `β`.
fn second_sign(c: usize, m: usize, b: usize) -> f64 {
    let flip = if ODD[b] { !ODD[m] } else { ODD[c] };
    if flip {
        -1.0
    } else {
        1.0
    }
}

/// Monomials `1, θ1, θ2, θ1θ2` as masks of a [`crate::supergeometry::SuperScalar`].
const MASKS: [u32; 4] = [0, 0b01, 0b10, 0b11];

/// Largest deviation found by an oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleDeviation {
    /// `|value - oracle| / (1 + |value|)`.
    pub worst: f64,
    pub x: f64,
    pub index: Vec<usize>,
    pub mask: u32,
}

impl OracleDeviation {
    fn new() -> Self {
        OracleDeviation { worst: 0.0, x: f64::NAN, index: Vec::new(), mask: 0 }
    }

    fn record(&mut self, value: f64, oracle: f64, x: f64, index: &[usize], mask: u32) {
        let dev = (value - oracle).abs() / (1.0 + value.abs());
        if dev > self.worst || self.index.is_empty() || !dev.is_finite() {
            self.worst = if dev.is_finite() { dev } else { f64::INFINITY };
            self.x = x;
            self.index = index.to_vec();
            self.mask = mask;
        }
    }
}

/// Compares `gamma`, laid out `[α][μ][β]`, with the oracle at the points `xs`.
pub fn christoffel_deviation(gamma: &SuperTable, xs: &[f64]) -> Result<OracleDeviation, String> {
    let mut dev = OracleDeviation::new();
    for &x in xs {
        let h = oracle_inverse(x);
        for a in 0..3 {
            for m in 0..3 {
                for b in 0..3 {
                    let mut total = [0.0; 4];
                    for c in 0..3 {
                        let bracket = g4_add(
                            g4_add(
                                g4_scale(first_sign(c, m), oracle_partial(x, b, c, m)),
                                g4_scale(second_sign(c, m, b), oracle_partial(x, m, c, b)),
                            ),
                            g4_scale(-1.0, oracle_partial(x, b, m, c)),
                        );
                        total = g4_add(total, g4_mul(h[c][a], bracket));
                    }
                    let oracle = g4_scale(0.5, total);
                    let entry = gamma.get(&[a, m, b]);
                    for (k, mask) in MASKS.iter().enumerate() {
                        let value = entry.coefficient(*mask).eval_at(&[x]).map_err(|e| e.to_string())?;
                        dev.record(value, oracle[k], x, &[a, m, b], *mask);
                    }
                }
            }
        }
    }
    Ok(dev)
}

/// Compares the series inverse of `metric` with the dense solve.
pub fn inverse_deviation(metric: &SuperMetric, xs: &[f64]) -> Result<OracleDeviation, String> {
    let mut dev = OracleDeviation::new();
    for &x in xs {
        let h = oracle_inverse(x);
        for (v, row) in h.iter().enumerate() {
            for (c, e) in row.iter().enumerate() {
                for (k, mask) in MASKS.iter().enumerate() {
                    let value = metric.inverse(v, c).coefficient(*mask).eval_at(&[x]).map_err(|e| e.to_string())?;
                    dev.record(value, e[k], x, &[v, c], *mask);
                }
            }
        }
    }
    Ok(dev)
}
