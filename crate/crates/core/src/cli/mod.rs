//! Command-line driver: argument parsing, command dispatch and report
//! emission.
//!
//! Exit codes: `0` success, `1` a residual or assertion check failed, `2`
//! the input was rejected (arguments, model file, degenerate metric).

pub mod model;

use std::fmt::Write as _;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::connection::{levi_civita_symbols, Components, Curvature};
use crate::expr::{eq_randomized, SamplingDomain, ScalarExpr, Verdict};
use crate::geodesics::{integrate, speed_along, CurveState, GeodesicError};
use crate::relativity::{
    decomposition_check, einstein_split_residual, model_points, natural_residual, ConstantFit, ResidualReport,
    DEFAULT_POINTS,
};
use crate::selftest;
use crate::supergeometry::{super_christoffel, super_riemann, SuperScalar};

use model::{load_model, Geometry, Model};

/// Tolerance of the residual checks.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Standard deviation bound of the decomposition fits.
pub const FIT_STD_TOL: f64 = 1e-6;

/// Splits a table index into upper and lower index lists.
type IndexSplit = fn(&[usize]) -> (Vec<usize>, Vec<usize>);

/// What a command printed and how it ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Quantity {
    Christoffel,
    Torsion,
    Riemann,
    Ricci,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Natural,
    EinsteinSplit,
    Decomposition,
}

#[derive(Debug, Parser)]
#[command(name = "iterforms", version, about = "Connections, curvature and geodesics of covariant 2-tensors")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the nonzero components of a tensor.
    Compute {
        #[arg(value_enum)]
        quantity: Quantity,
        /// Model file or `builtin:NAME`.
        #[arg(long)]
        model: String,
    },
    /// Integrate the geodesic equation with fixed-step RK4.
    Geodesic {
        /// Model file or `builtin:NAME`.
        #[arg(long)]
        model: String,
        /// Initial state `x1,...,xn;v1,...,vn` at t = 0.
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        /// Number of RK4 steps.
        #[arg(long)]
        steps: usize,
        /// Final value of the affine parameter.
        #[arg(long = "t-end", allow_hyphen_values = true)]
        t_end: f64,
    },
    /// Evaluate residuals at sample points.
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        /// Model file or `builtin:NAME`.
        #[arg(long)]
        model: String,
    },
    /// Run the acceptance criteria.
    Selftest {
        /// Criterion name fragment or number.
        #[arg(long)]
        filter: Option<String>,
    },
}

/// Rejected input, reported with exit code 2.
struct InputError(String);

/// A finished command: the JSON document, its table rendering and whether
/// every check passed.
struct Report {
    command: String,
    model: Value,
    results: Value,
    report: Value,
    table: String,
    passed: bool,
}

impl Report {
    fn json(&self) -> String {
        let doc = json!({
            "command": self.command,
            "model": self.model,
            "results": self.results,
            "report": self.report,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
        s.push('\n');
        s
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run_command<S: AsRef<str>>(argv: &[S]) -> Outcome {
    let args = argv.iter().map(|s| s.as_ref().to_string());
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let result = match &cli.command {
        Command::Compute { quantity, model } => compute(*quantity, model),
        Command::Geodesic { model, start, steps, t_end } => geodesic(model, start, *steps, *t_end),
        Command::Check { kind, model } => check(*kind, model),
        Command::Selftest { filter } => run_selftest(filter.as_deref()),
    };
    match result {
        Err(InputError(message)) => Outcome { code: 2, stdout: String::new(), stderr: format!("error: {message}\n") },
        Ok(report) => {
            let stdout = match cli.format {
                Format::Json => report.json(),
                Format::Table => report.table.clone(),
            };
            let (code, stderr) =
                if report.passed { (0, String::new()) } else { (1, format!("{}: check failed\n", report.command)) };
            Outcome { code, stdout, stderr }
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> InputError {
    InputError(e.to_string())
}

fn load(spec: &str) -> Result<Model, InputError> {
    load_model(spec).map_err(|e| InputError(format!("{spec}: {e}")))
}

fn model_json(m: &Model) -> Value {
    json!({
        "name": m.name,
        "coords": m.coords(),
        "options": m.options,
    })
}

fn classical_only<'a>(m: &'a Model, what: &str) -> Result<(&'a crate::connection::Chart, &'a crate::connection::TensorField2), InputError> {
    m.classical().ok_or_else(|| InputError(format!("{what} is not defined for models with odd coordinates")))
}

// compute --------------------------------------------------------------------

/// One printed component.
struct Entry {
    label: String,
    index: Vec<usize>,
    expr: String,
}

/// Whether `x` vanishes at every sample point of `dom`. Entries that cannot
/// be sampled are kept.
fn vanishes(x: &ScalarExpr, dom: &SamplingDomain) -> bool {
    x.is_zero() || matches!(eq_randomized(x, &ScalarExpr::zero(), dom), Ok(Verdict::Equal))
}

fn super_vanishes(x: &SuperScalar, dom: &SamplingDomain) -> bool {
    x.terms().all(|(_, c)| vanishes(c, dom))
}

/// `name^{upper}_{lower...}` from coordinate names.
fn label(name: &str, coords: &[String], upper: &[usize], lower: &[usize]) -> String {
    let join = |ix: &[usize]| ix.iter().map(|&i| coords[i].as_str()).collect::<Vec<_>>().join(" ");
    let mut s = name.to_string();
    if !upper.is_empty() {
        let _ = write!(s, "^{}", join(upper));
    }
    let _ = write!(s, "_{{{}}}", join(lower));
    s
}

fn classical_entries(
    c: &Components,
    coords: &[String],
    dom: &SamplingDomain,
    name: &str,
    split: impl Fn(&[usize]) -> (Vec<usize>, Vec<usize>),
) -> Vec<Entry> {
    c.indices()
        .zip(c.data())
        .filter(|(_, x)| !vanishes(x, dom))
        .map(|(idx, x)| {
            let (up, low) = split(&idx);
            Entry { label: label(name, coords, &up, &low), expr: x.display(coords).to_string(), index: idx }
        })
        .collect()
}

fn compute(quantity: Quantity, spec: &str) -> Result<Report, InputError> {
    let m = load(spec)?;
    let coords = m.coords().to_vec();
    let dom = m.domain().clone();
    let (what, layout, entries, total) = match (&m.geometry, quantity) {
        (Geometry::Classical { field, .. }, q) => {
            let conn = levi_civita_symbols(field);
            match q {
                Quantity::Christoffel => (
                    "christoffel",
                    "[alpha][mu][beta] = Gamma^alpha_{mu beta}, mu the direction, beta the argument",
                    classical_entries(conn.symbols(), &coords, &dom, "Γ", |i| (vec![i[0]], vec![i[1], i[2]])),
                    conn.symbols().data().len(),
                ),
                Quantity::Torsion => (
                    "torsion",
                    "[alpha][mu][beta] = T^alpha_{mu beta} = Gamma^alpha_{mu beta} - Gamma^alpha_{beta mu}",
                    classical_entries(conn.torsion(), &coords, &dom, "T", |i| (vec![i[0]], vec![i[1], i[2]])),
                    conn.torsion().data().len(),
                ),
                Quantity::Riemann | Quantity::Ricci => {
                    let cv = Curvature::of(&conn);
                    if q == Quantity::Riemann {
                        (
                            "riemann",
                            "[sigma][mu][delta][alpha] = R_{sigma mu delta}^alpha",
                            classical_entries(&cv.riemann, &coords, &dom, "R", |i| {
                                (vec![i[3]], vec![i[0], i[1], i[2]])
                            }),
                            cv.riemann.data().len(),
                        )
                    } else {
                        (
                            "ricci",
                            "[mu][delta] = Ric_{mu delta} = R_{mu alpha delta}^alpha",
                            classical_entries(&cv.ricci, &coords, &dom, "Ric", |i| (vec![], vec![i[0], i[1]])),
                            cv.ricci.data().len(),
                        )
                    }
                }
            }
        }
        (Geometry::Super { metric }, Quantity::Christoffel | Quantity::Riemann) => {
            let gamma = super_christoffel(metric);
            let (what, layout, table, split): (_, _, _, IndexSplit) =
                if quantity == Quantity::Christoffel {
                    ("christoffel", "[alpha][mu][beta] = Gamma_mu{}_beta^alpha", gamma, |i| {
                        (vec![i[0]], vec![i[1], i[2]])
                    })
                } else {
                    (
                        "riemann",
                        "[gamma][beta][alpha][nu] = R_{gamma beta}{}_alpha^nu",
                        super_riemann(metric, &gamma),
                        |i| (vec![i[3]], vec![i[0], i[1], i[2]]),
                    )
                };
            let name = if quantity == Quantity::Christoffel { "Γ" } else { "R" };
            let entries: Vec<Entry> = table
                .entries()
                .filter(|(_, x)| !super_vanishes(x, &dom))
                .map(|(idx, x)| {
                    let (up, low) = split(&idx);
                    Entry { label: label(name, &coords, &up, &low), expr: x.display(metric.chart()).to_string(), index: idx }
                })
                .collect();
            let total = table.entries().count();
            (what, layout, entries, total)
        }
        (Geometry::Super { .. }, _) => {
            return Err(InputError(format!(
                "{} is not defined for models with odd coordinates",
                if quantity == Quantity::Torsion { "torsion" } else { "ricci" }
            )))
        }
    };
    let mut table = format!("# compute {what} --model {}\n# layout {layout}\n", m.name);
    for e in &entries {
        let _ = writeln!(table, "{} = {}", e.label, e.expr);
    }
    let _ = writeln!(table, "# {} nonzero of {total} components", entries.len());
    Ok(Report {
        command: format!("compute {what}"),
        model: model_json(&m),
        results: Value::Array(
            entries.iter().map(|e| json!({"component": e.label, "index": e.index, "expr": e.expr})).collect(),
        ),
        report: json!({"layout": layout, "nonzero": entries.len(), "total": total}),
        table,
        passed: true,
    })
}

// geodesic -------------------------------------------------------------------

fn parse_vector(text: &str, what: &str) -> Result<Vec<f64>, InputError> {
    text.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|_| InputError(format!("bad {what} component `{t}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(InputError(format!("{what} component `{t}` is not finite")))
            }
        })
        .collect()
}

/// Parses `x1,...,xn;v1,...,vn`.
fn parse_start(text: &str) -> Result<CurveState, InputError> {
    let (pos, vel) = text
        .split_once(';')
        .ok_or_else(|| InputError("--start expects `x1,...,xn;v1,...,vn`".into()))?;
    Ok(CurveState { position: parse_vector(pos, "position")?, velocity: parse_vector(vel, "velocity")?, time: 0.0 })
}

fn geodesic(spec: &str, start: &str, steps: usize, t_end: f64) -> Result<Report, InputError> {
    let m = load(spec)?;
    let (chart, field) = classical_only(&m, "geodesic")?;
    let s0 = parse_start(start)?;
    if !t_end.is_finite() {
        return Err(InputError("--t-end must be finite".into()));
    }
    let conn = levi_civita_symbols(field);
    let traj = match integrate(&conn, chart.domain(), &s0, t_end, steps) {
        Ok(t) => t,
        Err(GeodesicError::DomainExit { last }) => {
            let report = json!({"status": "domain-exit", "last": state_json(&last)});
            return Ok(Report {
                command: "geodesic".into(),
                model: model_json(&m),
                results: Value::Array(vec![state_json(&last)]),
                report,
                table: format!(
                    "# geodesic --model {}\n# left the chart domain after t = {}\n{}\n",
                    m.name,
                    last.time,
                    state_row(&last)
                ),
                passed: false,
            });
        }
        Err(e) => return Err(input(e)),
    };
    let speeds = speed_along(field.g(), &traj).map_err(input)?;
    let (lo, hi) = speeds.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    let mut table = format!("# geodesic --model {}\n# t", m.name);
    for c in chart.names() {
        let _ = write!(table, " {c}");
    }
    for c in chart.names() {
        let _ = write!(table, " d{c}/dt");
    }
    table.push('\n');
    for s in &traj {
        table.push_str(&state_row(s));
        table.push('\n');
    }
    let _ = writeln!(table, "# g(v, v) ranges over [{lo}, {hi}]");
    Ok(Report {
        command: "geodesic".into(),
        model: model_json(&m),
        results: Value::Array(traj.iter().map(state_json).collect()),
        report: json!({
            "status": "ok",
            "steps": steps,
            "t_end": t_end,
            "speed_min": lo,
            "speed_max": hi,
        }),
        table,
        passed: true,
    })
}

fn state_json(s: &CurveState) -> Value {
    json!({"t": s.time, "position": s.position, "velocity": s.velocity})
}

fn state_row(s: &CurveState) -> String {
    let mut row = s.time.to_string();
    for v in s.position.iter().chain(&s.velocity) {
        let _ = write!(row, " {v}");
    }
    row
}

// check ----------------------------------------------------------------------

fn residual_json(r: &ResidualReport) -> (Value, Value) {
    let results = r
        .equations
        .iter()
        .map(|e| {
            json!({
                "equation": e.name,
                "max_abs": e.max_abs,
                "worst_point": e.worst_point,
                "components": e.components.iter().map(|c| json!({"index": c.index, "max_abs": c.max_abs})).collect::<Vec<_>>(),
            })
        })
        .collect();
    (Value::Array(results), json!({"tol": r.tol, "max_abs": r.max_abs(), "passed": r.passed}))
}

fn residual_table(r: &ResidualReport, coords: &[String]) -> String {
    let mut s = String::new();
    for e in &r.equations {
        let _ = writeln!(s, "{}: max |residual| = {:e} at {:?}", e.name, e.max_abs, e.worst_point);
        for c in &e.components {
            let names: Vec<&str> = c.index.iter().map(|&i| coords[i].as_str()).collect();
            let _ = writeln!(s, "  [{}] {:e}", names.join(" "), c.max_abs);
        }
    }
    let _ = writeln!(s, "# tolerance {:e}: {}", r.tol, if r.passed { "PASS" } else { "FAIL" });
    s
}

fn fit_json(f: &ConstantFit) -> Value {
    json!({
        "relation": f.relation,
        "constant": f.constant,
        "std_dev": f.std_dev,
        "points_used": f.points_used,
        "residual_after_fit": f.residual_after_fit,
        "reference_value": f.reference_value,
        "deviates_from_reference": f.deviates_from_reference(),
    })
}

fn fit_line(f: &ConstantFit) -> String {
    let mut s = format!(
        "{}: c = {}, std = {}, residual after fit = {:e}",
        f.relation,
        f.constant.map_or("undetermined".into(), |c| c.to_string()),
        f.std_dev.map_or("n/a".into(), |v| format!("{v:e}")),
        f.residual_after_fit
    );
    if let Some(p) = f.reference_value {
        let _ = write!(s, ", displayed value {p}{}", if f.deviates_from_reference() { " (DEVIATION)" } else { "" });
    }
    s
}

fn check(kind: CheckKind, spec: &str) -> Result<Report, InputError> {
    let m = load(spec)?;
    let (chart, field) = classical_only(&m, "check")?;
    let points = model_points(field, chart.domain(), DEFAULT_POINTS).map_err(input)?;
    let head = |what: &str| format!("# check {what} --model {} ({} points, seed {})\n", m.name, points.len(), m.options.seed);
    let (what, results, report, table, passed) = match kind {
        CheckKind::Natural | CheckKind::EinsteinSplit => {
            let (what, r) = if kind == CheckKind::Natural {
                ("natural", natural_residual(field, &points, RESIDUAL_TOL))
            } else {
                ("einstein-split", einstein_split_residual(field, &points, RESIDUAL_TOL))
            };
            let r = r.map_err(input)?;
            let (results, report) = residual_json(&r);
            (what, results, report, head(what) + &residual_table(&r, chart.names()), r.passed)
        }
        CheckKind::Decomposition => {
            let r = decomposition_check(field, &points).map_err(input)?;
            let fits = [&r.antisymmetric, &r.symmetric];
            let passed = fits.iter().all(|f| f.is_consistent(FIT_STD_TOL, RESIDUAL_TOL));
            let deviation = fits.iter().any(|f| f.deviates_from_reference());
            let mut table = head("decomposition");
            for f in fits {
                table.push_str(&fit_line(f));
                table.push('\n');
            }
            let _ = writeln!(table, "# {}", if passed { "PASS" } else { "FAIL" });
            (
                "decomposition",
                Value::Array(fits.iter().map(|f| fit_json(f)).collect()),
                json!({
                    "points": r.points,
                    "std_tol": FIT_STD_TOL,
                    "residual_tol": RESIDUAL_TOL,
                    "deviation_from_reference": deviation,
                    "passed": passed,
                }),
                table,
                passed,
            )
        }
    };
    Ok(Report { command: format!("check {what}"), model: model_json(&m), results, report, table, passed })
}

// selftest -------------------------------------------------------------------

fn run_selftest(filter: Option<&str>) -> Result<Report, InputError> {
    let chosen = selftest::select(filter);
    if chosen.is_empty() {
        return Err(InputError(format!("no criterion matches `{}`", filter.unwrap_or_default())));
    }
    let results: Vec<_> = chosen.into_iter().map(selftest::run_criterion).collect();
    let failed = results.iter().filter(|r| !r.passed).count();
    let mut table = String::new();
    for r in &results {
        let _ = writeln!(
            table,
            "{} {:>2} {} ({:.1} s)",
            if r.passed { "PASS" } else { "FAIL" },
            r.criterion.id,
            r.criterion.name,
            r.elapsed.as_secs_f64()
        );
        for d in &r.details {
            let _ = writeln!(table, "       {d}");
        }
    }
    let _ = writeln!(table, "# {} passed, {failed} failed", results.len() - failed);
    Ok(Report {
        command: "selftest".into(),
        model: Value::Null,
        results: Value::Array(
            results
                .iter()
                .map(|r| {
                    json!({
                        "id": r.criterion.id,
                        "name": r.criterion.name,
                        "statement": r.criterion.statement,
                        "passed": r.passed,
                        "details": r.details,
                    })
                })
                .collect(),
        ),
        report: json!({"passed": results.len() - failed, "failed": failed}),
        table,
        passed: failed == 0,
    })
}
