//! Model files and the built-in model library.
//!
//! A model file is one JSON object:
//!
//! ```text
//! { "chart": { "coords": [string], "parities": [0|1]?, "domain": { coord: [lo, hi] } },
//!   "tau": [[string]] | "metric": [[string]], "omega": [[string]]?,
//!   "options": { "seed": int, "trials": int, "tol": float, "depth": int } }
//! ```
//!
//! Every even coordinate needs a sampling interval; odd coordinates take
//! none. All `options` keys are optional.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connection::{compare_components, Chart, Components, ConnectionError, TensorField2};
use crate::expr::{ParseError, SamplingDomain, ScalarExpr};
use crate::forms::MAX_DEPTH;
use crate::supergeometry::{SuperChart, SuperError, SuperMetric};

/// Prefix addressing the built-in library instead of a file.
pub const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub chart: ChartSpec,
    #[serde(default)]
    pub tau: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub metric: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub omega: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub options: ModelOptions,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub coords: Vec<String>,
    #[serde(default)]
    pub parities: Option<Vec<u8>>,
    #[serde(default)]
    pub domain: BTreeMap<String, [f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelOptions {
    /// Seed of the sampler used for identity tests and sample points.
    pub seed: u64,
    /// Points per randomized identity test.
    pub trials: usize,
    /// Relative tolerance of randomized identity tests.
    pub tol: f64,
    /// Iteration depth of the form algebra.
    pub depth: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            seed: SamplingDomain::DEFAULT_SEED,
            trials: SamplingDomain::DEFAULT_TRIALS,
            tol: SamplingDomain::DEFAULT_TOL,
            depth: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("cannot read model file {path}: {message}")]
    Io { path: String, message: String },
    #[error("unknown built-in model `{name}`; available: {}", BUILTIN_NAMES.join(", "))]
    UnknownBuiltin { name: String },
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("expression at `{path}`: {source}")]
    Expression { path: String, source: ParseError },
    #[error("super expression at `{path}`: {source}")]
    SuperExpression { path: String, source: SuperError },
    #[error(transparent)]
    Connection(#[from] ConnectionError),
    #[error(transparent)]
    Super(#[from] SuperError),
}

impl ModelError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Schema { path: path.into(), message: message.into() }
    }
}

/// The geometric content of a validated model.
#[derive(Debug, Clone)]
pub enum Geometry {
    /// Even coordinates only: `τ = g + ω`.
    Classical { chart: Chart, field: TensorField2 },
    /// At least one odd coordinate: a supermetric.
    Super { metric: SuperMetric },
}

/// A validated model.
#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub options: ModelOptions,
    pub geometry: Geometry,
}

impl Model {
    pub fn coords(&self) -> &[String] {
        match &self.geometry {
            Geometry::Classical { chart, .. } => chart.names(),
            Geometry::Super { metric } => metric.chart().names(),
        }
    }

    /// Sampling domain of the even coordinates with the model's options.
    pub fn domain(&self) -> &SamplingDomain {
        match &self.geometry {
            Geometry::Classical { chart, .. } => chart.domain(),
            Geometry::Super { metric } => metric.chart().domain(),
        }
    }

    pub fn classical(&self) -> Option<(&Chart, &TensorField2)> {
        match &self.geometry {
            Geometry::Classical { chart, field } => Some((chart, field)),
            Geometry::Super { .. } => None,
        }
    }

    pub fn supermetric(&self) -> Option<&SuperMetric> {
        match &self.geometry {
            Geometry::Classical { .. } => None,
            Geometry::Super { metric } => Some(metric),
        }
    }
}

/// Names accepted after [`BUILTIN_PREFIX`].
pub const BUILTIN_NAMES: [&str; 10] = [
    "euclidean3",
    "minkowski4",
    "sphere2",
    "schwarzschild",
    "flat3-omega",
    "schwarzschild-omega",
    "flat4-omega",
    "plane2-omega",
    "super-1|2",
    "degenerate",
];

/// JSON source of a built-in model.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "euclidean3" => {
            r#"{"chart": {"coords": ["x", "y", "z"], "domain": {"x": [-5, 5], "y": [-5, 5], "z": [-5, 5]}},
                "metric": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]}"#
        }
        "minkowski4" => {
            r#"{"chart": {"coords": ["t", "x", "y", "z"],
                          "domain": {"t": [-5, 5], "x": [-5, 5], "y": [-5, 5], "z": [-5, 5]}},
                "metric": [["-1", "0", "0", "0"], ["0", "1", "0", "0"], ["0", "0", "1", "0"], ["0", "0", "0", "1"]]}"#
        }
        "sphere2" => {
            r#"{"chart": {"coords": ["theta", "phi"], "domain": {"theta": [0.3, 2.8], "phi": [-7, 7]}},
                "metric": [["1", "0"], ["0", "sin(theta)^2"]]}"#
        }
        "schwarzschild" => {
            r#"{"chart": {"coords": ["t", "r", "theta", "phi"],
                          "domain": {"t": [-100, 100], "r": [3, 10], "theta": [0.3, 2.8], "phi": [-7, 7]}},
                "metric": [["-(1 - 1/r)", "0", "0", "0"], ["0", "1/(1 - 1/r)", "0", "0"],
                           ["0", "0", "r^2", "0"], ["0", "0", "0", "r^2*sin(theta)^2"]]}"#
        }
        "flat3-omega" => {
            r#"{"chart": {"coords": ["x1", "x2", "x3"], "domain": {"x1": [-3, 3], "x2": [-3, 3], "x3": [-3, 3]}},
                "tau": [["1", "x3", "0"], ["-x3", "1", "0"], ["0", "0", "1"]]}"#
        }
        "schwarzschild-omega" => {
            r#"{"chart": {"coords": ["t", "r", "theta", "phi"],
                          "domain": {"t": [-10, 10], "r": [3, 10], "theta": [0.3, 2.8], "phi": [-3, 3]}},
                "metric": [["-(1 - 1/r)", "0", "0", "0"], ["0", "1/(1 - 1/r)", "0", "0"],
                           ["0", "0", "r^2", "0"], ["0", "0", "0", "r^2*sin(theta)^2"]],
                "omega": [["0", "r/20 + t/30", "0", "0"], ["-(r/20 + t/30)", "0", "0", "0"],
                          ["0", "0", "0", "theta*r/10"], ["0", "0", "-(theta*r/10)", "0"]]}"#
        }
        "flat4-omega" => {
            r#"{"chart": {"coords": ["x1", "x2", "x3", "x4"],
                          "domain": {"x1": [-2, 2], "x2": [-2, 2], "x3": [-2, 2], "x4": [-2, 2]}},
                "metric": [["1", "0", "0", "0"], ["0", "1", "0", "0"], ["0", "0", "1", "0"], ["0", "0", "0", "1"]],
                "omega": [["0", "sin(x3)", "0", "0"], ["-sin(x3)", "0", "0", "0"],
                          ["0", "0", "0", "0"], ["0", "0", "0", "0"]]}"#
        }
        "plane2-omega" => {
            r#"{"chart": {"coords": ["x", "y"], "domain": {"x": [-1, 1], "y": [-1, 1]}},
                "tau": [["1", "x*y + sin(x)"], ["-(x*y + sin(x))", "1"]]}"#
        }
        "super-1|2" => {
            r#"{"chart": {"coords": ["x", "th1", "th2"], "parities": [0, 1, 1], "domain": {"x": [0.5, 2]}},
                "metric": [["exp(x) + th1*th2*x", "x*th2", "0"], ["x*th2", "0", "1 + x^2"],
                           ["0", "-(1 + x^2)", "0"]]}"#
        }
        "degenerate" => {
            r#"{"chart": {"coords": ["x", "y"], "domain": {"x": [-1, 1], "y": [-1, 1]}},
                "metric": [["1", "x"], ["x", "x^2"]]}"#
        }
        _ => return None,
    })
}

/// Loads `builtin:NAME` from the library or reads a model file from disk.
pub fn load_model(spec: &str) -> Result<Model, ModelError> {
    if let Some(name) = spec.strip_prefix(BUILTIN_PREFIX) {
        let source = builtin_source(name).ok_or_else(|| ModelError::UnknownBuiltin { name: name.to_string() })?;
        return load_model_str(spec, source);
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| ModelError::Io { path: spec.to_string(), message: e.to_string() })?;
    load_model_str(spec, &text)
}

/// Parses and validates model JSON; `name` is recorded in the model.
pub fn load_model_str(name: &str, text: &str) -> Result<Model, ModelError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ModelFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ModelError::schema(path, e.into_inner().to_string())
    })?;
    Model::from_file(name, &file)
}

/// Which key supplied the main matrix.
fn main_matrix(file: &ModelFile) -> Result<(&'static str, &Vec<Vec<String>>), ModelError> {
    match (&file.tau, &file.metric) {
        (Some(t), None) => Ok(("tau", t)),
        (None, Some(m)) => Ok(("metric", m)),
        (Some(_), Some(_)) => Err(ModelError::schema("metric", "give either `tau` or `metric`, not both")),
        (None, None) => Err(ModelError::schema(".", "missing `tau` or `metric`")),
    }
}

fn check_shape(key: &str, rows: &[Vec<String>], n: usize) -> Result<(), ModelError> {
    if rows.len() != n {
        return Err(ModelError::schema(key, format!("{} rows for {n} coordinates", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(ModelError::schema(format!("{key}[{i}]"), format!("{} entries for {n} coordinates", r.len())));
        }
    }
    Ok(())
}

fn parse_matrix(key: &str, rows: &[Vec<String>], chart: &Chart) -> Result<Components, ModelError> {
    let parsed = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(|(j, s)| {
                    chart.parse(s).map_err(|source| ModelError::Expression { path: format!("{key}[{i}][{j}]"), source })
                })
                .collect::<Result<Vec<ScalarExpr>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Components::from_rows(parsed)?)
}

fn validate_options(o: &ModelOptions) -> Result<(), ModelError> {
    if o.trials == 0 {
        return Err(ModelError::schema("options.trials", "must be at least 1"));
    }
    if !(o.tol.is_finite() && o.tol > 0.0) {
        return Err(ModelError::schema("options.tol", "must be positive"));
    }
    if !(2..=MAX_DEPTH).contains(&o.depth) {
        return Err(ModelError::schema("options.depth", format!("must lie in 2..={MAX_DEPTH}")));
    }
    Ok(())
}

impl Model {
    /// Validates a parsed model file.
    pub fn from_file(name: &str, file: &ModelFile) -> Result<Model, ModelError> {
        let options = file.options;
        validate_options(&options)?;
        let coords = &file.chart.coords;
        let n = coords.len();
        let parities: Vec<bool> = match &file.chart.parities {
            None => vec![false; n],
            Some(p) => {
                if p.len() != n {
                    return Err(ModelError::schema(
                        "chart.parities",
                        format!("{} parities for {n} coordinates", p.len()),
                    ));
                }
                p.iter()
                    .enumerate()
                    .map(|(i, &v)| match v {
                        0 => Ok(false),
                        1 => Ok(true),
                        _ => Err(ModelError::schema(format!("chart.parities[{i}]"), "parity must be 0 or 1")),
                    })
                    .collect::<Result<_, _>>()?
            }
        };
        for key in file.chart.domain.keys() {
            match coords.iter().position(|c| c == key) {
                None => return Err(ModelError::schema(format!("chart.domain.{key}"), "not a chart coordinate")),
                Some(i) if parities[i] => {
                    return Err(ModelError::schema(format!("chart.domain.{key}"), "odd coordinates are not sampled"))
                }
                Some(_) => {}
            }
        }
        let mut intervals = Vec::new();
        for (c, _) in coords.iter().zip(&parities).filter(|(_, p)| !**p) {
            let [lo, hi] = *file
                .chart
                .domain
                .get(c)
                .ok_or_else(|| ModelError::schema(format!("chart.domain.{c}"), "missing sampling interval"))?;
            intervals.push((lo, hi));
        }
        let domain = SamplingDomain::new(intervals)
            .and_then(|d| d.with_trials(options.trials))
            .and_then(|d| d.with_tol(options.tol))
            .map_err(|e| ModelError::schema("chart.domain", e.to_string()))?
            .with_seed(options.seed);
        let (key, rows) = main_matrix(file)?;
        check_shape(key, rows, n)?;
        if let Some(w) = &file.omega {
            check_shape("omega", w, n)?;
        }
        let geometry = if parities.iter().any(|p| *p) {
            if file.omega.is_some() {
                return Err(ModelError::schema("omega", "a skew part is not supported with odd coordinates"));
            }
            let chart = SuperChart::new(coords.clone(), parities, domain)
                .map_err(|e| ModelError::schema("chart", e.to_string()))?;
            let g = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    r.iter()
                        .enumerate()
                        .map(|(j, s)| {
                            chart.parse(s).map_err(|source| ModelError::SuperExpression {
                                path: format!("{key}[{i}][{j}]"),
                                source,
                            })
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            Geometry::Super { metric: SuperMetric::new(&chart, g)? }
        } else {
            let chart = Chart::new(coords.clone(), domain).map_err(|e| ModelError::schema("chart.coords", e.to_string()))?;
            let main = parse_matrix(key, rows, &chart)?;
            if key == "metric" {
                let transposed = Components::from_fn(n, 2, |i| main.get(&[i[1], i[0]]).clone());
                compare_components("metric symmetry", &main, &transposed, chart.domain())
                    .map_err(|e| ModelError::schema("metric", format!("not symmetric: {e}")))?;
            }
            let tau = match &file.omega {
                None => main,
                Some(w) => {
                    let omega = parse_matrix("omega", w, &chart)?;
                    let negated = Components::from_fn(n, 2, |i| -omega.get(&[i[1], i[0]]));
                    compare_components("omega skew symmetry", &omega, &negated, chart.domain())
                        .map_err(|e| ModelError::schema("omega", format!("not skew-symmetric: {e}")))?;
                    main.zip_with(&omega, |a, b| a + b)
                }
            };
            let field = TensorField2::new(tau, chart.domain())?;
            Geometry::Classical { chart, field }
        };
        Ok(Model { name: name.to_string(), options, geometry })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_except_the_degenerate_one_loads() {
        for name in BUILTIN_NAMES {
            let r = load_model(&format!("{BUILTIN_PREFIX}{name}"));
            if name == "degenerate" {
                assert!(matches!(r, Err(ModelError::Connection(ConnectionError::Degenerate { .. }))), "{r:?}");
            } else {
                let m = r.unwrap_or_else(|e| panic!("{name}: {e}"));
                assert_eq!(m.name, format!("builtin:{name}"));
            }
        }
    }

    #[test]
    fn builtin_contents() {
        let e = load_model("builtin:euclidean3").unwrap();
        let (_, f) = e.classical().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(f.g().get(&[i, j]), &ScalarExpr::int(i64::from(i == j)));
            }
        }
        let s = load_model("builtin:schwarzschild").unwrap();
        assert_eq!(s.domain().intervals(), &[(-100.0, 100.0), (3.0, 10.0), (0.3, 2.8), (-7.0, 7.0)]);
        let w = load_model("builtin:flat3-omega").unwrap();
        let (c, f) = w.classical().unwrap();
        assert_eq!(f.omega().get(&[0, 1]), &c.parse("x3").unwrap());
        assert!(load_model("builtin:super-1|2").unwrap().supermetric().is_some());
    }

    fn err(text: &str) -> ModelError {
        load_model_str("test", text).unwrap_err()
    }

    #[test]
    fn schema_errors_carry_the_field_path() {
        let e = err(r#"{"chart": {"coords": ["x"], "domain": {"x": [0, 1]}}, "metric": [[1]]}"#);
        assert!(matches!(&e, ModelError::Schema { path, .. } if path == "metric[0][0]"), "{e}");
        let e = err(r#"{"chart": {"coords": ["x"], "domain": {"x": [0, 1]}}, "metric": [["1"]], "extra": 1}"#);
        assert!(matches!(&e, ModelError::Schema { message, .. } if message.contains("extra")), "{e}");
        let e = err(r#"{"chart": {"coords": ["x"], "domain": {"x": [0, 1]}}, "metric": [["1"]], "options": {"seed": -1}}"#);
        assert!(matches!(&e, ModelError::Schema { path, .. } if path == "options.seed"), "{e}");
        let e = err(r#"{"chart": {"coords": ["x", "y"], "domain": {"x": [0, 1]}}, "metric": [["1", "0"], ["0", "1"]]}"#);
        assert!(matches!(&e, ModelError::Schema { path, .. } if path == "chart.domain.y"), "{e}");
        let e = err(r#"{"chart": {"coords": ["x"], "domain": {"x": [0, 1], "q": [0, 1]}}, "metric": [["1"]]}"#);
        assert!(matches!(&e, ModelError::Schema { path, .. } if path == "chart.domain.q"), "{e}");
        let e = err(r#"{"chart": {"coords": ["x", "y"], "domain": {"x": [0, 1], "y": [0, 1]}}, "metric": [["1", "0"]]}"#);
        assert!(matches!(&e, ModelError::Schema { path, .. } if path == "metric"), "{e}");
        let e = err(r#"{"chart": {"coords": ["x"], "domain": {"x": [0, 1]}}}"#);
        assert!(matches!(&e, ModelError::Schema { .. }), "{e}");
        let e = err(r#"{"chart": {"coords": ["x"], "parities": [2], "domain": {"x": [0, 1]}}, "metric": [["1"]]}"#);
        assert!(matches!(&e, ModelError::Schema { path, .. } if path == "chart.parities[0]"), "{e}");
        let e = err(r#"{"chart": {"coords": ["x"], "domain": {"x": [1, 0]}}, "metric": [["1"]]}"#);
        assert!(matches!(&e, ModelError::Schema { path, .. } if path == "chart.domain"), "{e}");
        let e = err(r#"{"chart": {"coords": ["x"], "domain": {"x": [0, 1]}}, "metric": [["1"]], "options": {"depth": 1}}"#);
        assert!(matches!(&e, ModelError::Schema { path, .. } if path == "options.depth"), "{e}");
    }

    #[test]
    fn expression_errors_carry_location() {
        let e = err(r#"{"chart": {"coords": ["x", "y"], "domain": {"x": [0, 1], "y": [0, 1]}},
                        "tau": [["1", "x +"], ["0", "1"]]}"#);
        match e {
            ModelError::Expression { path, source } => {
                assert_eq!(path, "tau[0][1]");
                assert_eq!(source.position(), 3);
            }
            other => panic!("{other}"),
        }
        let e = err(r#"{"chart": {"coords": ["x"], "domain": {"x": [0, 1]}}, "metric": [["q"]]}"#);
        assert!(matches!(e, ModelError::Expression { source: ParseError::UnknownIdentifier { .. }, .. }));
    }

    #[test]
    fn symmetry_requirements() {
        let e = err(r#"{"chart": {"coords": ["x", "y"], "domain": {"x": [0, 1], "y": [0, 1]}},
                        "metric": [["1", "x"], ["0", "1"]]}"#);
        assert!(matches!(&e, ModelError::Schema { path, .. } if path == "metric"), "{e}");
        let e = err(r#"{"chart": {"coords": ["x", "y"], "domain": {"x": [0, 1], "y": [0, 1]}},
                        "metric": [["1", "0"], ["0", "1"]], "omega": [["0", "x"], ["x", "0"]]}"#);
        assert!(matches!(&e, ModelError::Schema { path, .. } if path == "omega"), "{e}");
        let e = err(r#"{"chart": {"coords": ["x", "th"], "parities": [0, 1], "domain": {"x": [0, 1]}},
                        "metric": [["1", "0"], ["0", "0"]], "omega": [["0", "0"], ["0", "0"]]}"#);
        assert!(matches!(&e, ModelError::Schema { path, .. } if path == "omega"), "{e}");
    }

    #[test]
    fn tau_with_omega_adds_up() {
        let m = load_model_str(
            "t",
            r#"{"chart": {"coords": ["x", "y"], "domain": {"x": [0, 1], "y": [0, 1]}},
                "tau": [["1", "x"], ["x", "1"]], "omega": [["0", "y"], ["-y", "0"]],
                "options": {"seed": 7, "trials": 5}}"#,
        )
        .unwrap();
        let (c, f) = m.classical().unwrap();
        assert_eq!(m.options.seed, 7);
        assert_eq!(m.domain().trials(), 5);
        assert_eq!(m.domain().seed(), 7);
        let expected = c.parse("x + y").unwrap();
        assert!(crate::expr::eq_randomized(f.tau().get(&[0, 1]), &expected, c.domain()).unwrap().is_equal());
    }

    #[test]
    fn missing_files_and_unknown_builtins() {
        assert!(matches!(load_model("/nonexistent/model.json"), Err(ModelError::Io { .. })));
        let e = load_model("builtin:torus").unwrap_err();
        assert!(e.to_string().contains("sphere2"), "{e}");
    }
}
