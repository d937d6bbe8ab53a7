use std::path::Path;

use iterforms::cli::model::load_model_str;
use iterforms::expr::{parse, SamplingDomain};
use iterforms::supergeometry::SuperChart;
use proptest::prelude::*;

const NAMES: [&str; 4] = ["x", "y", "theta", "r"];

fn super_chart() -> SuperChart {
    let names = ["x", "th1", "th2"].map(String::from).to_vec();
    SuperChart::new(names, vec![false, true, true], SamplingDomain::new(vec![(0.5, 2.0)]).unwrap()).unwrap()
}

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn parse_expr_seeds() {
    let outcomes: Vec<_> = seeds("parse_expr").into_iter().map(|(n, s)| (n, parse(&s, &NAMES).is_ok())).collect();
    assert!(outcomes.contains(&("seed_trig".into(), true)));
    assert!(outcomes.contains(&("seed_unbalanced".into(), false)));
}

#[test]
fn load_model_seeds() {
    for (name, text) in seeds("load_model") {
        let ok = load_model_str(&name, &text).is_ok();
        let expected = !matches!(name.as_str(), "seed_degenerate.json" | "seed_bad_schema.json");
        assert_eq!(ok, expected, "{name}");
    }
}

#[test]
fn super_parse_seeds() {
    let chart = super_chart();
    for (name, text) in seeds("super_parse") {
        let ok = chart.parse(&text).is_ok();
        assert_eq!(ok, name != "seed_odd_argument", "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parsers_never_panic(s in "[ -~]{0,40}") {
        let _ = parse(&s, &NAMES);
        let _ = super_chart().parse(&s);
        let _ = load_model_str("prop", &s);
    }

    #[test]
    fn expression_shaped_input_never_panics(s in "[xyr0-9+*/^()., -]{0,30}|sin\\([xy^0-9+-]{0,10}\\)") {
        let _ = parse(&s, &NAMES);
        let _ = super_chart().parse(&s.replace('y', "th1"));
    }
}
