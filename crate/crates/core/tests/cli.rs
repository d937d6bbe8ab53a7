use std::process::Command;

use iterforms::cli::run_command;
use serde_json::Value;

fn run(args: &[&str]) -> iterforms::cli::Outcome {
    let mut argv = vec!["iterforms"];
    argv.extend_from_slice(args);
    run_command(&argv)
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    let out = run(&a);
    (out.code, serde_json::from_str(&out.stdout).unwrap_or(Value::Null))
}

#[test]
fn sphere_christoffel_table() {
    let out = run(&["compute", "christoffel", "--model", "builtin:sphere2"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("Γ^theta_{phi phi} = -sin(theta)*cos(theta)"), "{}", out.stdout);
    assert!(out.stdout.contains("Γ^phi_{theta phi}"));
    assert!(!out.stdout.contains("Γ^theta_{theta theta}"));
}

#[test]
fn schwarzschild_natural_check_passes() {
    let (code, doc) = json(&["check", "natural", "--model", "builtin:schwarzschild"]);
    assert_eq!(code, 0);
    assert_eq!(doc["command"], "check natural");
    assert_eq!(doc["model"]["name"], "builtin:schwarzschild");
    assert!(doc["report"]["max_abs"].as_f64().unwrap() < 1e-8);
    assert_eq!(doc["report"]["passed"], true);
    assert_eq!(doc["results"][0]["components"].as_array().unwrap().len(), 16);
}

#[test]
fn degenerate_metric_is_an_input_error() {
    let out = run(&["compute", "ricci", "--model", "builtin:degenerate"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("degenerate metric"), "{}", out.stderr);
    assert!(out.stdout.is_empty());
}

#[test]
fn failing_residuals_exit_with_one() {
    let (code, doc) = json(&["check", "einstein-split", "--model", "builtin:sphere2"]);
    assert_eq!(code, 1);
    assert_eq!(doc["report"]["passed"], false);
    assert!((doc["results"][0]["max_abs"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(doc["results"][1]["max_abs"].as_f64().unwrap() == 0.0);
}

#[test]
fn decomposition_reports_the_deviation() {
    let (code, doc) = json(&["check", "decomposition", "--model", "builtin:flat4-omega"]);
    assert_eq!(code, 0);
    assert_eq!(doc["report"]["deviation_from_reference"], true);
    let c = doc["results"][1]["constant"].as_f64().unwrap();
    assert!((c + 2.25).abs() < 1e-9, "{c}");
    assert_eq!(doc["results"][1]["reference_value"].as_f64().unwrap(), 0.5625);
    let (code, doc) = json(&["check", "decomposition", "--model", "builtin:sphere2"]);
    assert_eq!(code, 0);
    assert!(doc["results"][0]["constant"].is_null());
}

#[test]
fn geodesic_trajectory() {
    let (code, doc) = json(&[
        "geodesic",
        "--model",
        "builtin:sphere2",
        "--start",
        "1.5707963267948966,0;0,1",
        "--steps",
        "100",
        "--t-end",
        "3",
    ]);
    assert_eq!(code, 0);
    let traj = doc["results"].as_array().unwrap();
    assert_eq!(traj.len(), 101);
    assert_eq!(traj[100]["t"].as_f64().unwrap(), 3.0);
    assert!((traj[100]["position"][1].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert!((doc["report"]["speed_max"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let out = run(&["geodesic", "--model", "builtin:euclidean3", "--start", "0,0,0;-1,0,0", "--steps", "4", "--t-end", "1"]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout.lines().filter(|l| !l.starts_with('#')).count(), 5);
}

#[test]
fn geodesic_errors() {
    let base = ["geodesic", "--model", "builtin:euclidean3", "--steps", "10", "--t-end", "20", "--start"];
    let with = |start: &str| {
        let mut a = base.to_vec();
        a.push(start);
        run(&a)
    };
    let out = with("0,0,0;1,0,0");
    assert_eq!(out.code, 1, "{}", out.stdout);
    assert!(out.stdout.contains("left the chart domain"));
    assert_eq!(with("0,0;1,0").code, 2);
    assert_eq!(with("0,0,0").code, 2);
    assert_eq!(with("9,0,0;1,0,0").code, 2);
    assert_eq!(with("a,0,0;1,0,0").code, 2);
    assert_eq!(with("inf,0,0;1,0,0").code, 2);
    let out = run(&["geodesic", "--model", "builtin:euclidean3", "--start", "0,0,0;1,0,0", "--steps", "0", "--t-end", "1"]);
    assert_eq!(out.code, 2);
}

#[test]
fn super_models() {
    let out = run(&["compute", "christoffel", "--model", "builtin:super-1|2"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("th1*th2"), "{}", out.stdout);
    assert_eq!(run(&["compute", "riemann", "--model", "builtin:super-1|2"]).code, 0);
    for args in [
        &["compute", "torsion", "--model", "builtin:super-1|2"][..],
        &["compute", "ricci", "--model", "builtin:super-1|2"],
        &["check", "natural", "--model", "builtin:super-1|2"],
    ] {
        let out = run(args);
        assert_eq!(out.code, 2, "{args:?}");
        assert!(out.stderr.contains("odd coordinates"));
    }
}

#[test]
fn argument_and_model_errors() {
    assert_eq!(run(&["compute", "christoffel"]).code, 2);
    assert_eq!(run(&["compute", "curvature", "--model", "builtin:sphere2"]).code, 2);
    assert_eq!(run(&["compute", "christoffel", "--model", "builtin:torus"]).code, 2);
    assert_eq!(run(&["compute", "christoffel", "--model", "builtin:sphere2", "--format", "xml"]).code, 2);
    assert_eq!(run(&["selftest", "--filter", "no-such-criterion"]).code, 2);
    let out = run(&["--help"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("selftest"));
}

#[test]
fn model_files_from_disk() {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let good = dir.join("cli_model_good.json");
    std::fs::write(
        &good,
        r#"{"chart": {"coords": ["u", "v"], "domain": {"u": [0.5, 1.5], "v": [-1, 1]}},
            "metric": [["1", "0"], ["0", "u^2"]], "options": {"seed": 9}}"#,
    )
    .unwrap();
    let (code, doc) = json(&["compute", "christoffel", "--model", good.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(doc["model"]["options"]["seed"], 9);
    assert_eq!(doc["results"][0]["component"], "Γ^u_{v v}");
    assert_eq!(doc["results"][0]["expr"], "-u");
    let bad = dir.join("cli_model_bad.json");
    std::fs::write(&bad, r#"{"chart": {"coords": ["u"], "domain": {"u": [0, 1]}}, "metric": [["u +* 1"]]}"#).unwrap();
    let out = run(&["compute", "christoffel", "--model", bad.to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("metric[0][0]") && out.stderr.contains("position 3"), "{}", out.stderr);
    let out = run(&["compute", "christoffel", "--model", dir.join("missing.json").to_str().unwrap()]);
    assert_eq!(out.code, 2);
}

#[test]
fn json_output_is_byte_identical_across_runs() {
    let invocations: [&[&str]; 5] = [
        &["compute", "riemann", "--model", "builtin:schwarzschild-omega", "--format", "json"],
        &["check", "decomposition", "--model", "builtin:schwarzschild-omega", "--format", "json"],
        &["check", "einstein-split", "--model", "builtin:flat4-omega", "--format", "json"],
        &["geodesic", "--model", "builtin:flat3-omega", "--start", "0.1,0,0;0.3,0.2,-0.1", "--steps", "50", "--t-end", "2", "--format", "json"],
        &["selftest", "--filter", "decomposition", "--format", "json"],
    ];
    for args in invocations {
        let a = run(args);
        let b = run(args);
        assert_eq!(a, b, "{args:?}");
        assert!(!a.stdout.is_empty());
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_iterforms");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap();
    let ok = status(&["compute", "christoffel", "--model", "builtin:sphere2"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("-sin(theta)*cos(theta)"));
    assert_eq!(status(&["compute", "ricci", "--model", "builtin:degenerate"]).status.code(), Some(2));
    assert_eq!(status(&["check", "einstein-split", "--model", "builtin:sphere2"]).status.code(), Some(1));
    let a = status(&["check", "natural", "--model", "builtin:schwarzschild", "--format", "json"]);
    let b = status(&["check", "natural", "--model", "builtin:schwarzschild", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
}
