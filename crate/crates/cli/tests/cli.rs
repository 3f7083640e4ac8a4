use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn hornlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hornlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn build_preset_passes() {
    let out = hornlab(&["build", "--preset", "positive-k"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["params"]["regime"], "positive-k");
}

#[test]
fn build_open_regime_constants() {
    let out = hornlab(&[
        "build",
        "--regime",
        "nonpositive-k",
        "--rho",
        "0.1",
        "--epsilon",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((v["constants"]["a"].as_f64().unwrap() - 0.1).abs() < 1e-15);
    assert!((v["constants"]["xi"].as_f64().unwrap() - 0.05).abs() < 1e-15);
}

#[test]
fn arccos_domain_error_exits_two() {
    let out = hornlab(&["build", "--rho", "2", "--epsilon", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert_eq!(stderr_json(&out)["error"], "DomainError");
}

#[test]
fn invalid_parameters_exit_one() {
    let out = hornlab(&["build", "--eta", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "ConfigError");
}

#[test]
fn usage_errors_are_json() {
    let out = hornlab(&["certify-curvature", "--grid-points", "many"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "UsageError");
    let out = hornlab(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = hornlab(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("reproduce"));
}

#[test]
fn steep_horn_fails_in_the_radial_direction() {
    let out = hornlab(&[
        "certify-curvature",
        "--metric",
        "horn",
        "--epsilon",
        "0.5",
        "--eta",
        "0.1",
        "--K",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert_eq!(v["report"]["verdict"], "FAIL");
    assert_eq!(v["report"]["worst_direction"], "radial");
}

#[test]
fn flat_decay_is_finite_order_one() {
    let out = hornlab(&["decay", "--field", "flat-linear"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "FiniteOrder(1)");
    assert_eq!(v["consistent"], true);
}

#[test]
fn density_controls() {
    assert_eq!(hornlab(&["check-density"]).status.code(), Some(0));
    let out = hornlab(&["check-density", "--density", "quadratic"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["verdict"], "FAIL");
}

#[test]
fn reproduce_summary_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = hornlab(&[
        "reproduce",
        "--preset",
        "positive-k",
        "--K",
        "0.01",
        "--out",
        out_dir,
        "--svg",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for line in [
        "curvature: PASS",
        "vertex-avoidance: PASS",
        "decay: InfiniteOrder",
        "counterexample: PASS",
    ] {
        assert!(text.contains(line), "missing '{line}' in\n{text}");
    }
    let summary: Value = serde_json::from_slice(&read(dir.path(), "summary.json")).unwrap();
    assert_eq!(summary["verdict"], "PASS");
    assert_eq!(summary["decay"]["verdict"], "InfiniteOrder");
    let svg = String::from_utf8(read(dir.path(), "decay.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let bytes = read(dir.path(), "decay.csv");
    let mut csv = csv::Reader::from_reader(&bytes[..]);
    assert_eq!(
        csv.headers().unwrap(),
        vec!["r", "log_q", "log_m", "effective_order"]
    );
    assert!(csv.records().count() > 100);
}

#[test]
fn fixed_seed_gives_identical_files() {
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = hornlab(&[
            "check-geodesics",
            "--pairs",
            "500",
            "--exact-pairs",
            "4",
            "--seed",
            seed,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        (
            read(dir.path(), "geodesics.csv"),
            read(dir.path(), "geodesics.json"),
        )
    };
    let (a, b, c) = (run("7"), run("7"), run("8"));
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        r#"{"regime": "nonpositive-k", "rho": 0.1, "epsilon": 0.5}"#,
    )
    .unwrap();
    let out = hornlab(&[
        "build",
        "--config",
        config.to_str().unwrap(),
        "--epsilon",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["params"]["epsilon"], 1.0);
    assert!((v["constants"]["a"].as_f64().unwrap() - 0.1).abs() < 1e-15);

    let missing = hornlab(&[
        "build",
        "--config",
        dir.path().join("absent.json").to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(1));
    assert_eq!(stderr_json(&missing)["error"], "IoError");
}

#[test]
fn svg_needs_an_output_directory() {
    let out = hornlab(&["certify-curvature", "--svg"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_cap_is_validated() {
    let run = |value: &str| {
        Command::new(env!("CARGO_BIN_EXE_hornlab"))
            .args(["check-density"])
            .env("HORNLAB_THREADS", value)
            .output()
            .unwrap()
    };
    assert_eq!(run("1").status.code(), Some(0));
    let bad = run("zero");
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(stderr_json(&bad)["error"], "ConfigError");
}

#[test]
fn three_circle_requires_the_open_regime() {
    let out = hornlab(&["three-circle", "--preset", "positive-k"]);
    assert_eq!(out.status.code(), Some(1));
    let out = hornlab(&[
        "three-circle",
        "--preset",
        "nonpositive-k",
        "--sweep-points",
        "12",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["conical_hold"], true);
    assert_eq!(v["admissible"], true);
}

#[test]
fn solve_reports_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let out = hornlab(&[
        "solve",
        "--field",
        "flat-linear",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!(
        (v["boundary_sup"].as_f64().unwrap() - (3.0 / (4.0 * std::f64::consts::PI)).sqrt()).abs()
            < 1e-6
    );
    let field: Value = serde_json::from_slice(&read(dir.path(), "field.json")).unwrap();
    assert!(field.is_object());
}
