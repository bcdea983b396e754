use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn example(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(name)
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_concept-net"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_reports_counts() {
    let o = cli(&["validate", path(&example("salt.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "7 concepts, 2 layers, 4 patterns, 0 warnings\n");
}

#[test]
fn validate_json() {
    let o = cli(&[
        "validate",
        path(&example("pantry.json")),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["layers"], 3);
    assert_eq!(v["concepts"], 14);
}

#[test]
fn invalid_network_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"concepts": [{"name": "a", "layer": 0, "patterns": []}, {"name": "x", "layer": 1, "patterns": [["ghost"]]}]}"#,
    )
    .unwrap();
    let o = cli(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ghost"), "{}", stderr(&o));
}

#[test]
fn malformed_network_exits_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        "{\"concepts\": [\n  {\"name\": \"a\", \"layr\": 0}\n]}",
    )
    .unwrap();
    let o = cli(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("layr") && err.contains("line 2"), "{err}");
}

#[test]
fn missing_file_and_bad_usage_exit_two() {
    assert_eq!(
        cli(&["validate", "/nonexistent/net.json"]).status.code(),
        Some(2)
    );
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        cli(&["run", path(&example("salt.json"))]).status.code(),
        Some(2)
    );
}

#[test]
fn help_on_every_subcommand() {
    for sub in ["validate", "run", "check", "enumerate", "compare", "render"] {
        let o = cli(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
}

#[test]
fn run_prints_rejection() {
    let o = cli(&[
        "run",
        path(&example("salt.json")),
        path(&example("salt_reject.json")),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(
        text,
        "phase 1: FixedPoint after 2 sweeps\n  salt: Inferred\n  sugar: Inferred\n\
         phase 2: FixedPoint after 3 sweeps\n  salt: Rejected\n  sugar: Rejected\n"
    );
}

#[test]
fn run_writes_trace_matching_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = cli(&[
        "run",
        path(&example("salt.json")),
        path(&example("salt_reject.json")),
        "--trace",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let written = std::fs::read_to_string(&out).unwrap();
    assert_eq!(written, include_str!("golden/salt_reject.csv"));

    let r = cli(&["render", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    assert!(stdout(&r).contains("salty   |..|g..|"), "{}", stdout(&r));
}

#[test]
fn run_json_has_phase_verdicts() {
    let o = cli(&[
        "run",
        path(&example("pantry.json")),
        path(&example("pantry_anchovies.json")),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["phases"][0]["verdicts"]["anchovies"], "Inferred");
    assert_eq!(v["phases"][0]["termination"], "FixedPoint");
}

#[test]
fn run_rejects_bad_params() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    std::fs::write(&p, r#"{"w_ff": 0.4}"#).unwrap();
    let o = cli(&[
        "run",
        path(&example("salt.json")),
        path(&example("salt_reject.json")),
        "--params",
        p.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("w_ff"), "{}", stderr(&o));
}

#[test]
fn scenario_with_unknown_element_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.json");
    std::fs::write(
        &s,
        r#"{"phases": [{"clamp": {"umami": 1}, "hold": "converge"}]}"#,
    )
    .unwrap();
    let o = cli(&["run", path(&example("salt.json")), s.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("umami"));
}

#[test]
fn check_shows_missing_elements() {
    let o = cli(&[
        "check",
        path(&example("salt.json")),
        "--active",
        "looking,white,tasting",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("salt: InNone"), "{text}");
    assert!(text.contains("missing: salty"), "{text}");
    assert!(text.contains("missing: sweet"), "{text}");
}

#[test]
fn check_clamping_a_concept_exits_one() {
    let o = cli(&["check", path(&example("salt.json")), "--active", "salt"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn enumerate_stars_maximal() {
    let o = cli(&[
        "enumerate",
        path(&example("salt.json")),
        "--active",
        "looking,white",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "{salt,sugar}*\n{salt}\n{sugar}\n");

    let none = cli(&[
        "enumerate",
        path(&example("salt.json")),
        "--active",
        "tasting",
    ]);
    assert_eq!(stdout(&none), "no consistent interpretation\n");
}

#[test]
fn compare_summary_and_strict() {
    let o = cli(&["compare", path(&example("salt.json")), "--strict"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("32 cases: AGREE 32, TIE-SELECTED 0, DISAGREE 0\n"));

    let wta = cli(&[
        "compare",
        path(&example("salt.json")),
        "--params",
        path(&example("params_wta.json")),
    ]);
    assert_eq!(wta.status.code(), Some(0));
    assert!(stdout(&wta).contains("TIE-SELECTED 1, DISAGREE 2"));

    let strict = cli(&[
        "compare",
        path(&example("salt.json")),
        "--params",
        path(&example("params_wta.json")),
        "--strict",
    ]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn compare_json_counts() {
    let o = cli(&["compare", path(&example("salt.json")), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["total"], 32);
    assert_eq!(v["disagree"], 0);
    assert_eq!(v["cases"].as_array().unwrap().len(), 32);
}

#[test]
fn render_rejects_malformed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    std::fs::write(&p, "phase,sweep,kind,name\n1,1,concept,a\n").unwrap();
    assert_eq!(cli(&["render", p.to_str().unwrap()]).status.code(), Some(2));
}
