use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(verb: &str, config: &Path, out: &Path) -> (i32, Value) {
    let status = Command::new(env!("CARGO_BIN_EXE_kjlab"))
        .args([verb, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    let code = status.status.code().expect("exit code");
    let summary = fs::read_to_string(out.join("summary.json"))
        .map(|s| serde_json::from_str(&s).expect("summary is JSON"))
        .unwrap_or(Value::Null);
    (code, summary)
}

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.json");
    fs::write(&path, text).unwrap();
    path
}

const SMALL_FLOW: &str = r#"{
    "grid": {"n": 1, "N": 16},
    "twist": {"chi0": [[-1.0]], "psi": {"kind": "random", "amplitude": 0.3}, "beta": 0.3},
    "seed": 3,
    "task": {"kind": "flow", "start": {"kind": "random", "amplitude": 0.2}, "config": {"record_every": 10}, "write_snapshots": true}
}"#;

#[test]
fn flow_is_deterministic_and_csv_matches_records() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(tmp.path(), SMALL_FLOW);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (code, summary) = run("flow", &cfg, &a);
    assert_eq!(code, 0, "{summary}");
    assert_eq!(run("flow", &cfg, &b).0, 0);
    for name in [
        "flow.csv",
        "summary.json",
        "final_phi.field",
        "snapshot_00000.field",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let csv = fs::read_to_string(a.join("flow.csv")).unwrap();
    let records = summary["results"]["records"].as_u64().unwrap() as usize;
    assert_eq!(csv.lines().count(), records + 1);
    assert!(csv.starts_with("t,J_beta,E_beta,"));
    let snapshots = fs::read_dir(&a).unwrap().filter(|e| {
        e.as_ref()
            .unwrap()
            .file_name()
            .to_string_lossy()
            .starts_with("snapshot_")
    });
    assert_eq!(snapshots.count(), records);
    let names: Vec<&str> = summary["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for want in [
        "converged",
        "maximum_principle",
        "monotone_frakJ",
        "flow_matches_oracle",
    ] {
        assert!(names.contains(&want), "{want} in {names:?}");
    }
    assert!(summary["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["anchor"].as_str().is_some_and(|s| !s.is_empty())));
    // No temporary files are left behind.
    assert!(fs::read_dir(&a).unwrap().all(|e| !e
        .unwrap()
        .file_name()
        .to_string_lossy()
        .ends_with(".tmp")));
}

#[test]
fn degenerate_constant_is_a_structured_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, summary) = run("flow", &fixture("degenerate.json"), tmp.path());
    assert_eq!(code, 1);
    assert_eq!(summary["error"]["kind"], "DegenerateConstant");
    assert_eq!(summary["pass"], false);
}

#[test]
fn violating_fixture_reports_not_elliptic() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, summary) = run("flow", &fixture("not_elliptic.json"), tmp.path());
    assert_eq!(code, 1);
    assert_eq!(summary["error"]["kind"], "NotElliptic");
}

#[test]
fn empty_functionals_pass_with_no_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(
        tmp.path(),
        r#"{"grid": {"n": 1, "N": 8}, "twist": {"chi0": [[-1.0]], "beta": 0.0}, "task": {"kind": "functionals"}}"#,
    );
    let (code, summary) = run("functionals", &cfg, &tmp.path().join("out"));
    assert_eq!(code, 0);
    assert_eq!(summary["checks"].as_array().unwrap().len(), 0);
    let csv = fs::read_to_string(tmp.path().join("out/functionals.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn functionals_fixture_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, summary) = run("functionals", &fixture("functionals_n2.json"), tmp.path());
    assert_eq!(code, 0, "{summary}");
    let csv = fs::read_to_string(tmp.path().join("functionals.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 + 4);
}

#[test]
fn geodesic_fixture_and_failing_check() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, summary) = run(
        "geodesic",
        &fixture("geodesic_n1.json"),
        &tmp.path().join("ok"),
    );
    assert_eq!(code, 0, "{summary}");
    let csv = fs::read_to_string(tmp.path().join("ok/geodesic.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 17);
    let d = summary["results"]["distance"].as_f64().unwrap();
    assert!((d - summary["results"]["reverse_distance"].as_f64().unwrap()).abs() < 1e-9);

    // An unreachable residual threshold fails one asserted check: exit 2.
    let text = fs::read_to_string(fixture("geodesic_n1.json"))
        .unwrap()
        .replace("\"symmetry\": true", "\"residual_tol\": 1e-15");
    let cfg = write_scenario(tmp.path(), &text);
    let (code, summary) = run("geodesic", &cfg, &tmp.path().join("bad"));
    assert_eq!(code, 2, "{summary}");
    let failing: Vec<&Value> = summary["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .collect();
    assert_eq!(failing.len(), 1);
    assert_eq!(failing[0]["name"], "geodesic_residual");
}

#[test]
fn config_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_scenario(
        tmp.path(),
        &SMALL_FLOW.replace("\"seed\": 3", "\"seed\": 3, \"sede\": 4"),
    );
    assert_eq!(run("flow", &bad, &tmp.path().join("x")).0, 1);
    let ok = write_scenario(tmp.path(), SMALL_FLOW);
    // Verb and task disagree.
    assert_eq!(run("geodesic", &ok, &tmp.path().join("y")).0, 1);
    assert_eq!(
        run(
            "flow",
            &tmp.path().join("missing.json"),
            &tmp.path().join("z")
        )
        .0,
        1
    );
}

#[test]
fn potential_from_file() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) = run(
        "flow",
        &write_scenario(tmp.path(), SMALL_FLOW),
        &tmp.path().join("run"),
    );
    assert_eq!(code, 0);
    fs::copy(
        tmp.path().join("run/final_phi.field"),
        tmp.path().join("limit.field"),
    )
    .unwrap();
    let text = SMALL_FLOW.replace(
        r#""start": {"kind": "random", "amplitude": 0.2}"#,
        r#""start": {"kind": "file", "path": "limit.field"}"#,
    );
    let (code, summary) = run(
        "flow",
        &write_scenario(tmp.path(), &text),
        &tmp.path().join("again"),
    );
    assert_eq!(code, 0, "{summary}");
    // Starting from the limit, the flow stops almost at once.
    assert!(summary["results"]["steps"].as_u64().unwrap() < 50);
}

#[test]
fn flow_with_ray() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, summary) = run("flow", &fixture("flow_n1.json"), tmp.path());
    assert_eq!(code, 0, "{summary}");
    let ray = fs::read_to_string(tmp.path().join("ray.csv")).unwrap();
    assert_eq!(ray.lines().count(), 1 + 3);
}

#[test]
fn verify_reduced_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, summary) = run("verify", &fixture("verify_n1.json"), tmp.path());
    assert_eq!(code, 0, "{summary}");
    let checks = summary["checks"].as_array().unwrap();
    assert!(checks.len() >= 25, "{}", checks.len());
    assert_eq!(summary["results"]["criteria"].as_array().unwrap().len(), 11);
}
