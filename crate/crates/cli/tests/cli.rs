use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sasakian"))
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

const PLANE: &str = r#"{"m": 1, "f": "x + z", "level": 0, "samples": 8}"#;

#[test]
fn axioms_pass_for_m1_and_m2() {
    let dir = TempDir::new().unwrap();
    for (name, body) in [("m1.json", PLANE), ("m2.json", r#"{"m": 2, "f": "x1 + z", "level": 0, "samples": 8}"#)] {
        let out = run(&["axioms"], &write_config(&dir, name, body));
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn injected_fault_fails_with_exit_1() {
    let dir = TempDir::new().unwrap();
    let out = run(&["axioms", "--test-fault", "flip-phi"], &write_config(&dir, "c.json", PLANE));
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = [
        ("unknown.json", r#"{"m": 1, "f": "x + z", "level": 0, "colour": 1}"#, "$.colour"),
        ("parse.json", r#"{"m": 1, "f": "x + (z", "level": 0}"#, "$.f"),
        ("syntax.json", r#"{"m": 1,"#, "error"),
        ("unbound.json", r#"{"m": 1, "f": "x2", "level": 0}"#, "$.f"),
    ];
    for (name, body, needle) in bad {
        let out = run(&["surface"], &write_config(&dir, name, body));
        assert_eq!(code(&out), 2, "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(needle), "{name}");
    }
    let out = run(&["surface"], &dir.path().join("missing.json"));
    assert_eq!(code(&out), 2);
    let out = run(&["surface", "--samples", "0"], &write_config(&dir, "ok.json", PLANE));
    assert_eq!(code(&out), 2);
}

#[test]
fn empty_level_set_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "e.json", r#"{"m": 1, "f": "x^2 + y^2 + z^2", "level": -1, "samples": 5}"#);
    assert_eq!(code(&run(&["surface"], &cfg)), 3);
}

fn json_report(dir: &TempDir, command: &str, cfg: &Path, name: &str) -> Value {
    let out_path = dir.path().join(name);
    let out = run(&[command, "--json-out", out_path.to_str().unwrap()], cfg);
    assert!(code(&out) <= 1, "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap()
}

#[test]
fn report_schema_keys() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", PLANE);
    let r = json_report(&dir, "surface", &cfg, "r.json");
    let keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(
        keys,
        [
            "accepted",
            "attempted",
            "checks",
            "command",
            "config",
            "data",
            "deta_convention",
            "findings",
            "k_adjudication",
            "rejected",
            "schema_version",
            "timestamp",
            "tool_version",
            "verdicts"
        ]
    );
    assert_eq!(r["schema_version"], "1.0.0");
    assert_eq!(r["command"], "surface");
    let row = &r["checks"][0];
    let row_keys: Vec<&str> = row.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(row_keys, ["informational", "max", "mean", "name", "passed", "path", "samples", "tolerance"]);
    assert!(r["timestamp"].as_str().unwrap().starts_with("unix:"));
    assert_eq!(r["config"]["seed"], 42);
}

#[test]
fn reports_are_byte_identical_apart_from_timestamp() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", r#"{"m": 1, "f": "x^2 + 2*y^2 + 0.3*x", "level": 1, "samples": 6}"#);
    for command in ["surface", "pseudohopf", "constants"] {
        let mut a = json_report(&dir, command, &cfg, "a.json");
        let mut b = json_report(&dir, command, &cfg, "b.json");
        a.as_object_mut().unwrap().remove("timestamp");
        b.as_object_mut().unwrap().remove("timestamp");
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap(), "{command}");
    }
}

#[test]
fn flags_override_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", PLANE);
    let out_path = dir.path().join("o.json");
    let out = run(
        &["surface", "--seed", "7", "--samples", "3", "--strategy", "fd", "--json-out", out_path.to_str().unwrap()],
        &cfg,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    assert_eq!(r["config"]["seed"], 7);
    assert_eq!(r["attempted"], 3);
    assert_eq!(r["config"]["strategy"], "fd");
    assert_eq!(r["config"]["tolerances"]["second_order"], 1e-4);
}

#[test]
fn constants_report_bound_at_m1() {
    let dir = TempDir::new().unwrap();
    let r = json_report(&dir, "constants", &write_config(&dir, "c.json", PLANE), "c.json.out");
    assert_eq!(r["data"]["constants"]["k_lemma"], 6.0);
    assert_eq!(r["data"]["constants"]["k_alt"], 4.0);
    assert!(r["verdicts"]["cmc_bound"].as_str().unwrap().contains("0.2"));
}

#[test]
fn published_schema_matches_reports() {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    let mut required: Vec<&str> = schema["required"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    required.sort_unstable();
    let row_required: Vec<&str> =
        schema["properties"]["checks"]["items"]["required"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();

    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", PLANE);
    for command in ["axioms", "curvature", "surface", "biharmonic", "pseudohopf", "constants"] {
        let r = json_report(&dir, command, &cfg, "s.json");
        let keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, required, "{command}");
        assert_eq!(r["schema_version"], schema["properties"]["schema_version"]["const"]);
        for row in r["checks"].as_array().unwrap() {
            for key in &row_required {
                assert!(row.get(*key).is_some(), "{command}: {key}");
            }
        }
    }
}
