//! End-to-end runs of the command-line binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use trishare::cli::config::{parse_scenario, render_scenario};

const GHZ_MERMIN_2: &str = r#"
id = "ghz-mermin-2"

[state]
kind = "ghz"

[alice]
setting0 = { theta = "pi*0.5", phi = "pi*0.5" }
setting1 = { theta = "pi*0.5", phi = 0.0 }

[bob]
setting0 = { theta = "pi/2", phi = "pi/2" }
setting1 = { theta = "pi/2", phi = 0 }

[[charlie]]
lambda = 0.525
setting0 = { theta = "pi*0.5", phi = "pi*0.5" }
setting1 = { theta = "pi*0.5", phi = 0.0 }

[[charlie]]
lambda = 1.0
setting0 = { theta = "pi*0.5", phi = "pi*0.5" }
setting1 = { theta = "pi*0.5", phi = 0.0 }
"#;

fn trishare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trishare")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn evaluate_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "s.toml", GHZ_MERMIN_2);
    let o = trishare(&["evaluate", "--config", &config]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["scenario_id"], "ghz-mermin-2");
    assert_eq!(v["schedule"], serde_json::json!([0.525, 1.0]));
    let m2 = v["charlies"][1]["mermin"].as_f64().unwrap();
    assert!((m2 - 3.70).abs() < 0.01);
    assert!(stderr(&o).contains("m=2, lambda=1.0000, M=3.70"));
}

#[test]
fn evaluate_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "s.toml", GHZ_MERMIN_2);
    let out = dir.path().join("r.csv");
    let o = trishare(&["evaluate", "--config", &config, "--format", "csv", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario_id,m,lambda_m,M_m,S_m,c000,c001,c010,c011,c100,c101,c110,c111"
    );
    let row: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..3], &["ghz-mermin-2", "2", "1.0"]);
    assert!((row[3].parse::<f64>().unwrap() - 3.7022).abs() < 1e-4);
}

#[test]
fn zero_sharpness_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "s.toml", &GHZ_MERMIN_2.replace("lambda = 0.525", "lambda = 0.0"));
    let o = trishare(&["evaluate", "--config", &config]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("charlie[1].lambda"), "{err}");
    assert!(err.contains("(0, 1]"), "{err}");
}

#[test]
fn unsharp_final_needs_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "s.toml", &GHZ_MERMIN_2.replace("lambda = 1.0", "lambda = 0.9"));
    let o = trishare(&["evaluate", "--config", &config]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("charlie[2].lambda"));
    let o = trishare(&["evaluate", "--config", &config, "--allow-unsharp-final"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn malformed_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "s.toml", &GHZ_MERMIN_2.replace("kind = \"ghz\"", "kind = ghz"));
    let o = trishare(&["evaluate", "--config", &config]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let config = write(dir.path(), "t.toml", &GHZ_MERMIN_2.replace("phi = \"pi/2\"", "phi = \"half pi\""));
    let o = trishare(&["evaluate", "--config", &config]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bob.setting0.phi"), "{}", stderr(&o));

    let o = trishare(&["evaluate", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = trishare(&["evaluate", "--format", "xml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rendered_config_round_trips() {
    let first = parse_scenario(GHZ_MERMIN_2, false).unwrap();
    let text = render_scenario(first.id.as_deref(), &first.scenario);
    let again = parse_scenario(&text, false).unwrap();
    assert_eq!(first.id, again.id);
    assert_eq!(first.scenario, again.scenario);
    assert_eq!(render_scenario(again.id.as_deref(), &again.scenario), text);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["optimize", "--kind", "svetlichny", "--threshold", "4.2", "--budget", "20000", "--restarts", "8", "--seed", "5"];
    let a = trishare(&args);
    let b = trishare(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["feasible"], true);
    assert!((v["best_value"].as_f64().unwrap() - 4.72).abs() < 0.01);
    // the embedded config evaluates to the same numbers
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "best.toml", v["config"].as_str().unwrap());
    let e = trishare(&["evaluate", "--config", &config]);
    let ev: serde_json::Value = serde_json::from_slice(&e.stdout).unwrap();
    assert_eq!(ev["charlies"], v["report"]["charlies"]);
}

#[test]
fn max_observers_flag() {
    let o = trishare(&["optimize", "--kind", "svetlichny", "--max-observers", "--budget", "20000", "--restarts", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["count"], 2);
}

#[test]
fn sweep_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "s.toml", GHZ_MERMIN_2);
    let o = trishare(&["sweep", "--config", &config, "--grid", "0.1:1.0:0.1", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    // header + 10 points × 2 Charlies
    assert_eq!(text.lines().count(), 21);
    assert!(text.lines().nth(1).unwrap().starts_with("ghz-mermin-2#0,1,0.1,"));
    let o = trishare(&["sweep", "--config", &config, "--grid", "0.1:1.0:0.1", "--budget", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_check_passes() {
    let o = trishare(&["oracle-check", "--draws", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.is_object());
}
