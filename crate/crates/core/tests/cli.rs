use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_backscatter-lab"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("backscatter-lab-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn text(o: &Output) -> (String, String) {
    (String::from_utf8_lossy(&o.stdout).into_owned(), String::from_utf8_lossy(&o.stderr).into_owned())
}

#[test]
fn every_shipped_scenario_validates() {
    for entry in fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        let out = bin().args(["validate", "--scenario"]).arg(&path).output().unwrap();
        let (stdout, stderr) = text(&out);
        assert!(out.status.success(), "{}: {stderr}", path.display());
        assert!(stdout.contains("valid"), "{stdout}");
    }
}

#[test]
fn harmonics_run_writes_summary_and_passes() {
    let dir = scratch("harmonics");
    let out = bin()
        .args(["run", "--threads", "1", "--seed", "7", "--scenario"])
        .arg(scenario("harmonics.json"))
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    let (stdout, stderr) = text(&out);
    assert!(out.status.success(), "{stdout}{stderr}");
    assert!(stdout.lines().any(|l| l.starts_with("PASS")), "{stdout}");
    assert!(!stdout.contains("FAIL"), "{stdout}");
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    assert_eq!(summary["seed"], 7);
    assert!(dir.join("harmonics.csv").exists());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn unknown_field_is_a_schema_error_with_path() {
    let dir = scratch("schema");
    let file = dir.join("bad.json");
    fs::write(&file, r#"{"kind":"radon","potential":{"variant":"exponential-bump","amplitude":1},"grid":{"hh":0.1}}"#).unwrap();
    let out = bin().args(["validate", "--scenario"]).arg(&file).output().unwrap();
    let (_, stderr) = text(&out);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr.contains("schema error at `grid"), "{stderr}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn undersized_box_is_rejected_before_running() {
    let dir = scratch("causality");
    let file = dir.join("small.json");
    fs::write(
        &file,
        r#"{"kind":"farfield","potential":{"variant":"exponential-bump","amplitude":0.3},
            "grid":{"half_width":2.0,"h":0.125},"directions":{"fibonacci":4}}"#,
    )
    .unwrap();
    let out = bin().args(["validate", "--scenario"]).arg(&file).output().unwrap();
    let (_, stderr) = text(&out);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr.contains("half-width"), "{stderr}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn missing_scenario_file_reports_io_error() {
    let out = bin().args(["validate", "--scenario", "/nonexistent/scenario.json"]).output().unwrap();
    let (_, stderr) = text(&out);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr.contains("/nonexistent/scenario.json"), "{stderr}");
}
