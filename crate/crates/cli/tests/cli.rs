use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_remedibench"));
    cmd.env_remove("ECOSCAPE_OUT");
    cmd
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn run_into(dir: &Path, strategy: &str, extra: &[&str]) -> Output {
    bin()
        .args(["run", "--scenario"])
        .arg(scenario("paper-cpu-stress.json"))
        .args(["--strategy", strategy, "--out"])
        .arg(dir)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn run_writes_three_files_with_digest() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("nested/results");
    let out = run_into(&out_dir, "scripted", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let mut names: Vec<String> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["events_summary.json", "report.json", "sli.csv"]);

    let validate = bin()
        .arg("validate")
        .arg(scenario("paper-cpu-stress.json"))
        .output()
        .unwrap();
    assert_eq!(validate.status.code(), Some(0));
    let digest = stdout(&validate).trim().to_string();
    assert!(digest.starts_with("sha256:"));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["scenario_digest"], digest.as_str());
    assert_eq!(report["strategy"], "scripted");
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("events_summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["scenario_digest"], digest.as_str());
    assert!(stdout(&out).contains("V_total = "));
}

#[test]
fn existing_outputs_need_force() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_into(tmp.path(), "noop", &[]).status.code(), Some(0));
    let before = std::fs::read(tmp.path().join("report.json")).unwrap();

    let again = run_into(tmp.path(), "scripted", &[]);
    assert_eq!(again.status.code(), Some(1));
    assert!(stderr(&again).contains("--force"));
    assert_eq!(
        std::fs::read(tmp.path().join("report.json")).unwrap(),
        before
    );

    let forced = run_into(tmp.path(), "scripted", &["--force"]);
    assert_eq!(forced.status.code(), Some(0), "{}", stderr(&forced));
    assert_ne!(
        std::fs::read(tmp.path().join("report.json")).unwrap(),
        before
    );
}

#[test]
fn out_dir_defaults_from_env() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--scenario"])
        .arg(scenario("paper-network-latency.json"))
        .env("ECOSCAPE_OUT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(tmp.path().join("report.json").exists());
}

#[test]
fn full_log_adds_event_log() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_into(tmp.path(), "noop", &["--full-log"]);
    assert_eq!(out.status.code(), Some(0));
    let log = std::fs::read_to_string(tmp.path().join("events.ndjson")).unwrap();
    assert!(log.lines().count() > 100);
    serde_json::from_str::<serde_json::Value>(log.lines().next().unwrap()).unwrap();
    assert!(tmp.path().join("results.csv").exists());
}

#[test]
fn machine_output_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_into(a.path(), "scripted", &[]);
    run_into(b.path(), "scripted", &[]);
    for f in ["report.json", "sli.csv", "events_summary.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn score_reproduces_run_v_total() {
    let tmp = tempfile::tempdir().unwrap();
    run_into(tmp.path(), "scripted", &[]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap())
            .unwrap();
    let stored = report["v_total"].as_f64().unwrap();

    let out = bin()
        .args(["score", "--format", "json", "--sli"])
        .arg(tmp.path().join("sli.csv"))
        .arg("--slos")
        .arg(scenario("paper-slos.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let scored: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(
        scored["v_total"].as_f64().unwrap().to_bits(),
        stored.to_bits()
    );
}

#[test]
fn score_compliant_series_prints_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("external.csv");
    std::fs::write(
        &csv,
        "t_ms,slo,value\n1000,latency,1.2\n1000,accuracy,0.1\n1000,energy,80\n\
         2000,latency,2.5\n2000,accuracy,0.2\n2000,energy,119\n",
    )
    .unwrap();
    let out = bin()
        .args(["score", "--sli"])
        .arg(&csv)
        .arg("--slos")
        .arg(scenario("paper-slos.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("V_total = 0.000"), "{}", stdout(&out));
}

#[test]
fn validate_broken_names_field() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("paper-cpu-stress.json")).unwrap();
    let broken = text.replacen("\"threshold\": 2.5", "\"threshold\": -2.5", 1);
    assert_ne!(text, broken);
    let path = tmp.path().join("broken.json");
    std::fs::write(&path, broken).unwrap();

    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("slos[0].threshold"), "{err}");
    assert!(err.contains("broken.json"), "{err}");
}

#[test]
fn unknown_strategy_lists_available() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_into(tmp.path(), "nonexistent", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("available: noop, scripted, threshold"));
}

#[test]
fn usage_errors_exit_one() {
    let out = bin().args(["run", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let help = bin().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn compare_ranks_scripted_first() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["compare", "--scenario"])
        .arg(scenario("paper-cpu-stress.json"))
        .args([
            "-s",
            "noop,scripted",
            "--repetitions",
            "2",
            "--format",
            "csv",
            "--out",
        ])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows[0].starts_with("1,scripted,"), "{text}");
    assert!(rows[1].starts_with("2,noop,"), "{text}");
    assert_eq!(
        std::fs::read_to_string(tmp.path().join("comparison.csv")).unwrap(),
        text
    );
}
