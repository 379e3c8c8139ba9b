use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn strassen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strassen")).args(args).env_remove("STRASSEN_WORKERS").output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn list_prints_twelve_sorted_ids_with_anchors() {
    let out = strassen(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<(&str, &str)> = text.lines().map(|l| l.split_once(' ').unwrap()).collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0));
    assert!(rows.iter().all(|(_, rest)| !rest.trim().is_empty()));
    assert!(rows.iter().any(|(id, _)| *id == "kpz_zero"));
    assert_eq!(text, String::from_utf8(strassen(&["list"]).stdout).unwrap());
}

#[test]
fn eps_above_one_over_e_fails_the_log_log_guard() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"scenario":"brownian_strassen","params":[0.5]}"#);
    let out = strassen(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("log log guard"));
}

#[test]
fn schema_violations_exit_two_with_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    for (body, field) in [
        (r#"{"scenario":"shift_sequence","sedes":3}"#, "sedes"),
        (r#"{"scenario":"shift_sequence","seeds":"many"}"#, "seeds"),
        (r#"{"scenario":"shift_sequence","thresholds":{"coverage":"x"}}"#, "thresholds.coverage"),
        (r#"{"scenario":"shift_sequence","thresholds":{"radius":1.0}}"#, "thresholds.radius"),
    ] {
        let cfg = write_config(dir.path(), "c.json", body);
        let out = strassen(&["run", &cfg]);
        assert_eq!(out.status.code(), Some(2), "{body}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(field), "{body}: {err}");
    }
    assert_eq!(strassen(&["run", "/nonexistent/config.json"]).status.code(), Some(2));
}

#[test]
fn valid_run_passes_and_reruns_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let cfg = write_config(
        dir.path(),
        "c.json",
        &format!(r#"{{"scenario":"brownian_strassen","seeds":20,"output_dir":"{}"}}"#, out_a.display()),
    );
    let out = strassen(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "verdicts.csv", "manifest.json"] {
        assert!(out_a.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out_a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 1);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["verdicts"]["pass"], true);
    assert_eq!(manifest["versions"]["limit_set"], strassen::VERSION);

    let out_b = dir.path().join("b");
    let again = strassen(&["run", &cfg, "--out", out_b.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(csvs(&out_a), csvs(&out_b));
    assert_eq!(fs::read(out_a.join("report.json")).unwrap(), fs::read(out_b.join("report.json")).unwrap());

    let out_c = dir.path().join("c");
    let m = out_a.join("manifest.json");
    let from_manifest = strassen(&["run", "--manifest", m.to_str().unwrap(), "--out", out_c.to_str().unwrap()]);
    assert_eq!(from_manifest.status.code(), Some(0));
    assert_eq!(csvs(&out_a), csvs(&out_c));
}

#[test]
fn tampered_manifest_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let cfg = write_config(dir.path(), "c.json", r#"{"scenario":"iterated_bm","seeds":4}"#);
    assert_eq!(strassen(&["run", &cfg, "--out", out_a.to_str().unwrap()]).status.code(), Some(0));
    let path = out_a.join("manifest.json");
    let text = fs::read_to_string(&path).unwrap().replace("\"seed\": 1", "\"seed\": 2");
    fs::write(&path, text).unwrap();
    let out = strassen(&["run", "--manifest", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hash"));
}

#[test]
fn failing_verdict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"scenario":"iterated_bm","seeds":4,"thresholds":{"band_fraction":1.5}}"#);
    let out = strassen(&["run", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let verdicts = fs::read_to_string(dir.path().join("o/verdicts.csv")).unwrap();
    assert!(verdicts.lines().nth(1).unwrap().ends_with(",false"));
}

#[test]
fn serial_and_parallel_outputs_match() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"scenario":"shift_sequence","resolution":20000,"seeds":8}"#);
    let (p, s) = (dir.path().join("p"), dir.path().join("s"));
    let par = strassen(&["run", &cfg, "--out", p.to_str().unwrap(), "--workers", "3"]).status.code();
    let ser = strassen(&["--serial", "run", &cfg, "--out", s.to_str().unwrap()]).status.code();
    assert!(matches!(par, Some(0 | 1)), "{par:?}");
    assert_eq!(par, ser);
    assert_eq!(csvs(&p), csvs(&s));
}

#[test]
fn verify_runs_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("v.json");
    let out = strassen(&["verify", "--suite", "quick", "--criteria", "1,10", "--json", json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("criterion  1 PASS") && text.contains("criterion 10 PASS"), "{text}");
    let reports: serde_json::Value = serde_json::from_slice(&fs::read(json).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 2);
    assert_eq!(strassen(&["verify", "--criteria", "99"]).status.code(), Some(2));
}
