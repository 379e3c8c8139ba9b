use strassen::mc;
use strassen::scenario::*;

fn cfg(json: &str) -> ScenarioConfig {
    ScenarioConfig::from_json(json).unwrap()
}

#[test]
fn catalog_lists_every_id_once_with_an_anchor() {
    assert_eq!(CATALOG.len(), ScenarioId::ALL.len());
    for (e, id) in CATALOG.iter().zip(ScenarioId::ALL) {
        assert_eq!(e.scenario, id);
        assert!(!e.anchor.trim().is_empty());
    }
}

#[test]
fn config_round_trips_through_json() {
    let c = cfg(r#"{"scenario":"mollified","u":0.5,"params":[0.1,0.01],"seed":9,"thresholds":{"slope_tol":0.1}}"#);
    let back = ScenarioConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(c, back);
    assert_eq!(back.output_dir, "out");
}

#[test]
fn validation_rejects_bad_fields() {
    let bad = [
        r#"{"scenario":"heat_chaos_k","k":3}"#,
        r#"{"scenario":"fbm_strassen","hurst":1.2}"#,
        r#"{"scenario":"iterated_bm","params":[0.01,0.001]}"#,
        r#"{"scenario":"kpz_zero","thresholds":{"j_zero":1}}"#,
        r#"{"scenario":"levy_area","params":[0.1]}"#,
        r#"{"scenario":"shift_sequence","seeds":0}"#,
    ];
    for b in bad {
        assert!(run_scenario(&cfg(b)).is_err(), "{b}");
    }
    assert!(ScenarioConfig::from_json(r#"{"scenario":"no_such"}"#).is_err());
}

#[test]
fn brownian_strassen_default_run_passes_and_is_reproducible() {
    let c = cfg(r#"{"scenario":"brownian_strassen","seeds":20}"#);
    let a = run_scenario(&c).unwrap();
    assert!(a.report.pass(), "{:?}", a.report.verdicts);
    assert_eq!(a.report.containment.len(), 20);
    assert_eq!(a, run_scenario(&c).unwrap());
    let mut buf = Vec::new();
    a.report.write_verdicts_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("scenario,statistic,value,threshold,pass\nbrownian_strassen,"));
}

#[test]
fn serial_and_parallel_runs_agree() {
    let c = cfg(r#"{"scenario":"shift_sequence","resolution":20000,"seeds":8}"#);
    let par = run_scenario(&c).unwrap();
    mc::set_serial(true);
    let ser = run_scenario(&c);
    mc::set_serial(false);
    assert_eq!(par, ser.unwrap());
}

#[test]
fn threshold_overrides_change_verdicts() {
    let base = cfg(r#"{"scenario":"iterated_bm","seeds":10}"#);
    let strict = cfg(r#"{"scenario":"iterated_bm","seeds":10,"thresholds":{"band_fraction":1.01}}"#);
    let a = run_scenario(&base).unwrap().report;
    let b = run_scenario(&strict).unwrap().report;
    assert_eq!(a.lil, b.lil);
    assert!(!b.pass());
}

#[test]
fn kpz_zero_reports_trajectories() {
    let r = run_scenario(&cfg(r#"{"scenario":"kpz_zero","seeds":2,"params":[0.3,0.2]}"#)).unwrap();
    assert!(r.report.pass());
    let t = &r.traces[0];
    assert_eq!(t.header, ["replica", "eps", "j_zero"]);
    assert_eq!(t.rows.len(), 4);
    assert!(t.rows.iter().all(|row| row[2].is_finite() && row[2] > 0.0));
}

#[test]
fn operator_diagnostics_pass_at_defaults() {
    let r = run_scenario(&ScenarioConfig::new(ScenarioId::OperatorDiagnostics)).unwrap();
    assert!(r.report.pass(), "{:?}", r.report.verdicts);
}
