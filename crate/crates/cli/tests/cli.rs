mod common;

use std::fs;

use assessits::register::{export_csv, load_register, save_register};
use assessits::reporting::{render_prioritized, ReportFormat};
use common::*;
use serde_json::Value;

#[test]
fn assess_prints_scores_and_accepts_labels() {
    for threat in ["4", "Major", "major"] {
        let out = assessits()
            .args(["assess", "--av", "4", "--threat", threat, "--cia", "4,4,4", "--exposure", "5", "--likelihood", "4"])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert_eq!(stdout(&out), "vr=5 tv=9 ri=144 criticality=High\n");
    }
}

#[test]
fn assess_names_the_offending_flag() {
    let cases = [
        (["--av", "6"], "--av: asset value must be 1–5, got 6"),
        (["--threat", "Huge"], "--threat: unknown threat level label \"Huge\""),
        (["--likelihood", "0"], "--likelihood: likelihood must be 1–5, got 0"),
    ];
    for ([flag, value], expected) in cases {
        let mut args = vec!["assess", "--av", "4", "--threat", "4", "--cia", "4,4,4", "--exposure", "5", "--likelihood", "4"];
        let pos = args.iter().position(|a| *a == flag).unwrap();
        args[pos + 1] = value;
        let out = assessits().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(1));
        assert!(stderr(&out).contains(expected), "{} does not contain {expected}", stderr(&out));
    }
}

#[test]
fn assess_is_stateless() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("never.json");
    let out = assessits()
        .env("ASSESSITS_REGISTER", &path)
        .current_dir(dir.path())
        .args(["assess", "--av", "1", "--threat", "1", "--cia", "0,0,0", "--exposure", "1", "--likelihood", "1"])
        .output()
        .unwrap();
    assert_eq!(stdout(&out), "vr=1 tv=2 ri=2 criticality=Low\n");
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn missing_register_flag_is_usage_error() {
    let out = assessits().arg("validate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn init_then_refuse_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = run_with(&path, &["init", "--policy", "40,90,190,250", "--review-period", "90"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = load_register(&path).unwrap();
    assert_eq!(r.version(), 0);
    assert_eq!(r.review_period_days(), 90);
    assert_eq!(r.policy().low_max(), 40);

    let out = run_with(&path, &["init"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(load_register(&path).unwrap(), r);
}

#[test]
fn init_rejects_bad_policy() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = run_with(&path, &["init", "--policy", "99,45,199,250"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--policy"));
    assert!(!path.exists());
}

#[test]
fn upsert_sequence_builds_a_scored_register() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    assert!(run_with(&path, &["init"]).status.success());

    let records = [
        r#"{"kind":"asset","id":"web-01","name":"Web Server","owner":"IT","category":"","asset_value":4,"valuation_rationale":""}"#,
        r#"{"kind":"threat","id":"thr-01","description":"intrusion","source_method":"knowledge session","level":4}"#,
        r#"{"kind":"vulnerability","id":"vuln-01","description":"old TLS","affected_asset_id":"web-01","cia":{"confidentiality":4,"integrity":4,"availability":4},"exposure":5}"#,
        r#"{"kind":"entry","id":"entry-01","asset_id":"web-01","threat_id":"thr-01","vulnerability_id":"vuln-01","likelihood":4,"assessed_date":"2024-01-15"}"#,
    ];
    for (i, rec) in records.iter().enumerate() {
        let file = dir.path().join(format!("rec{i}.json"));
        fs::write(&file, rec).unwrap();
        let out = run_with(&path, &["upsert", "--record", file.to_str().unwrap(), "--expected-version", &i.to_string()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let r = load_register(&path).unwrap();
    assert_eq!(r.version(), 4);
    assert_eq!(r.entry("entry-01").unwrap().computed.unwrap().risk_impact.value(), 144);

    let out = run_with(&path, &["validate"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("ok: version 4, 1 entries"));
}

#[test]
fn upsert_with_stale_version_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    save_register(&web_server(), &path).unwrap();
    let before = fs::read(&path).unwrap();
    let file = dir.path().join("asset.json");
    fs::write(
        &file,
        r#"{"kind":"asset","id":"x","name":"X","owner":"IT","category":"","asset_value":2,"valuation_rationale":""}"#,
    )
    .unwrap();
    let out = run_with(&path, &["upsert", "--record", file.to_str().unwrap(), "--expected-version", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("version conflict"));
    assert_eq!(fs::read(&path).unwrap(), before);
}

#[test]
fn upsert_out_of_range_names_the_scale() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    save_register(&web_server(), &path).unwrap();
    let file = dir.path().join("asset.json");
    fs::write(
        &file,
        r#"{"kind":"asset","id":"x","name":"X","owner":"IT","category":"","asset_value":6,"valuation_rationale":""}"#,
    )
    .unwrap();
    let out = run_with(&path, &["upsert", "--record", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("asset value must be 1–5, got 6"), "{}", stderr(&out));
}

#[test]
fn validate_lists_dangling_ids() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let doc = web_server().to_document().replace("\"threat_id\": \"thr-01\"", "\"threat_id\": \"thr-99\"");
    fs::write(&path, doc).unwrap();
    let out = run_with(&path, &["validate"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("dangling"), "{err}");
    assert!(err.contains("entry-01") && err.contains("thr-99"), "{err}");
}

#[test]
fn validate_flags_tampered_scores() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let doc = web_server().to_document().replace("\"ri\": 144", "\"ri\": 150");
    assert!(doc.contains("\"ri\": 150"));
    fs::write(&path, doc).unwrap();
    let out = run_with(&path, &["validate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("entry-01"));

    assert!(run_with(&path, &["recompute"]).status.success());
    assert!(run_with(&path, &["validate"]).status.success());
}

#[test]
fn recompute_on_consistent_register_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    save_register(&web_server(), &path).unwrap();
    let before = fs::read(&path).unwrap();
    assert!(run_with(&path, &["recompute"]).status.success());
    assert_eq!(fs::read(&path).unwrap(), before);
}

#[test]
fn report_csv_reimports_with_equal_scores() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let original = portfolio();
    save_register(&original, &path).unwrap();
    let csv = dir.path().join("matrix.csv");
    let out = run_with(&path, &["report", "--format", "csv", "--output", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());

    let fresh = dir.path().join("imported.json");
    let out = run_with(&fresh, &["import", "--input", csv.to_str().unwrap(), "--assessed-on", "2024-05-01"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let imported = load_register(&fresh).unwrap();
    let scores = |r: &assessits::RiskRegister| -> Vec<(u16, u8, u8)> {
        r.entries()
            .map(|e| {
                let c = e.computed.unwrap();
                (c.risk_impact.value(), c.threat_value.value(), c.criticality.rank())
            })
            .collect()
    };
    assert_eq!(scores(&imported), scores(&original));
    assert_eq!(export_csv(&imported).unwrap(), fs::read_to_string(&csv).unwrap());
}

#[test]
fn import_into_existing_register_succeeds_its_version() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let existing = web_server().with_policy("30,60,120,250".parse().unwrap()).recompute_all().unwrap();
    save_register(&existing, &path).unwrap();
    let csv = dir.path().join("m.csv");
    fs::write(&csv, export_csv(&portfolio()).unwrap()).unwrap();
    let out = run_with(&path, &["import", "--input", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "criticality labels disagree with the stricter policy");

    let lenient = web_server();
    save_register(&lenient, &path).unwrap();
    let out = run_with(&path, &["import", "--input", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = load_register(&path).unwrap();
    assert_eq!(r.version(), lenient.version() + 1);
    assert_eq!(r.entries().len(), 4);
}

#[test]
fn import_reports_bad_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let csv = dir.path().join("m.csv");
    fs::write(&csv, "SI,Asset\n1,web\n").unwrap();
    let out = run_with(&path, &["import", "--input", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("header"));
    assert!(!path.exists());
}

#[test]
fn export_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    save_register(&portfolio(), &path).unwrap();
    let out = run_with(&path, &["export"]);
    assert_eq!(stdout(&out), export_csv(&portfolio()).unwrap());
}

#[test]
fn prioritized_report_uses_today() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    save_register(&portfolio(), &path).unwrap();
    let out = run_with(&path, &["report", "--view", "prioritized", "--format", "markdown", "--today", "2024-06-01"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let expected = render_prioritized(&portfolio(), ReportFormat::Markdown, date("2024-06-01")).unwrap();
    assert_eq!(stdout(&out), expected.body);
}

#[test]
fn report_rejects_unknown_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    save_register(&portfolio(), &path).unwrap();
    let out = run_with(&path, &["report", "--format", "pdf"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--format"));
}

#[test]
fn review_status_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    save_register(&web_server(), &path).unwrap();

    let out = run_with(&path, &["review-status", "--today", "2024-07-15"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "entry  days_since_assessment\n");

    let out = run_with(&path, &["review-status", "--today", "2024-07-17"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stdout(&out), "entry     days_since_assessment\nentry-01  184\n");

    let out = run_with(&path, &["review-status", "--today", "2024-07-17", "--format", "json"]);
    let rows: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows[0]["days_since_assessment"], 184);

    let out = run_with(&path, &["review-status", "--today", "17/07/2024"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run_with(&path, &["review-status", "--today", "2023-01-01"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_single_entry_and_apply() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let base = web_server();
    save_register(&base, &path).unwrap();
    let before = fs::read(&path).unwrap();

    let args = ["simulate", "--entry", "entry-01", "--delta-c", "4", "--delta-i", "4", "--delta-a", "4", "--delta-exposure", "4"];
    let out = run_with(&path, &args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let delta: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(delta["before"]["ri"], 144);
    assert_eq!(delta["after"]["ri"], 80);
    assert_eq!(delta["after"]["criticality"], "Medium");
    assert_eq!(fs::read(&path).unwrap(), before);

    let mut apply = args.to_vec();
    apply.extend(["--apply", "--remediation-id", "rem-01", "--description", "harden", "--applied-date", "2024-02-01"]);
    let out = run_with(&path, &apply);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = load_register(&path).unwrap();
    assert_eq!(r.version(), base.version() + 1);
    let computed = serde_json::to_value(r.entry("entry-01").unwrap().computed.unwrap()).unwrap();
    assert_eq!(computed, delta["after"]);
}

#[test]
fn simulate_scenario_and_rank() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    save_register(&portfolio(), &path).unwrap();
    let scenario = dir.path().join("s.json");
    fs::write(
        &scenario,
        r#"{"assignments":[
            {"entry_id":"entry-01","effect":{"delta_exposure":1}},
            {"entry_id":"entry-02","effect":{"delta_c":4,"delta_i":4,"delta_a":4}},
            {"entry_id":"entry-04","effect":{}}
        ]}"#,
    )
    .unwrap();
    let out = run_with(&path, &["simulate", "--scenario", scenario.to_str().unwrap(), "--rank"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let ranked: Value = serde_json::from_slice(&out.stdout).unwrap();
    let order: Vec<&str> = ranked.as_array().unwrap().iter().map(|d| d["entry_id"].as_str().unwrap()).collect();
    assert_eq!(order, ["entry-02", "entry-01", "entry-04"]);

    let out = run_with(&path, &["simulate", "--scenario", scenario.to_str().unwrap()]);
    let outcome: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(outcome["summary"]["criticality_before"]["Critical"], 1);
}

#[test]
fn simulate_rejects_bad_effect_and_unknown_entry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    save_register(&web_server(), &path).unwrap();
    let out = run_with(&path, &["simulate", "--entry", "entry-01", "--delta-c", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("delta_c must be 0–4"));
    let out = run_with(&path, &["simulate", "--entry", "nope"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown entry"));
}

#[test]
fn missing_register_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(&dir.path().join("absent.json"), &["export"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("not found"));
}
