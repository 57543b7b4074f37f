#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use assessits::register::Record;
use assessits::scoring::{AssetValue, CiaImpact, ExposureLevel, Likelihood, ThreatLevel, VulnerabilityLevel};
use assessits::{
    AssessmentEntry, Asset, Phase, RemediationEffect, RemediationRecord, RemediationStatus, RiskRegister,
    ThreatRecord, VulnerabilityRecord,
};
use chrono::NaiveDate;

pub fn date(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

pub fn asset(id: &str, name: &str, owner: &str, av: i64) -> Record {
    Record::Asset(Asset {
        id: id.into(),
        name: name.into(),
        owner: owner.into(),
        category: "system".into(),
        asset_value: AssetValue::new(av).unwrap(),
        valuation_rationale: String::new(),
    })
}

pub fn threat(id: &str, description: &str, level: i64) -> Record {
    Record::Threat(ThreatRecord {
        id: id.into(),
        description: description.into(),
        source_method: "historical data".into(),
        level: ThreatLevel::from_value(level).unwrap(),
    })
}

pub fn vulnerability(id: &str, asset_id: &str, cia: (i64, i64, i64), exposure: i64, over: Option<i64>) -> Record {
    Record::Vulnerability(VulnerabilityRecord {
        id: id.into(),
        description: format!("weakness in {asset_id}"),
        affected_asset_id: asset_id.into(),
        cia: CiaImpact::new(cia.0, cia.1, cia.2).unwrap(),
        exposure: ExposureLevel::from_value(exposure).unwrap(),
        rating_override: over.map(|v| VulnerabilityLevel::from_value(v).unwrap()),
    })
}

pub fn entry(id: &str, asset_id: &str, threat_id: &str, vuln_id: &str, likelihood: i64, assessed: &str) -> Record {
    Record::Entry(AssessmentEntry {
        id: id.into(),
        asset_id: asset_id.into(),
        threat_id: threat_id.into(),
        vulnerability_id: vuln_id.into(),
        remediation_ids: vec![],
        likelihood: Likelihood::from_value(likelihood).unwrap(),
        computed: None,
        assessed_date: date(assessed),
        phase: Phase::Conducted,
        needs_recompute: false,
    })
}

pub fn build(records: Vec<Record>) -> RiskRegister {
    records
        .into_iter()
        .fold(RiskRegister::default(), |r, rec| r.upsert(rec).unwrap())
        .recompute_all()
        .unwrap()
}

/// The single web-server finding: AV 4, threat 4, CIA 4/4/4, exposure 5,
/// likelihood 4, assessed 2024-01-15.
pub fn web_server() -> RiskRegister {
    build(vec![
        asset("web-01", "Web Server", "IT Department", 4),
        threat("thr-01", "Unauthorized access, data theft, service disruption", 4),
        vulnerability("vuln-01", "web-01", (4, 4, 4), 5, None),
        entry("entry-01", "web-01", "thr-01", "vuln-01", 4, "2024-01-15"),
    ])
}

/// Four findings spanning every criticality level, with text that needs
/// quoting in CSV and escaping in HTML.
pub fn portfolio() -> RiskRegister {
    let mut records = vec![
        asset("web-01", "Web Server", "IT Department", 4),
        asset("db-01", "Customer DB", "Data, Platform team", 5),
        asset("lab-01", "R&D <lab> \"wiki\"", "Research", 2),
        asset("mail-01", "Mail | Relay", "IT Department", 3),
        threat("thr-01", "Unauthorized access, data theft, service disruption", 4),
        threat("thr-02", "Ransomware", 5),
        threat("thr-03", "Defacement", 2),
        threat("thr-04", "Spam relay abuse", 3),
        vulnerability("vuln-01", "web-01", (4, 4, 4), 5, None),
        vulnerability("vuln-02", "db-01", (4, 3, 2), 4, None),
        vulnerability("vuln-03", "lab-01", (1, 0, 0), 2, Some(3)),
        vulnerability("vuln-04", "mail-01", (2, 2, 1), 3, None),
        Record::Remediation(RemediationRecord {
            id: "rem-01".into(),
            description: "Patch wiki plugins".into(),
            status: RemediationStatus::Planned,
            effect: RemediationEffect::new(1, 0, 0, 1, None).unwrap(),
            applied_date: None,
        }),
        entry("entry-01", "web-01", "thr-01", "vuln-01", 4, "2024-01-15"),
        entry("entry-02", "db-01", "thr-02", "vuln-02", 5, "2024-03-01"),
        entry("entry-03", "lab-01", "thr-03", "vuln-03", 3, "2023-06-30"),
        entry("entry-04", "mail-01", "thr-04", "vuln-04", 4, "2024-02-10"),
    ];
    if let Some(Record::Entry(e)) = records.iter_mut().find(|r| r.id() == "entry-03") {
        e.remediation_ids.push("rem-01".into());
    }
    build(records)
}

pub fn assessits() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_assessits"));
    cmd.env_remove("ASSESSITS_REGISTER");
    cmd
}

pub fn run_with(register: &Path, args: &[&str]) -> Output {
    assessits().arg("--register").arg(register).args(args).output().unwrap()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}
