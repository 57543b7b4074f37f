//! The risk register: assets, threats, vulnerabilities, remediations and
//! assessment entries, plus the tolerance policy and review cadence that
//! apply to them.
//!
//! A [`RiskRegister`] is a value. Every committed mutation returns a new
//! register whose `version` is exactly one higher; reads never change it.
//! Edits to records do not rescore entries on their own. Affected entries
//! are flagged and [`RiskRegister::recompute_all`] brings them back in line.

mod csv;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batch::{self, Execution};
use crate::scenario::RemediationEffect;
use crate::scoring::{
    assess, AssessmentInput, AssessmentResult, AssetValue, CiaImpact, ExposureLevel, Likelihood,
    RiskTolerancePolicy, ScoringError, ThreatLevel, VulnerabilityLevel,
};

pub use self::csv::{export_csv, import_csv, matrix_rows, MatrixRow, MATRIX_COLUMNS};
pub use self::store::{commit_register, load_register, save_register, write_atomic};

/// Default review period: six months, counted as 183 days.
pub const DEFAULT_REVIEW_PERIOD_DAYS: u32 = 183;

#[derive(Debug, Error)]
pub enum RegisterError {
    #[error("register not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("parse error at line {line}, column {column}: {reason}")]
    Parse { line: usize, column: usize, reason: String },
    #[error("dangling references: {}", join(.0))]
    Integrity(Vec<DanglingReference>),
    #[error("invalid {kind} {id:?}: {reason}")]
    InvalidRecord { kind: RecordKind, id: String, reason: String },
    #[error("entry {entry_id:?}: {source}")]
    Scoring { entry_id: String, source: ScoringError },
    #[error("entry {entry_id:?} was assessed on {assessed}, after {today}")]
    FutureDate { entry_id: String, assessed: NaiveDate, today: NaiveDate },
    #[error("entries need recompute: {}", .0.join(", "))]
    NeedsRecompute(Vec<String>),
    #[error("version conflict: expected {expected}, found {actual}")]
    VersionConflict { expected: u64, actual: u64 },
    #[error("CSV header mismatch: expected {expected:?}, found {found:?}")]
    HeaderMismatch { expected: String, found: String },
    #[error("CSV line {line}: {reason}")]
    Row { line: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Asset,
    Threat,
    Vulnerability,
    Remediation,
    Entry,
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordKind::Asset => "asset",
            RecordKind::Threat => "threat",
            RecordKind::Vulnerability => "vulnerability",
            RecordKind::Remediation => "remediation",
            RecordKind::Entry => "entry",
        })
    }
}

/// A reference from one record to an id that does not exist.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct DanglingReference {
    pub from_kind: RecordKind,
    pub from_id: String,
    pub field: &'static str,
    pub target_kind: RecordKind,
    pub missing_id: String,
}

impl fmt::Display for DanglingReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:?} {} -> missing {} {:?}",
            self.from_kind, self.from_id, self.field, self.target_kind, self.missing_id
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Asset {
    pub id: String,
    pub name: String,
    /// Wing, team or department that owns the asset or service.
    pub owner: String,
    #[serde(default)]
    pub category: String,
    pub asset_value: AssetValue,
    /// Free-text reasoning (financial, legal, operational, reputational).
    #[serde(default)]
    pub valuation_rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreatRecord {
    pub id: String,
    pub description: String,
    /// How the threat was identified: knowledge session, historical data,
    /// VA, PT, SIEM log, and so on.
    pub source_method: String,
    pub level: ThreatLevel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VulnerabilityRecord {
    pub id: String,
    pub description: String,
    pub affected_asset_id: String,
    pub cia: CiaImpact,
    pub exposure: ExposureLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating_override: Option<VulnerabilityLevel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemediationStatus {
    Planned,
    Implemented,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemediationRecord {
    pub id: String,
    pub description: String,
    pub status: RemediationStatus,
    #[serde(default)]
    pub effect: RemediationEffect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub applied_date: Option<NaiveDate>,
}

/// Lifecycle phase of an assessment entry. Transitions are not constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Prepared,
    #[default]
    Conducted,
    Communicated,
    Maintained,
}

/// One row of the assessment matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentEntry {
    pub id: String,
    pub asset_id: String,
    pub threat_id: String,
    pub vulnerability_id: String,
    #[serde(default)]
    pub remediation_ids: Vec<String>,
    pub likelihood: Likelihood,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub computed: Option<AssessmentResult>,
    pub assessed_date: NaiveDate,
    #[serde(default)]
    pub phase: Phase,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub needs_recompute: bool,
}

impl AssessmentEntry {
    /// Scores are current: computed and not flagged.
    pub fn is_consistent(&self) -> bool {
        self.computed.is_some() && !self.needs_recompute
    }
}

/// Anything that can be inserted or replaced by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Record {
    Asset(Asset),
    Threat(ThreatRecord),
    Vulnerability(VulnerabilityRecord),
    Remediation(RemediationRecord),
    Entry(AssessmentEntry),
}

impl Record {
    pub fn kind(&self) -> RecordKind {
        match self {
            Record::Asset(_) => RecordKind::Asset,
            Record::Threat(_) => RecordKind::Threat,
            Record::Vulnerability(_) => RecordKind::Vulnerability,
            Record::Remediation(_) => RecordKind::Remediation,
            Record::Entry(_) => RecordKind::Entry,
        }
    }

    pub fn id(&self) -> &str {
        match self {
            Record::Asset(r) => &r.id,
            Record::Threat(r) => &r.id,
            Record::Vulnerability(r) => &r.id,
            Record::Remediation(r) => &r.id,
            Record::Entry(r) => &r.id,
        }
    }

    fn validate(&self) -> Result<(), RegisterError> {
        let invalid = |reason: &str| RegisterError::InvalidRecord {
            kind: self.kind(),
            id: self.id().to_string(),
            reason: reason.to_string(),
        };
        if self.id().trim().is_empty() {
            return Err(invalid("id must not be empty"));
        }
        match self {
            Record::Threat(t) if t.source_method.trim().is_empty() => Err(invalid("source_method must not be empty")),
            Record::Remediation(r) if r.status == RemediationStatus::Implemented && r.applied_date.is_none() => {
                Err(invalid("implemented remediation requires applied_date"))
            }
            _ => Ok(()),
        }
    }
}

/// Stale entry reported by [`RiskRegister::flag_stale`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaleEntry {
    pub entry_id: String,
    pub days_since_assessment: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskRegister {
    pub(crate) version: u64,
    pub(crate) review_period_days: u32,
    pub(crate) policy: RiskTolerancePolicy,
    /// Free-text tags, e.g. the assessment and analysis approach in use.
    #[serde(default)]
    pub(crate) metadata: BTreeMap<String, String>,
    #[serde(default, with = "keyed")]
    pub(crate) assets: BTreeMap<String, Asset>,
    #[serde(default, with = "keyed")]
    pub(crate) threats: BTreeMap<String, ThreatRecord>,
    #[serde(default, with = "keyed")]
    pub(crate) vulnerabilities: BTreeMap<String, VulnerabilityRecord>,
    #[serde(default, with = "keyed")]
    pub(crate) remediations: BTreeMap<String, RemediationRecord>,
    #[serde(default, with = "keyed")]
    pub(crate) entries: BTreeMap<String, AssessmentEntry>,
}

impl Default for RiskRegister {
    fn default() -> Self {
        RiskRegister::new(RiskTolerancePolicy::default(), DEFAULT_REVIEW_PERIOD_DAYS)
    }
}

impl RiskRegister {
    pub fn new(policy: RiskTolerancePolicy, review_period_days: u32) -> Self {
        RiskRegister {
            version: 0,
            review_period_days: review_period_days.max(1),
            policy,
            metadata: BTreeMap::new(),
            assets: BTreeMap::new(),
            threats: BTreeMap::new(),
            vulnerabilities: BTreeMap::new(),
            remediations: BTreeMap::new(),
            entries: BTreeMap::new(),
        }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn review_period_days(&self) -> u32 {
        self.review_period_days
    }

    pub fn policy(&self) -> &RiskTolerancePolicy {
        &self.policy
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn assets(&self) -> impl ExactSizeIterator<Item = &Asset> {
        self.assets.values()
    }

    pub fn threats(&self) -> impl ExactSizeIterator<Item = &ThreatRecord> {
        self.threats.values()
    }

    pub fn vulnerabilities(&self) -> impl ExactSizeIterator<Item = &VulnerabilityRecord> {
        self.vulnerabilities.values()
    }

    pub fn remediations(&self) -> impl ExactSizeIterator<Item = &RemediationRecord> {
        self.remediations.values()
    }

    /// Entries in id order.
    pub fn entries(&self) -> impl ExactSizeIterator<Item = &AssessmentEntry> {
        self.entries.values()
    }

    pub fn asset(&self, id: &str) -> Option<&Asset> {
        self.assets.get(id)
    }

    pub fn threat(&self, id: &str) -> Option<&ThreatRecord> {
        self.threats.get(id)
    }

    pub fn vulnerability(&self, id: &str) -> Option<&VulnerabilityRecord> {
        self.vulnerabilities.get(id)
    }

    pub fn remediation(&self, id: &str) -> Option<&RemediationRecord> {
        self.remediations.get(id)
    }

    pub fn entry(&self, id: &str) -> Option<&AssessmentEntry> {
        self.entries.get(id)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Ids of entries whose scores are missing or flagged.
    pub fn entries_needing_recompute(&self) -> Vec<String> {
        self.entries
            .values()
            .filter(|e| !e.is_consistent())
            .map(|e| e.id.clone())
            .collect()
    }

    pub fn is_consistent(&self) -> bool {
        self.entries.values().all(AssessmentEntry::is_consistent)
    }

    /// Inserts or replaces `record` by id and bumps the version.
    pub fn upsert(&self, record: Record) -> Result<RiskRegister, RegisterError> {
        let mut next = self.clone();
        next.upsert_in_place(record)?;
        next.version += 1;
        Ok(next)
    }

    /// Upserts `record` and rescores every entry as a single commit: the
    /// version moves by exactly one, or nothing changes.
    pub fn upsert_and_recompute(&self, record: Record) -> Result<RiskRegister, RegisterError> {
        let mut next = self.clone();
        next.upsert_in_place(record)?;
        next.recompute_in_place(Execution::default())?;
        next.version = self.version + 1;
        Ok(next)
    }

    /// `next` as the successor of this register: same contents as `next`,
    /// version one past this one.
    pub fn replaced_by(&self, next: RiskRegister) -> RiskRegister {
        RiskRegister {
            version: self.version + 1,
            ..next
        }
    }

    /// Replaces the tolerance policy. Every entry is flagged for recompute.
    pub fn with_policy(&self, policy: RiskTolerancePolicy) -> RiskRegister {
        let mut next = self.clone();
        next.policy = policy;
        for e in next.entries.values_mut() {
            e.needs_recompute = true;
        }
        next.version += 1;
        next
    }

    pub fn with_review_period(&self, days: u32) -> RiskRegister {
        let mut next = self.clone();
        next.review_period_days = days.max(1);
        next.version += 1;
        next
    }

    pub fn with_metadata(&self, key: impl Into<String>, value: impl Into<String>) -> RiskRegister {
        let mut next = self.clone();
        next.metadata.insert(key.into(), value.into());
        next.version += 1;
        next
    }

    pub(crate) fn upsert_in_place(&mut self, record: Record) -> Result<(), RegisterError> {
        record.validate()?;
        let dangling = self.references_of(&record);
        if !dangling.is_empty() {
            return Err(RegisterError::Integrity(dangling));
        }
        match record {
            Record::Asset(a) => {
                self.flag_dependents(|e| e.asset_id == a.id);
                self.assets.insert(a.id.clone(), a);
            }
            Record::Threat(t) => {
                self.flag_dependents(|e| e.threat_id == t.id);
                self.threats.insert(t.id.clone(), t);
            }
            Record::Vulnerability(v) => {
                self.flag_dependents(|e| e.vulnerability_id == v.id);
                self.vulnerabilities.insert(v.id.clone(), v);
            }
            Record::Remediation(r) => {
                self.remediations.insert(r.id.clone(), r);
            }
            Record::Entry(mut e) => {
                e.needs_recompute = true;
                self.entries.insert(e.id.clone(), e);
            }
        }
        Ok(())
    }

    fn flag_dependents(&mut self, depends: impl Fn(&AssessmentEntry) -> bool) {
        for e in self.entries.values_mut().filter(|e| depends(e)) {
            e.needs_recompute = true;
        }
    }

    fn references_of(&self, record: &Record) -> Vec<DanglingReference> {
        let mut out = Vec::new();
        let mut check = |present: bool, field: &'static str, target_kind: RecordKind, missing: &str| {
            if !present {
                out.push(DanglingReference {
                    from_kind: record.kind(),
                    from_id: record.id().to_string(),
                    field,
                    target_kind,
                    missing_id: missing.to_string(),
                });
            }
        };
        match record {
            Record::Vulnerability(v) => check(
                self.assets.contains_key(&v.affected_asset_id),
                "affected_asset_id",
                RecordKind::Asset,
                &v.affected_asset_id,
            ),
            Record::Entry(e) => {
                check(self.assets.contains_key(&e.asset_id), "asset_id", RecordKind::Asset, &e.asset_id);
                check(self.threats.contains_key(&e.threat_id), "threat_id", RecordKind::Threat, &e.threat_id);
                check(
                    self.vulnerabilities.contains_key(&e.vulnerability_id),
                    "vulnerability_id",
                    RecordKind::Vulnerability,
                    &e.vulnerability_id,
                );
                for r in &e.remediation_ids {
                    check(self.remediations.contains_key(r), "remediation_ids", RecordKind::Remediation, r);
                }
            }
            _ => {}
        }
        out
    }

    /// Full integrity check: every record valid and every reference resolved.
    pub fn check_integrity(&self) -> Result<(), RegisterError> {
        let records = self
            .assets
            .values()
            .cloned()
            .map(Record::Asset)
            .chain(self.threats.values().cloned().map(Record::Threat))
            .chain(self.vulnerabilities.values().cloned().map(Record::Vulnerability))
            .chain(self.remediations.values().cloned().map(Record::Remediation))
            .chain(self.entries.values().cloned().map(Record::Entry));
        let mut dangling = Vec::new();
        for record in records {
            record.validate()?;
            dangling.extend(self.references_of(&record));
        }
        if dangling.is_empty() {
            Ok(())
        } else {
            dangling.sort();
            Err(RegisterError::Integrity(dangling))
        }
    }

    /// Resolves the scoring inputs for an entry from its referenced records.
    pub fn entry_input(&self, entry: &AssessmentEntry) -> Result<AssessmentInput, RegisterError> {
        let dangling = self.references_of(&Record::Entry(entry.clone()));
        if !dangling.is_empty() {
            return Err(RegisterError::Integrity(dangling));
        }
        let asset = &self.assets[&entry.asset_id];
        let threat = &self.threats[&entry.threat_id];
        let vuln = &self.vulnerabilities[&entry.vulnerability_id];
        Ok(AssessmentInput {
            asset_value: asset.asset_value,
            threat_level: threat.level,
            cia: vuln.cia,
            exposure: vuln.exposure,
            vulnerability_override: vuln.rating_override,
            likelihood: entry.likelihood,
        })
    }

    /// Rescores every entry from its current records and the policy.
    ///
    /// The version moves by one only if some entry changed or was flagged.
    pub fn recompute_all(&self) -> Result<RiskRegister, RegisterError> {
        self.recompute_all_with(Execution::default())
    }

    pub fn recompute_all_with(&self, exec: Execution) -> Result<RiskRegister, RegisterError> {
        let mut next = self.clone();
        if next.recompute_in_place(exec)? {
            next.version += 1;
        }
        Ok(next)
    }

    /// Returns whether anything changed. Leaves `self` untouched on error.
    pub(crate) fn recompute_in_place(&mut self, exec: Execution) -> Result<bool, RegisterError> {
        let scored: Vec<AssessmentResult> = {
            let entries: Vec<&AssessmentEntry> = self.entries.values().collect();
            let policy = self.policy;
            batch::map(exec, &entries, |entry| {
                let input = self.entry_input(entry)?;
                assess(&input, &policy).map_err(|source| RegisterError::Scoring {
                    entry_id: entry.id.clone(),
                    source,
                })
            })
            .into_iter()
            .collect::<Result<_, _>>()?
        };

        let mut changed = false;
        for (entry, result) in self.entries.values_mut().zip(scored) {
            if entry.needs_recompute || entry.computed != Some(result) {
                changed = true;
            }
            entry.computed = Some(result);
            entry.needs_recompute = false;
        }
        Ok(changed)
    }

    /// Entries older than the review period as of `today`, stalest first.
    pub fn flag_stale(&self, today: NaiveDate) -> Result<Vec<StaleEntry>, RegisterError> {
        let mut stale = Vec::new();
        for e in self.entries.values() {
            let days = (today - e.assessed_date).num_days();
            if days < 0 {
                return Err(RegisterError::FutureDate {
                    entry_id: e.id.clone(),
                    assessed: e.assessed_date,
                    today,
                });
            }
            if days > i64::from(self.review_period_days) {
                stale.push(StaleEntry {
                    entry_id: e.id.clone(),
                    days_since_assessment: days,
                });
            }
        }
        stale.sort_by(|a, b| {
            b.days_since_assessment
                .cmp(&a.days_since_assessment)
                .then_with(|| a.entry_id.cmp(&b.entry_id))
        });
        Ok(stale)
    }

    /// Marks entries whose stored scores disagree with a fresh computation.
    /// Used after loading a document written by hand or by another tool.
    pub(crate) fn flag_inconsistent(&mut self) {
        let policy = self.policy;
        let stale: BTreeSet<String> = self
            .entries
            .values()
            .filter(|e| {
                let fresh = self.entry_input(e).ok().and_then(|i| assess(&i, &policy).ok());
                e.computed.is_none() || fresh != e.computed
            })
            .map(|e| e.id.clone())
            .collect();
        for id in stale {
            if let Some(e) = self.entries.get_mut(&id) {
                e.needs_recompute = true;
            }
        }
    }

    /// Serializes to the canonical register document.
    pub fn to_document(&self) -> String {
        let mut doc = serde_json::to_string_pretty(self).expect("register serializes");
        doc.push('\n');
        doc
    }

    /// Parses and verifies a register document.
    pub fn from_document(text: &str) -> Result<RiskRegister, RegisterError> {
        let mut register: RiskRegister = serde_json::from_str(text).map_err(|e| RegisterError::Parse {
            line: e.line(),
            column: e.column(),
            reason: e.to_string(),
        })?;
        if register.review_period_days == 0 {
            return Err(RegisterError::Parse {
                line: 0,
                column: 0,
                reason: "review_period_days must be positive".into(),
            });
        }
        register.check_integrity()?;
        register.flag_inconsistent();
        Ok(register)
    }
}

/// Collections are written as arrays sorted by id and read back into maps,
/// rejecting duplicate ids.
mod keyed {
    use std::collections::BTreeMap;

    use serde::de::{Deserialize, Deserializer, Error};
    use serde::ser::{Serialize, Serializer};

    pub trait Keyed {
        fn key(&self) -> &str;
    }

    macro_rules! keyed {
        ($($t:ty),+) => {
            $(impl Keyed for $t {
                fn key(&self) -> &str {
                    &self.id
                }
            })+
        };
    }

    keyed!(
        super::Asset,
        super::ThreatRecord,
        super::VulnerabilityRecord,
        super::RemediationRecord,
        super::AssessmentEntry
    );

    pub fn serialize<T: Serialize, S: Serializer>(map: &BTreeMap<String, T>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.values())
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<BTreeMap<String, T>, D::Error>
    where
        T: Deserialize<'de> + Keyed,
        D: Deserializer<'de>,
    {
        let items = Vec::<T>::deserialize(d)?;
        let mut map = BTreeMap::new();
        for item in items {
            let key = item.key().to_string();
            if map.insert(key.clone(), item).is_some() {
                return Err(D::Error::custom(format!("duplicate id {key:?}")));
            }
        }
        Ok(map)
    }
}
