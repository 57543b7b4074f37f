//! The assessment matrix as CSV: one entry per row, in the column order of
//! the matrix layout.

use std::io::Read;

use chrono::NaiveDate;
use serde::Serialize;

use super::{
    AssessmentEntry, Asset, Phase, Record, RegisterError, RemediationRecord, RemediationStatus, RiskRegister,
    ThreatRecord, VulnerabilityRecord,
};
use crate::batch::Execution;
use crate::scenario::RemediationEffect;
use crate::scoring::{
    assess, AssessmentInput, AssetValue, CiaImpact, CriticalityLevel, ExposureLevel, Likelihood, RiskTolerancePolicy,
    ThreatLevel, VulnerabilityLevel,
};

pub const MATRIX_COLUMNS: [&str; 16] = [
    "SI",
    "Asset/Service",
    "Owner",
    "AssetValue",
    "Threat",
    "ThreatLevel",
    "Vulnerability",
    "Remediation",
    "ImpactC",
    "ImpactI",
    "ImpactA",
    "VulnLevel",
    "ThreatValue",
    "Likelihood",
    "RiskImpactRating",
    "CriticalityLevel",
];

/// Separator used when an entry links several remediations.
const REMEDIATION_SEPARATOR: &str = "; ";

/// A fully resolved matrix row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatrixRow {
    pub si: usize,
    pub entry_id: String,
    pub asset_id: String,
    pub asset: String,
    pub owner: String,
    pub asset_value: AssetValue,
    pub threat: String,
    pub threat_level: ThreatLevel,
    pub vulnerability: String,
    pub remediation: String,
    pub impact_c: u8,
    pub impact_i: u8,
    pub impact_a: u8,
    pub vuln_level: VulnerabilityLevel,
    pub threat_value: u8,
    pub likelihood: Likelihood,
    pub risk_impact_rating: u16,
    pub criticality: CriticalityLevel,
    pub assessed_date: NaiveDate,
}

impl MatrixRow {
    /// The sixteen CSV fields.
    pub fn fields(&self) -> [String; 16] {
        [
            self.si.to_string(),
            self.asset.clone(),
            self.owner.clone(),
            self.asset_value.to_string(),
            self.threat.clone(),
            self.threat_level.to_string(),
            self.vulnerability.clone(),
            self.remediation.clone(),
            self.impact_c.to_string(),
            self.impact_i.to_string(),
            self.impact_a.to_string(),
            self.vuln_level.to_string(),
            self.threat_value.to_string(),
            self.likelihood.to_string(),
            self.risk_impact_rating.to_string(),
            self.criticality.label().to_string(),
        ]
    }
}

/// Resolves every entry into a matrix row, in entry id order.
///
/// Fails if any entry needs recompute, so rows never carry stale scores.
pub fn matrix_rows(register: &RiskRegister) -> Result<Vec<MatrixRow>, RegisterError> {
    let pending = register.entries_needing_recompute();
    if !pending.is_empty() {
        return Err(RegisterError::NeedsRecompute(pending));
    }
    register
        .entries()
        .enumerate()
        .map(|(i, entry)| row_for(register, i + 1, entry))
        .collect()
}

fn row_for(register: &RiskRegister, si: usize, entry: &AssessmentEntry) -> Result<MatrixRow, RegisterError> {
    // entry_input verifies every reference.
    register.entry_input(entry)?;
    let asset = &register.assets[&entry.asset_id];
    let threat = &register.threats[&entry.threat_id];
    let vuln = &register.vulnerabilities[&entry.vulnerability_id];
    let computed = entry.computed.expect("consistency checked");
    let remediation = entry
        .remediation_ids
        .iter()
        .map(|id| register.remediations[id].description.as_str())
        .collect::<Vec<_>>()
        .join(REMEDIATION_SEPARATOR);
    Ok(MatrixRow {
        si,
        entry_id: entry.id.clone(),
        asset_id: asset.id.clone(),
        asset: asset.name.clone(),
        owner: asset.owner.clone(),
        asset_value: asset.asset_value,
        threat: threat.description.clone(),
        threat_level: threat.level,
        vulnerability: vuln.description.clone(),
        remediation,
        impact_c: vuln.cia.confidentiality.value(),
        impact_i: vuln.cia.integrity.value(),
        impact_a: vuln.cia.availability.value(),
        vuln_level: computed.vulnerability,
        threat_value: computed.threat_value.value(),
        likelihood: entry.likelihood,
        risk_impact_rating: computed.risk_impact.value(),
        criticality: computed.criticality,
        assessed_date: entry.assessed_date,
    })
}

/// Renders the register as matrix CSV with `\n` line endings.
pub fn export_csv(register: &RiskRegister) -> Result<String, RegisterError> {
    let rows = matrix_rows(register)?;
    let mut writer = ::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: ::csv::Error| RegisterError::Io(std::io::Error::other(e));
    writer.write_record(MATRIX_COLUMNS).map_err(io)?;
    for row in &rows {
        writer.write_record(row.fields()).map_err(io)?;
    }
    let bytes = writer.into_inner().map_err(|e| RegisterError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV built from UTF-8 strings"))
}

/// Builds a fresh register from matrix CSV.
///
/// Each row yields an asset (keyed by its Asset/Service name, shared across
/// rows), a threat, a vulnerability, an optional planned remediation and an
/// entry. The matrix has no separate exposure column, so the vulnerability
/// level is recorded as a direct rating and as the exposure. Threat value,
/// risk impact and criticality are recomputed and must match the row.
pub fn import_csv<R: Read>(
    input: R,
    policy: RiskTolerancePolicy,
    assessed_on: NaiveDate,
) -> Result<RiskRegister, RegisterError> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();

    let expected = MATRIX_COLUMNS.join(",");
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => {
            return Err(RegisterError::Row {
                line: 1,
                reason: e.to_string(),
            })
        }
        None => {
            return Err(RegisterError::HeaderMismatch {
                expected,
                found: String::new(),
            })
        }
    };
    let found: Vec<&str> = header.iter().collect();
    let found_first = found.first().map(|f| f.trim_start_matches('\u{feff}'));
    if found.len() != MATRIX_COLUMNS.len()
        || found_first != Some(MATRIX_COLUMNS[0])
        || found[1..] != MATRIX_COLUMNS[1..]
    {
        return Err(RegisterError::HeaderMismatch {
            expected,
            found: found.join(","),
        });
    }

    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| RegisterError::Row {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != MATRIX_COLUMNS.len() {
            return Err(RegisterError::Row {
                line,
                reason: format!("expected {} fields, found {}", MATRIX_COLUMNS.len(), record.len()),
            });
        }
        rows.push((line, record));
    }

    let width = rows.len().to_string().len().max(3);
    let mut register = RiskRegister::new(policy, super::DEFAULT_REVIEW_PERIOD_DAYS);
    for (n, (line, record)) in rows.iter().enumerate() {
        let parsed = ParsedRow::parse(*line, record)?;
        parsed.insert(&mut register, *line, &format!("{:0width$}", n + 1), assessed_on)?;
    }
    register.recompute_in_place(Execution::default())?;
    Ok(register)
}

struct ParsedRow {
    asset: String,
    owner: String,
    asset_value: AssetValue,
    threat: String,
    threat_level: ThreatLevel,
    vulnerability: String,
    remediation: String,
    cia: CiaImpact,
    vuln_level: VulnerabilityLevel,
    threat_value: String,
    likelihood: Likelihood,
    risk_impact: String,
    criticality: String,
}

impl ParsedRow {
    fn parse(line: u64, record: &::csv::StringRecord) -> Result<Self, RegisterError> {
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let bad = |column: &str, reason: String| RegisterError::Row {
            line,
            reason: format!("{column}: {reason}"),
        };
        let int = |i: usize| -> Result<i64, RegisterError> {
            field(i)
                .parse::<i64>()
                .map_err(|_| bad(MATRIX_COLUMNS[i], format!("expected an integer, found {:?}", field(i))))
        };

        let asset = field(1).to_string();
        if asset.is_empty() {
            return Err(bad("Asset/Service", "must not be empty".into()));
        }
        let asset_value = AssetValue::new(int(3)?).map_err(|e| bad("AssetValue", e.to_string()))?;
        let threat_level = field(5)
            .parse::<ThreatLevel>()
            .map_err(|e| bad("ThreatLevel", e.to_string()))?;
        let cia = CiaImpact::new(int(8)?, int(9)?, int(10)?).map_err(|e| bad("Impact", e.to_string()))?;
        let vuln_level = field(11)
            .parse::<VulnerabilityLevel>()
            .map_err(|e| bad("VulnLevel", e.to_string()))?;
        let likelihood = field(13)
            .parse::<Likelihood>()
            .map_err(|e| bad("Likelihood", e.to_string()))?;

        Ok(ParsedRow {
            asset,
            owner: field(2).to_string(),
            asset_value,
            threat: field(4).to_string(),
            threat_level,
            vulnerability: field(6).to_string(),
            remediation: field(7).to_string(),
            cia,
            vuln_level,
            threat_value: field(12).to_string(),
            likelihood,
            risk_impact: field(14).to_string(),
            criticality: field(15).to_string(),
        })
    }

    fn insert(
        self,
        register: &mut RiskRegister,
        line: u64,
        ordinal: &str,
        assessed_on: NaiveDate,
    ) -> Result<(), RegisterError> {
        let row_error = |reason: String| RegisterError::Row { line, reason };
        let input = AssessmentInput {
            asset_value: self.asset_value,
            threat_level: self.threat_level,
            cia: self.cia,
            exposure: ExposureLevel::from_value(self.vuln_level.value().into()).expect("same 1-5 scale"),
            vulnerability_override: Some(self.vuln_level),
            likelihood: self.likelihood,
        };
        let result = assess(&input, &register.policy).map_err(|e| row_error(e.to_string()))?;

        let supplied_criticality = CriticalityLevel::from_label(&self.criticality)
            .or_else(|_| {
                self.criticality
                    .parse::<i64>()
                    .map_err(|_| ())
                    .and_then(|n| CriticalityLevel::from_rank(n).map_err(|_| ()))
            })
            .map_err(|_| row_error(format!("CriticalityLevel: unknown level {:?}", self.criticality)))?;
        let checks = [
            ("ThreatValue", self.threat_value.as_str(), result.threat_value.to_string()),
            ("RiskImpactRating", self.risk_impact.as_str(), result.risk_impact.to_string()),
        ];
        for (column, supplied, computed) in checks {
            if supplied != computed {
                return Err(row_error(format!(
                    "{column}: supplied {supplied:?} but recomputed {computed}"
                )));
            }
        }
        if supplied_criticality != result.criticality {
            return Err(row_error(format!(
                "CriticalityLevel: supplied {} but recomputed {}",
                supplied_criticality, result.criticality
            )));
        }

        match register.assets.get(&self.asset) {
            Some(existing) if existing.owner != self.owner || existing.asset_value != self.asset_value => {
                return Err(row_error(format!(
                    "asset {:?} appears earlier with a different owner or asset value",
                    self.asset
                )));
            }
            Some(_) => {}
            None => register.upsert_in_place(Record::Asset(Asset {
                id: self.asset.clone(),
                name: self.asset.clone(),
                owner: self.owner.clone(),
                category: String::new(),
                asset_value: self.asset_value,
                valuation_rationale: String::new(),
            }))?,
        }

        let threat_id = format!("threat-{ordinal}");
        let vuln_id = format!("vuln-{ordinal}");
        register.upsert_in_place(Record::Threat(ThreatRecord {
            id: threat_id.clone(),
            description: self.threat,
            source_method: "imported".into(),
            level: self.threat_level,
        }))?;
        register.upsert_in_place(Record::Vulnerability(VulnerabilityRecord {
            id: vuln_id.clone(),
            description: self.vulnerability,
            affected_asset_id: self.asset.clone(),
            cia: self.cia,
            exposure: input.exposure,
            rating_override: Some(self.vuln_level),
        }))?;
        let mut remediation_ids = Vec::new();
        if !self.remediation.is_empty() {
            let id = format!("remediation-{ordinal}");
            register.upsert_in_place(Record::Remediation(RemediationRecord {
                id: id.clone(),
                description: self.remediation,
                status: RemediationStatus::Planned,
                effect: RemediationEffect::default(),
                applied_date: None,
            }))?;
            remediation_ids.push(id);
        }
        register.upsert_in_place(Record::Entry(AssessmentEntry {
            id: format!("entry-{ordinal}"),
            asset_id: self.asset,
            threat_id,
            vulnerability_id: vuln_id,
            remediation_ids,
            likelihood: self.likelihood,
            computed: Some(result),
            assessed_date: assessed_on,
            phase: Phase::Conducted,
            needs_recompute: true,
        }))
    }
}
