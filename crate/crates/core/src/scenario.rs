//! What-if remediation simulation.
//!
//! A [`RemediationEffect`] lowers a vulnerability's CIA impacts and exposure
//! by a number of ordinal steps (or pins the vulnerability level outright).
//! Simulation rescores an entry with the effect applied and reports the
//! difference; the register is never touched. [`commit_effect`] is the one
//! operation here that writes, and it must land on the same numbers.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batch::{self, Execution};
use crate::register::{Record, RegisterError, RemediationRecord, RemediationStatus, RiskRegister};
use crate::scoring::{
    assess, AssessmentInput, AssessmentResult, CiaImpact, CriticalityLevel, ExposureLevel, ScoringError,
    VulnerabilityLevel,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown entry {0:?}")]
    UnknownEntry(String),
    #[error("entry {0:?} appears more than once")]
    DuplicateEntry(String),
    #[error("remediation {id:?} has status {status:?}; only implemented remediations can be committed")]
    NotImplementedStatus { id: String, status: RemediationStatus },
    #[error("invalid remediation effect: {0}")]
    InvalidEffect(String),
    #[error("entry {entry_id:?}: {source}")]
    Scoring { entry_id: String, source: ScoringError },
    #[error(transparent)]
    Register(#[from] RegisterError),
}

/// Ordinal reductions applied to a vulnerability. Each delta is 0..=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "EffectFields", into = "EffectFields")]
pub struct RemediationEffect {
    delta_c: u8,
    delta_i: u8,
    delta_a: u8,
    delta_exposure: u8,
    sets_override: Option<VulnerabilityLevel>,
}

#[derive(Serialize, Deserialize)]
struct EffectFields {
    #[serde(default)]
    delta_c: i64,
    #[serde(default)]
    delta_i: i64,
    #[serde(default)]
    delta_a: i64,
    #[serde(default)]
    delta_exposure: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sets_override: Option<VulnerabilityLevel>,
}

impl TryFrom<EffectFields> for RemediationEffect {
    type Error = ScenarioError;
    fn try_from(f: EffectFields) -> Result<Self, Self::Error> {
        RemediationEffect::new(f.delta_c, f.delta_i, f.delta_a, f.delta_exposure, f.sets_override)
    }
}

impl From<RemediationEffect> for EffectFields {
    fn from(e: RemediationEffect) -> Self {
        EffectFields {
            delta_c: e.delta_c.into(),
            delta_i: e.delta_i.into(),
            delta_a: e.delta_a.into(),
            delta_exposure: e.delta_exposure.into(),
            sets_override: e.sets_override,
        }
    }
}

impl RemediationEffect {
    pub const IDENTITY: RemediationEffect = RemediationEffect {
        delta_c: 0,
        delta_i: 0,
        delta_a: 0,
        delta_exposure: 0,
        sets_override: None,
    };

    pub fn new(
        delta_c: i64,
        delta_i: i64,
        delta_a: i64,
        delta_exposure: i64,
        sets_override: Option<VulnerabilityLevel>,
    ) -> Result<Self, ScenarioError> {
        let check = |name: &str, v: i64| {
            if (0..=4).contains(&v) {
                Ok(v as u8)
            } else {
                Err(ScenarioError::InvalidEffect(format!("{name} must be 0–4, got {v}")))
            }
        };
        Ok(RemediationEffect {
            delta_c: check("delta_c", delta_c)?,
            delta_i: check("delta_i", delta_i)?,
            delta_a: check("delta_a", delta_a)?,
            delta_exposure: check("delta_exposure", delta_exposure)?,
            sets_override,
        })
    }

    pub fn delta_c(&self) -> u8 {
        self.delta_c
    }

    pub fn delta_i(&self) -> u8 {
        self.delta_i
    }

    pub fn delta_a(&self) -> u8 {
        self.delta_a
    }

    pub fn delta_exposure(&self) -> u8 {
        self.delta_exposure
    }

    pub fn sets_override(&self) -> Option<VulnerabilityLevel> {
        self.sets_override
    }

    pub fn apply_cia(&self, cia: CiaImpact) -> CiaImpact {
        CiaImpact {
            confidentiality: cia.confidentiality.reduced(self.delta_c),
            integrity: cia.integrity.reduced(self.delta_i),
            availability: cia.availability.reduced(self.delta_a),
        }
    }

    pub fn apply_exposure(&self, exposure: ExposureLevel) -> ExposureLevel {
        let lowered = exposure.value().saturating_sub(self.delta_exposure).max(ExposureLevel::MIN);
        ExposureLevel::from_value(lowered.into()).expect("clamped into scale")
    }

    /// The scoring inputs after remediation.
    pub fn apply(&self, input: &AssessmentInput) -> AssessmentInput {
        AssessmentInput {
            cia: self.apply_cia(input.cia),
            exposure: self.apply_exposure(input.exposure),
            vulnerability_override: self.sets_override.or(input.vulnerability_override),
            ..*input
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskDelta {
    pub entry_id: String,
    pub before: AssessmentResult,
    pub after: AssessmentResult,
    /// `before.ri - after.ri`; positive means risk went down.
    pub ri_reduction: i32,
    /// `after.rank - before.rank`; negative means criticality went down.
    pub criticality_change: i8,
}

/// One `(entry, effect)` pair of a scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub entry_id: String,
    pub effect: RemediationEffect,
}

/// A scenario document: a list of effects to try together.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub assignments: Vec<Assignment>,
}

impl Scenario {
    pub fn from_document(text: &str) -> Result<Scenario, RegisterError> {
        serde_json::from_str(text).map_err(|e| RegisterError::Parse {
            line: e.line(),
            column: e.column(),
            reason: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortfolioSummary {
    pub total_ri_reduction: i64,
    pub criticality_before: BTreeMap<CriticalityLevel, usize>,
    pub criticality_after: BTreeMap<CriticalityLevel, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortfolioOutcome {
    pub deltas: Vec<RiskDelta>,
    pub summary: PortfolioSummary,
}

pub(crate) fn empty_histogram() -> BTreeMap<CriticalityLevel, usize> {
    CriticalityLevel::ALL.iter().map(|&c| (c, 0)).collect()
}

fn delta(entry_id: &str, before: AssessmentResult, after: AssessmentResult) -> RiskDelta {
    RiskDelta {
        entry_id: entry_id.to_string(),
        before,
        after,
        ri_reduction: i32::from(before.risk_impact.value()) - i32::from(after.risk_impact.value()),
        criticality_change: after.criticality.rank() as i8 - before.criticality.rank() as i8,
    }
}

/// Rescores `entry_id` with `effect` applied. The register is not modified.
pub fn simulate(register: &RiskRegister, entry_id: &str, effect: &RemediationEffect) -> Result<RiskDelta, ScenarioError> {
    let entry = register
        .entry(entry_id)
        .ok_or_else(|| ScenarioError::UnknownEntry(entry_id.to_string()))?;
    let input = register.entry_input(entry)?;
    let score = |i: &AssessmentInput| {
        assess(i, register.policy()).map_err(|source| ScenarioError::Scoring {
            entry_id: entry_id.to_string(),
            source,
        })
    };
    let before = score(&input)?;
    let after = score(&effect.apply(&input))?;
    Ok(delta(entry_id, before, after))
}

fn check_assignments(register: &RiskRegister, assignments: &[Assignment]) -> Result<(), ScenarioError> {
    let mut seen = HashSet::new();
    for a in assignments {
        if register.entry(&a.entry_id).is_none() {
            return Err(ScenarioError::UnknownEntry(a.entry_id.clone()));
        }
        if !seen.insert(a.entry_id.as_str()) {
            return Err(ScenarioError::DuplicateEntry(a.entry_id.clone()));
        }
    }
    Ok(())
}

pub fn simulate_portfolio(register: &RiskRegister, assignments: &[Assignment]) -> Result<PortfolioOutcome, ScenarioError> {
    simulate_portfolio_with(Execution::default(), register, assignments)
}

/// Simulates every assignment independently and totals the outcome.
pub fn simulate_portfolio_with(
    exec: Execution,
    register: &RiskRegister,
    assignments: &[Assignment],
) -> Result<PortfolioOutcome, ScenarioError> {
    check_assignments(register, assignments)?;
    let deltas = batch::map(exec, assignments, |a| simulate(register, &a.entry_id, &a.effect))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let mut summary = PortfolioSummary {
        total_ri_reduction: 0,
        criticality_before: empty_histogram(),
        criticality_after: empty_histogram(),
    };
    for d in &deltas {
        summary.total_ri_reduction += i64::from(d.ri_reduction);
        *summary.criticality_before.entry(d.before.criticality).or_default() += 1;
        *summary.criticality_after.entry(d.after.criticality).or_default() += 1;
    }
    Ok(PortfolioOutcome { deltas, summary })
}

/// Candidate remediations ordered by RI reduction (largest first), then by
/// the entry's current RI (largest first), then by entry id.
pub fn rank_remediations(register: &RiskRegister, candidates: &[Assignment]) -> Result<Vec<RiskDelta>, ScenarioError> {
    let mut deltas = simulate_portfolio(register, candidates)?.deltas;
    deltas.sort_by(|a, b| {
        b.ri_reduction
            .cmp(&a.ri_reduction)
            .then_with(|| b.before.risk_impact.cmp(&a.before.risk_impact))
            .then_with(|| a.entry_id.cmp(&b.entry_id))
    });
    Ok(deltas)
}

/// Applies an implemented remediation to an entry's vulnerability, links it,
/// rescores, and bumps the version once.
pub fn commit_effect(
    register: &RiskRegister,
    entry_id: &str,
    remediation: RemediationRecord,
) -> Result<RiskRegister, ScenarioError> {
    if remediation.status != RemediationStatus::Implemented {
        return Err(ScenarioError::NotImplementedStatus {
            id: remediation.id,
            status: remediation.status,
        });
    }
    let entry = register
        .entry(entry_id)
        .ok_or_else(|| ScenarioError::UnknownEntry(entry_id.to_string()))?
        .clone();
    register.entry_input(&entry)?;
    let effect = remediation.effect;
    let mut vuln = register
        .vulnerability(&entry.vulnerability_id)
        .cloned()
        .expect("references checked");
    vuln.cia = effect.apply_cia(vuln.cia);
    vuln.exposure = effect.apply_exposure(vuln.exposure);
    if let Some(level) = effect.sets_override() {
        vuln.rating_override = Some(level);
    }

    let mut next = register.clone();
    let remediation_id = remediation.id.clone();
    next.upsert_in_place(Record::Remediation(remediation))?;
    next.upsert_in_place(Record::Vulnerability(vuln))?;
    let mut entry = entry;
    if !entry.remediation_ids.contains(&remediation_id) {
        entry.remediation_ids.push(remediation_id);
    }
    next.upsert_in_place(Record::Entry(entry))?;
    next.recompute_in_place(Execution::default())?;
    next.version = register.version() + 1;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::register::fixtures::{date, worked_example};
    use crate::scoring::ThreatLevel;

    fn zeroing() -> RemediationEffect {
        RemediationEffect::new(4, 4, 4, 4, None).unwrap()
    }

    fn implemented(effect: RemediationEffect) -> RemediationRecord {
        RemediationRecord {
            id: "rem-01".into(),
            description: "new firewall".into(),
            status: RemediationStatus::Implemented,
            effect,
            applied_date: Some(date("2024-02-01")),
        }
    }

    #[test]
    fn zeroing_effect_on_worked_example() {
        let r = worked_example();
        let d = simulate(&r, "entry-01", &zeroing()).unwrap();
        assert_eq!(d.before.risk_impact.value(), 144);
        assert_eq!(d.after.vulnerability.value(), 1);
        assert_eq!(d.after.threat_value.value(), 5);
        assert_eq!(d.after.risk_impact.value(), 80);
        assert_eq!(d.after.criticality, CriticalityLevel::Medium);
        assert_eq!(d.ri_reduction, 64);
        assert_eq!(d.criticality_change, -1);
    }

    #[test]
    fn identity_effect_changes_nothing() {
        let r = worked_example();
        let d = simulate(&r, "entry-01", &RemediationEffect::IDENTITY).unwrap();
        assert_eq!(d.before, d.after);
        assert_eq!(d.ri_reduction, 0);
        assert_eq!(d.criticality_change, 0);
    }

    #[test]
    fn unknown_entry() {
        let r = worked_example();
        assert!(matches!(
            simulate(&r, "nope", &zeroing()),
            Err(ScenarioError::UnknownEntry(id)) if id == "nope"
        ));
    }

    #[test]
    fn effect_deltas_are_bounded() {
        assert!(RemediationEffect::new(5, 0, 0, 0, None).is_err());
        assert!(RemediationEffect::new(0, 0, 0, -1, None).is_err());
        assert!(serde_json::from_str::<RemediationEffect>(r#"{"delta_c": 9}"#).is_err());
        let e: RemediationEffect = serde_json::from_str(r#"{"delta_exposure": 2}"#).unwrap();
        assert_eq!(e.delta_exposure(), 2);
        assert_eq!(e.delta_c(), 0);
    }

    #[test]
    fn clamping() {
        let e = RemediationEffect::new(4, 4, 4, 4, None).unwrap();
        assert_eq!(e.apply_exposure(ExposureLevel::Medium), ExposureLevel::Negligible);
        let cia = e.apply_cia(CiaImpact::new(1, 2, 3).unwrap());
        assert_eq!(cia, CiaImpact::new(0, 0, 0).unwrap());
    }

    fn two_entry_register() -> RiskRegister {
        let r = worked_example();
        let mut t = r.threat("thr-01").unwrap().clone();
        t.id = "thr-02".into();
        t.level = ThreatLevel::Minor;
        let r = r.upsert(Record::Threat(t)).unwrap();
        let mut e = r.entry("entry-01").unwrap().clone();
        e.id = "entry-02".into();
        e.threat_id = "thr-02".into();
        r.upsert(Record::Entry(e)).unwrap().recompute_all().unwrap()
    }

    #[test]
    fn portfolio_matches_individual_simulations() {
        let r = two_entry_register();
        let a = Assignment {
            entry_id: "entry-01".into(),
            effect: zeroing(),
        };
        let b = Assignment {
            entry_id: "entry-02".into(),
            effect: RemediationEffect::new(0, 0, 0, 2, None).unwrap(),
        };
        let out = simulate_portfolio(&r, &[a.clone(), b.clone()]).unwrap();
        let da = simulate(&r, &a.entry_id, &a.effect).unwrap();
        let db = simulate(&r, &b.entry_id, &b.effect).unwrap();
        assert_eq!(out.deltas, vec![da.clone(), db.clone()]);
        assert_eq!(out.summary.total_ri_reduction, i64::from(da.ri_reduction + db.ri_reduction));
        assert_eq!(out.summary.criticality_before.values().sum::<usize>(), 2);

        let single = simulate_portfolio(&r, std::slice::from_ref(&a)).unwrap();
        assert_eq!(single.deltas, vec![da]);

        let empty = simulate_portfolio(&r, &[]).unwrap();
        assert!(empty.deltas.is_empty());
        assert_eq!(empty.summary.total_ri_reduction, 0);
        assert!(empty.summary.criticality_after.values().all(|&n| n == 0));
    }

    #[test]
    fn portfolio_rejects_bad_ids() {
        let r = two_entry_register();
        let a = Assignment {
            entry_id: "entry-01".into(),
            effect: zeroing(),
        };
        let ghost = Assignment {
            entry_id: "ghost".into(),
            effect: zeroing(),
        };
        assert!(matches!(
            simulate_portfolio(&r, &[a.clone(), a.clone()]),
            Err(ScenarioError::DuplicateEntry(_))
        ));
        assert!(matches!(
            simulate_portfolio(&r, &[a, ghost]),
            Err(ScenarioError::UnknownEntry(id)) if id == "ghost"
        ));
    }

    #[test]
    fn ranking_order() {
        let r = two_entry_register();
        let before_02 = r.entry("entry-02").unwrap().computed.unwrap().risk_impact.value();
        let ranked = rank_remediations(
            &r,
            &[
                Assignment {
                    entry_id: "entry-02".into(),
                    effect: RemediationEffect::new(0, 0, 0, 1, None).unwrap(),
                },
                Assignment {
                    entry_id: "entry-01".into(),
                    effect: zeroing(),
                },
            ],
        )
        .unwrap();
        assert_eq!(ranked[0].entry_id, "entry-01");
        assert!(ranked[0].ri_reduction >= ranked[1].ri_reduction);
        assert!(before_02 < 144);

        // equal (zero) reductions fall back to current RI
        let ties = rank_remediations(
            &r,
            &[
                Assignment {
                    entry_id: "entry-02".into(),
                    effect: RemediationEffect::IDENTITY,
                },
                Assignment {
                    entry_id: "entry-01".into(),
                    effect: RemediationEffect::IDENTITY,
                },
            ],
        )
        .unwrap();
        assert_eq!(ties[0].entry_id, "entry-01");
        assert!(rank_remediations(&r, &[]).unwrap().is_empty());
    }

    #[test]
    fn commit_matches_simulation() {
        let r = worked_example();
        let simulated = simulate(&r, "entry-01", &zeroing()).unwrap();
        let committed = commit_effect(&r, "entry-01", implemented(zeroing())).unwrap();
        assert_eq!(committed.version(), r.version() + 1);
        let entry = committed.entry("entry-01").unwrap();
        assert_eq!(entry.computed.unwrap(), simulated.after);
        assert_eq!(entry.remediation_ids, vec!["rem-01".to_string()]);
        assert!(committed.is_consistent());
        assert_eq!(committed.entry("entry-01").unwrap().computed.unwrap().risk_impact.value(), 80);
    }

    #[test]
    fn commit_requires_implemented_status() {
        let r = worked_example();
        let mut rem = implemented(zeroing());
        rem.status = RemediationStatus::Planned;
        assert!(matches!(
            commit_effect(&r, "entry-01", rem),
            Err(ScenarioError::NotImplementedStatus { .. })
        ));
    }

    #[test]
    fn commit_identity_links_and_bumps() {
        let r = worked_example();
        let committed = commit_effect(&r, "entry-01", implemented(RemediationEffect::IDENTITY)).unwrap();
        assert_eq!(committed.version(), r.version() + 1);
        assert_eq!(
            committed.entry("entry-01").unwrap().computed,
            r.entry("entry-01").unwrap().computed
        );
        assert!(committed.remediation("rem-01").is_some());
    }

    #[test]
    fn override_effect() {
        let r = worked_example();
        let e = RemediationEffect::new(0, 0, 0, 0, Some(VulnerabilityLevel::Medium)).unwrap();
        let d = simulate(&r, "entry-01", &e).unwrap();
        assert_eq!(d.after.vulnerability, VulnerabilityLevel::Medium);
        assert_eq!(d.after.risk_impact.value(), 4 * 7 * 4);
    }

    #[test]
    fn scenario_document() {
        let s = Scenario::from_document(
            r#"{"assignments":[{"entry_id":"entry-01","effect":{"delta_c":4,"delta_i":4,"delta_a":4,"delta_exposure":4}}]}"#,
        )
        .unwrap();
        assert_eq!(s.assignments[0].effect, zeroing());
    }
}
