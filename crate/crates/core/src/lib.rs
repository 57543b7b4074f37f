//! Risk assessment engine.
//!
//! Rates assets, threats and vulnerabilities on five-point ordinal scales,
//! multiplies them out into a risk impact score between 2 and 250, and
//! buckets that score into a criticality level. Around the scoring core sit
//! a versioned register of findings, a what-if remediation simulator and
//! report renderers for the assessment matrix.

pub mod batch;
pub mod register;
pub mod reporting;
pub mod scenario;
pub mod scoring;

pub use batch::Execution;
pub use register::{
    AssessmentEntry, Asset, Phase, Record, RegisterError, RemediationRecord, RemediationStatus, RiskRegister,
    ThreatRecord, VulnerabilityRecord,
};
pub use scenario::{RemediationEffect, RiskDelta, ScenarioError};
pub use scoring::{
    assess, AssessmentInput, AssessmentResult, AssetValue, CiaImpact, CriticalityLevel, ExposureLevel, Likelihood,
    RiskImpactScore, RiskTolerancePolicy, ScoringError, ThreatLevel, ThreatValue, VulnerabilityLevel,
};
