//! Rating scales, the threat-value and risk-impact formulas, and criticality
//! classification.
//!
//! Everything here is a pure function of its arguments. Range checks happen
//! when a scale value is constructed, so the formulas themselves cannot fail
//! except where a tolerance policy is involved.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("{scale} must be {min}–{max}, got {value}")]
    OutOfRange {
        scale: &'static str,
        min: u32,
        max: u32,
        value: i64,
    },
    #[error("unknown {scale} label {label:?}")]
    UnknownLabel { scale: &'static str, label: String },
    #[error("risk impact {score} is outside the tolerance policy range 1–{critical_max}")]
    OutOfPolicyRange { score: u32, critical_max: u32 },
    #[error("invalid risk tolerance policy: {0}")]
    InvalidPolicy(String),
    #[error("incident rate must be a non-negative number, got {0}")]
    NegativeRate(f64),
}

fn out_of_range(scale: &'static str, min: u32, max: u32, value: i64) -> ScoringError {
    ScoringError::OutOfRange {
        scale,
        min,
        max,
        value,
    }
}

/// Generates a labelled ordinal scale: a fieldless enum whose discriminants
/// are the ratings, serialized as the bare integer.
macro_rules! ordinal_scale {
    (
        $(#[$meta:meta])*
        $name:ident, $scale:literal, [$($variant:ident = $value:literal => $label:literal),+ $(,)?]
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "i64", into = "u8")]
        pub enum $name {
            $($variant = $value),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];
            pub const SCALE: &'static str = $scale;
            pub const MIN: u8 = {
                let all = [$($value),+];
                all[0]
            };
            pub const MAX: u8 = {
                let all = [$($value),+];
                all[all.len() - 1]
            };

            pub fn value(self) -> u8 {
                self as u8
            }

            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }

            pub fn from_value(value: i64) -> Result<Self, ScoringError> {
                match value {
                    $($value => Ok($name::$variant),)+
                    other => Err(out_of_range($scale, Self::MIN.into(), Self::MAX.into(), other)),
                }
            }

            pub fn from_label(label: &str) -> Result<Self, ScoringError> {
                let wanted = label.trim();
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.label().eq_ignore_ascii_case(wanted))
                    .ok_or_else(|| ScoringError::UnknownLabel {
                        scale: $scale,
                        label: label.to_string(),
                    })
            }
        }

        impl TryFrom<i64> for $name {
            type Error = ScoringError;
            fn try_from(value: i64) -> Result<Self, Self::Error> {
                Self::from_value(value)
            }
        }

        impl From<$name> for u8 {
            fn from(v: $name) -> u8 {
                v.value()
            }
        }

        impl std::str::FromStr for $name {
            type Err = ScoringError;

            /// Accepts either the numeric rating or its label.
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim().parse::<i64>() {
                    Ok(n) => Self::from_value(n),
                    Err(_) => Self::from_label(s),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.value())
            }
        }
    };
}

ordinal_scale!(
    /// Business impact of a threat.
    ThreatLevel, "threat level", [
        Insignificant = 1 => "Insignificant",
        Minor = 2 => "Minor",
        Moderate = 3 => "Moderate",
        Major = 4 => "Major",
        Catastrophic = 5 => "Catastrophic",
    ]
);

ordinal_scale!(
    /// How exposed an asset is to the threat.
    ExposureLevel, "exposure", [
        Negligible = 1 => "Negligible",
        LowOrMinimal = 2 => "Low or Minimal",
        Medium = 3 => "Medium",
        High = 4 => "High",
        Highest = 5 => "Highest",
    ]
);

ordinal_scale!(
    /// Overall vulnerability level. Shares its vocabulary with [`ExposureLevel`].
    VulnerabilityLevel, "vulnerability level", [
        Negligible = 1 => "Negligible",
        LowOrMinimal = 2 => "Low or Minimal",
        Medium = 3 => "Medium",
        High = 4 => "High",
        Highest = 5 => "Highest",
    ]
);

ordinal_scale!(
    Likelihood, "likelihood", [
        VeryUnlikely = 1 => "Very Unlikely",
        Unlikely = 2 => "Unlikely",
        Possible = 3 => "Possible",
        Likely = 4 => "Likely",
        VeryLikely = 5 => "Very Likely",
    ]
);

/// Four-tier classification of a risk impact score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CriticalityLevel {
    Low = 1,
    Medium = 2,
    High = 3,
    Critical = 4,
}

impl CriticalityLevel {
    pub const ALL: &'static [CriticalityLevel] = &[
        CriticalityLevel::Low,
        CriticalityLevel::Medium,
        CriticalityLevel::High,
        CriticalityLevel::Critical,
    ];
    pub const SCALE: &'static str = "criticality";

    pub fn rank(self) -> u8 {
        self as u8
    }

    pub fn label(self) -> &'static str {
        match self {
            CriticalityLevel::Low => "Low",
            CriticalityLevel::Medium => "Medium",
            CriticalityLevel::High => "High",
            CriticalityLevel::Critical => "Critical",
        }
    }

    pub fn from_rank(rank: i64) -> Result<Self, ScoringError> {
        match rank {
            1 => Ok(CriticalityLevel::Low),
            2 => Ok(CriticalityLevel::Medium),
            3 => Ok(CriticalityLevel::High),
            4 => Ok(CriticalityLevel::Critical),
            other => Err(out_of_range(Self::SCALE, 1, 4, other)),
        }
    }

    pub fn from_label(label: &str) -> Result<Self, ScoringError> {
        let wanted = label.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.label().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| ScoringError::UnknownLabel {
                scale: Self::SCALE,
                label: label.to_string(),
            })
    }
}

impl fmt::Display for CriticalityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Committee-assigned worth of an asset, 1 to 5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct AssetValue(u8);

impl AssetValue {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 5;

    pub fn new(value: i64) -> Result<Self, ScoringError> {
        if (i64::from(Self::MIN)..=i64::from(Self::MAX)).contains(&value) {
            Ok(AssetValue(value as u8))
        } else {
            Err(out_of_range("asset value", 1, 5, value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = AssetValue> {
        (Self::MIN..=Self::MAX).map(AssetValue)
    }
}

impl TryFrom<i64> for AssetValue {
    type Error = ScoringError;
    fn try_from(value: i64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<AssetValue> for u8 {
    fn from(v: AssetValue) -> u8 {
        v.0
    }
}

impl std::str::FromStr for AssetValue {
    type Err = ScoringError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let n = s.trim().parse::<i64>().map_err(|_| ScoringError::UnknownLabel {
            scale: "asset value",
            label: s.to_string(),
        })?;
        Self::new(n)
    }
}

impl fmt::Display for AssetValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A single CIA impact component, 0 (no impact) to 4 (critical impact).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct ImpactRating(u8);

impl ImpactRating {
    pub const MIN: u8 = 0;
    pub const MAX: u8 = 4;
    pub const NONE: ImpactRating = ImpactRating(0);
    pub const CRITICAL: ImpactRating = ImpactRating(4);

    pub fn new(value: i64) -> Result<Self, ScoringError> {
        Self::named("CIA impact", value)
    }

    fn named(scale: &'static str, value: i64) -> Result<Self, ScoringError> {
        if (0..=4).contains(&value) {
            Ok(ImpactRating(value as u8))
        } else {
            Err(out_of_range(scale, 0, 4, value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Lowers the rating by `by` steps, stopping at 0.
    pub fn reduced(self, by: u8) -> ImpactRating {
        ImpactRating(self.0.saturating_sub(by))
    }
}

impl TryFrom<i64> for ImpactRating {
    type Error = ScoringError;
    fn try_from(value: i64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ImpactRating> for u8 {
    fn from(v: ImpactRating) -> u8 {
        v.0
    }
}

impl fmt::Display for ImpactRating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CiaImpact {
    pub confidentiality: ImpactRating,
    pub integrity: ImpactRating,
    pub availability: ImpactRating,
}

impl CiaImpact {
    pub fn new(confidentiality: i64, integrity: i64, availability: i64) -> Result<Self, ScoringError> {
        Ok(CiaImpact {
            confidentiality: ImpactRating::named("confidentiality impact", confidentiality)?,
            integrity: ImpactRating::named("integrity impact", integrity)?,
            availability: ImpactRating::named("availability impact", availability)?,
        })
    }

    pub fn max_component(&self) -> ImpactRating {
        self.confidentiality.max(self.integrity).max(self.availability)
    }
}

impl std::str::FromStr for CiaImpact {
    type Err = ScoringError;

    /// Parses `C,I,A`, e.g. `4,3,0`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || ScoringError::UnknownLabel {
            scale: "CIA impact",
            label: s.to_string(),
        };
        if parts.len() != 3 {
            return Err(bad());
        }
        let mut nums = [0i64; 3];
        for (slot, part) in nums.iter_mut().zip(&parts) {
            *slot = part.parse().map_err(|_| bad())?;
        }
        CiaImpact::new(nums[0], nums[1], nums[2])
    }
}

/// Whether a vulnerability rating was entered directly or derived from
/// CIA impact and exposure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatingSource {
    Direct,
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VulnerabilityRating {
    pub level: VulnerabilityLevel,
    pub source: RatingSource,
}

impl VulnerabilityRating {
    pub fn direct(level: VulnerabilityLevel) -> Self {
        VulnerabilityRating {
            level,
            source: RatingSource::Direct,
        }
    }

    pub fn value(&self) -> u8 {
        self.level.value()
    }
}

/// Threat level plus vulnerability level, 2 to 10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct ThreatValue(u8);

impl ThreatValue {
    pub fn new(value: i64) -> Result<Self, ScoringError> {
        if (2..=10).contains(&value) {
            Ok(ThreatValue(value as u8))
        } else {
            Err(out_of_range("threat value", 2, 10, value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl TryFrom<i64> for ThreatValue {
    type Error = ScoringError;
    fn try_from(value: i64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ThreatValue> for u8 {
    fn from(v: ThreatValue) -> u8 {
        v.0
    }
}

impl fmt::Display for ThreatValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Asset value × threat value × likelihood, 2 to 250.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u16")]
pub struct RiskImpactScore(u16);

impl RiskImpactScore {
    pub const MIN: u16 = 2;
    pub const MAX: u16 = 250;

    pub fn new(value: i64) -> Result<Self, ScoringError> {
        if (i64::from(Self::MIN)..=i64::from(Self::MAX)).contains(&value) {
            Ok(RiskImpactScore(value as u16))
        } else {
            Err(out_of_range("risk impact rating", 2, 250, value))
        }
    }

    pub fn value(self) -> u16 {
        self.0
    }
}

impl TryFrom<i64> for RiskImpactScore {
    type Error = ScoringError;
    fn try_from(value: i64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<RiskImpactScore> for u16 {
    fn from(v: RiskImpactScore) -> u16 {
        v.0
    }
}

impl fmt::Display for RiskImpactScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Upper bounds (inclusive) of the Low, Medium, High and Critical buckets.
///
/// The buckets partition `1..=critical_max`. The defaults are 45, 99, 199
/// and 250; organizations with a different risk tolerance can move them as
/// long as they stay strictly increasing and cover the highest achievable
/// score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PolicyBounds", into = "PolicyBounds")]
pub struct RiskTolerancePolicy {
    low_max: u32,
    medium_max: u32,
    high_max: u32,
    critical_max: u32,
}

#[derive(Serialize, Deserialize)]
struct PolicyBounds {
    low_max: u32,
    medium_max: u32,
    high_max: u32,
    critical_max: u32,
}

impl TryFrom<PolicyBounds> for RiskTolerancePolicy {
    type Error = ScoringError;
    fn try_from(b: PolicyBounds) -> Result<Self, Self::Error> {
        RiskTolerancePolicy::new(b.low_max, b.medium_max, b.high_max, b.critical_max)
    }
}

impl From<RiskTolerancePolicy> for PolicyBounds {
    fn from(p: RiskTolerancePolicy) -> Self {
        PolicyBounds {
            low_max: p.low_max,
            medium_max: p.medium_max,
            high_max: p.high_max,
            critical_max: p.critical_max,
        }
    }
}

impl RiskTolerancePolicy {
    pub fn new(low_max: u32, medium_max: u32, high_max: u32, critical_max: u32) -> Result<Self, ScoringError> {
        if low_max < 1 {
            return Err(ScoringError::InvalidPolicy("low_max must be at least 1".into()));
        }
        if !(low_max < medium_max && medium_max < high_max && high_max < critical_max) {
            return Err(ScoringError::InvalidPolicy(format!(
                "bounds must be strictly increasing, got {low_max} < {medium_max} < {high_max} < {critical_max}"
            )));
        }
        if critical_max < u32::from(RiskImpactScore::MAX) {
            return Err(ScoringError::InvalidPolicy(format!(
                "critical_max must be at least {}, got {critical_max}",
                RiskImpactScore::MAX
            )));
        }
        Ok(RiskTolerancePolicy {
            low_max,
            medium_max,
            high_max,
            critical_max,
        })
    }

    pub fn low_max(&self) -> u32 {
        self.low_max
    }

    pub fn medium_max(&self) -> u32 {
        self.medium_max
    }

    pub fn high_max(&self) -> u32 {
        self.high_max
    }

    pub fn critical_max(&self) -> u32 {
        self.critical_max
    }

    /// Inclusive score range covered by `level`.
    pub fn range(&self, level: CriticalityLevel) -> std::ops::RangeInclusive<u32> {
        match level {
            CriticalityLevel::Low => 1..=self.low_max,
            CriticalityLevel::Medium => self.low_max + 1..=self.medium_max,
            CriticalityLevel::High => self.medium_max + 1..=self.high_max,
            CriticalityLevel::Critical => self.high_max + 1..=self.critical_max,
        }
    }
}

impl Default for RiskTolerancePolicy {
    fn default() -> Self {
        RiskTolerancePolicy {
            low_max: 45,
            medium_max: 99,
            high_max: 199,
            critical_max: 250,
        }
    }
}

impl std::str::FromStr for RiskTolerancePolicy {
    type Err = ScoringError;

    /// Parses `low,medium,high,critical` upper bounds, e.g. `45,99,199,250`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let nums: Result<Vec<u32>, _> = s.split(',').map(|p| p.trim().parse::<u32>()).collect();
        match nums.as_deref() {
            Ok([l, m, h, c]) => RiskTolerancePolicy::new(*l, *m, *h, *c),
            _ => Err(ScoringError::InvalidPolicy(format!(
                "expected four comma-separated bounds, got {s:?}"
            ))),
        }
    }
}

pub fn compute_threat_value(threat: ThreatLevel, vulnerability: VulnerabilityLevel) -> ThreatValue {
    ThreatValue(threat.value() + vulnerability.value())
}

pub fn compute_risk_impact(asset_value: AssetValue, threat_value: ThreatValue, likelihood: Likelihood) -> RiskImpactScore {
    RiskImpactScore(
        u16::from(asset_value.value()) * u16::from(threat_value.value()) * u16::from(likelihood.value()),
    )
}

/// Buckets a score under `policy`. Upper bounds are inclusive.
///
/// Takes a raw score rather than a [`RiskImpactScore`] so that policies can
/// be checked over their whole domain, including 1.
pub fn classify_criticality(score: u32, policy: &RiskTolerancePolicy) -> Result<CriticalityLevel, ScoringError> {
    if score < 1 || score > policy.critical_max {
        return Err(ScoringError::OutOfPolicyRange {
            score,
            critical_max: policy.critical_max,
        });
    }
    Ok(if score <= policy.low_max {
        CriticalityLevel::Low
    } else if score <= policy.medium_max {
        CriticalityLevel::Medium
    } else if score <= policy.high_max {
        CriticalityLevel::High
    } else {
        CriticalityLevel::Critical
    })
}

/// Combines CIA impact and exposure into an overall vulnerability level.
///
/// The worst CIA component scales exposure between one half (no impact) and
/// the full exposure (critical impact):
/// `round(exposure × (0.5 + 0.5 × max(C, I, A) / 4))`, rounding halves away
/// from zero, clamped to 1..=5.
pub fn derive_vulnerability_rating(cia: CiaImpact, exposure: ExposureLevel) -> VulnerabilityRating {
    // exposure × (4 + m) / 8, rounded half-up in integer arithmetic.
    let numerator = u32::from(exposure.value()) * (4 + u32::from(cia.max_component().value()));
    let rounded = (2 * numerator + 8) / 16;
    let clamped = rounded.clamp(1, 5);
    VulnerabilityRating {
        level: VulnerabilityLevel::from_value(i64::from(clamped)).expect("clamped into scale"),
        source: RatingSource::Derived,
    }
}

/// Advisory likelihood from an annualized incident rate.
///
/// Bands: none → 1, up to 0.1/yr → 2, up to 0.5/yr → 3, up to 2/yr → 4,
/// above that → 5. Never applied automatically.
pub fn suggest_likelihood(annualized_incident_rate: f64) -> Result<Likelihood, ScoringError> {
    let rate = annualized_incident_rate;
    if rate.is_nan() || rate < 0.0 {
        return Err(ScoringError::NegativeRate(rate));
    }
    Ok(if rate == 0.0 {
        Likelihood::VeryUnlikely
    } else if rate <= 0.1 {
        Likelihood::Unlikely
    } else if rate <= 0.5 {
        Likelihood::Possible
    } else if rate <= 2.0 {
        Likelihood::Likely
    } else {
        Likelihood::VeryLikely
    })
}

/// The scales that carry labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleKind {
    ThreatLevel,
    Exposure,
    Vulnerability,
    Likelihood,
    Criticality,
}

impl ScaleKind {
    pub const ALL: &'static [ScaleKind] = &[
        ScaleKind::ThreatLevel,
        ScaleKind::Exposure,
        ScaleKind::Vulnerability,
        ScaleKind::Likelihood,
        ScaleKind::Criticality,
    ];

    pub fn bounds(self) -> (u8, u8) {
        match self {
            ScaleKind::ThreatLevel => (ThreatLevel::MIN, ThreatLevel::MAX),
            ScaleKind::Exposure => (ExposureLevel::MIN, ExposureLevel::MAX),
            ScaleKind::Vulnerability => (VulnerabilityLevel::MIN, VulnerabilityLevel::MAX),
            ScaleKind::Likelihood => (Likelihood::MIN, Likelihood::MAX),
            ScaleKind::Criticality => (1, 4),
        }
    }
}

pub fn map_label(scale: ScaleKind, value: i64) -> Result<&'static str, ScoringError> {
    Ok(match scale {
        ScaleKind::ThreatLevel => ThreatLevel::from_value(value)?.label(),
        ScaleKind::Exposure => ExposureLevel::from_value(value)?.label(),
        ScaleKind::Vulnerability => VulnerabilityLevel::from_value(value)?.label(),
        ScaleKind::Likelihood => Likelihood::from_value(value)?.label(),
        ScaleKind::Criticality => CriticalityLevel::from_rank(value)?.label(),
    })
}

pub fn unmap_label(scale: ScaleKind, label: &str) -> Result<u8, ScoringError> {
    Ok(match scale {
        ScaleKind::ThreatLevel => ThreatLevel::from_label(label)?.value(),
        ScaleKind::Exposure => ExposureLevel::from_label(label)?.value(),
        ScaleKind::Vulnerability => VulnerabilityLevel::from_label(label)?.value(),
        ScaleKind::Likelihood => Likelihood::from_label(label)?.value(),
        ScaleKind::Criticality => CriticalityLevel::from_label(label)?.rank(),
    })
}

/// Everything needed to score one asset/threat/vulnerability combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssessmentInput {
    #[serde(rename = "av")]
    pub asset_value: AssetValue,
    pub threat_level: ThreatLevel,
    pub cia: CiaImpact,
    pub exposure: ExposureLevel,
    #[serde(rename = "override", default, skip_serializing_if = "Option::is_none")]
    pub vulnerability_override: Option<VulnerabilityLevel>,
    pub likelihood: Likelihood,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssessmentResult {
    #[serde(rename = "vr")]
    pub vulnerability: VulnerabilityLevel,
    #[serde(rename = "vr_source")]
    pub vulnerability_source: RatingSource,
    #[serde(rename = "tv")]
    pub threat_value: ThreatValue,
    #[serde(rename = "ri")]
    pub risk_impact: RiskImpactScore,
    pub criticality: CriticalityLevel,
}

impl AssessmentResult {
    pub fn vulnerability_rating(&self) -> VulnerabilityRating {
        VulnerabilityRating {
            level: self.vulnerability,
            source: self.vulnerability_source,
        }
    }
}

/// Runs the full pipeline for one input.
pub fn assess(input: &AssessmentInput, policy: &RiskTolerancePolicy) -> Result<AssessmentResult, ScoringError> {
    let rating = match input.vulnerability_override {
        Some(level) => VulnerabilityRating::direct(level),
        None => derive_vulnerability_rating(input.cia, input.exposure),
    };
    let threat_value = compute_threat_value(input.threat_level, rating.level);
    let risk_impact = compute_risk_impact(input.asset_value, threat_value, input.likelihood);
    let criticality = classify_criticality(u32::from(risk_impact.value()), policy)?;
    Ok(AssessmentResult {
        vulnerability: rating.level,
        vulnerability_source: rating.source,
        threat_value,
        risk_impact,
        criticality,
    })
}
