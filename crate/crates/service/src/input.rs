//! Field-by-field decoding of request bodies, so that every bad field is
//! reported together with its scale bounds.

use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use assessits::scoring::{
    AssessmentInput, AssetValue, CiaImpact, ExposureLevel, Likelihood, ScoringError, ThreatLevel, VulnerabilityLevel,
};

use crate::error::{ApiError, FieldIssue};

pub fn parse_json<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::validation(format!("malformed request body: {e}")))
}

fn object(body: &[u8]) -> Result<Map<String, Value>, ApiError> {
    match parse_json::<Value>(body)? {
        Value::Object(map) => Ok(map),
        _ => Err(ApiError::validation("request body must be a JSON object")),
    }
}

/// Numbers are taken as ratings; strings may be a number or a scale label.
fn scale<T>(fields: &Map<String, Value>, name: &str, from_value: fn(i64) -> Result<T, ScoringError>) -> Result<T, FieldIssue>
where
    T: FromStr<Err = ScoringError>,
{
    match fields.get(name) {
        None | Some(Value::Null) => Err(FieldIssue::new(name, "required")),
        Some(Value::Number(n)) => match n.as_i64() {
            Some(v) => from_value(v).map_err(|e| FieldIssue::from_scoring(name, &e)),
            None => Err(FieldIssue::new(name, format!("expected an integer rating, got {n}"))),
        },
        Some(Value::String(s)) => s.parse().map_err(|e| FieldIssue::from_scoring(name, &e)),
        Some(other) => Err(FieldIssue::new(name, format!("expected a rating, got {other}"))),
    }
}

fn cia(fields: &Map<String, Value>) -> Result<CiaImpact, FieldIssue> {
    let component = |v: &Value, name: &str| {
        v.as_i64()
            .ok_or_else(|| FieldIssue::new(format!("cia.{name}"), format!("expected an integer rating, got {v}")))
    };
    let build = |c, i, a| CiaImpact::new(c, i, a).map_err(|e| FieldIssue::from_scoring("cia", &e));
    match fields.get("cia") {
        None | Some(Value::Null) => Err(FieldIssue::new("cia", "required")),
        Some(Value::String(s)) => s.parse().map_err(|e| FieldIssue::from_scoring("cia", &e)),
        Some(Value::Array(parts)) if parts.len() == 3 => build(
            component(&parts[0], "confidentiality")?,
            component(&parts[1], "integrity")?,
            component(&parts[2], "availability")?,
        ),
        Some(Value::Object(parts)) => {
            let get = |name: &str| {
                parts
                    .get(name)
                    .ok_or_else(|| FieldIssue::new(format!("cia.{name}"), "required"))
                    .and_then(|v| component(v, name))
            };
            build(get("confidentiality")?, get("integrity")?, get("availability")?)
        }
        Some(other) => Err(FieldIssue::new("cia", format!("expected [c, i, a], got {other}"))),
    }
}

fn keep<T>(issues: &mut Vec<FieldIssue>, result: Result<T, FieldIssue>) -> Option<T> {
    result.map_err(|e| issues.push(e)).ok()
}

/// Decodes an assessment request. Accepts `cia` as `[c, i, a]`, `"c,i,a"`
/// or an object with `confidentiality`, `integrity` and `availability`.
pub fn assessment_input(body: &[u8]) -> Result<AssessmentInput, ApiError> {
    let fields = object(body)?;
    let mut issues = Vec::new();
    let asset_value = keep(&mut issues, scale(&fields, "av", AssetValue::new));
    let threat_level = keep(&mut issues, scale(&fields, "threat_level", ThreatLevel::from_value));
    let cia = keep(&mut issues, cia(&fields));
    let exposure = keep(&mut issues, scale(&fields, "exposure", ExposureLevel::from_value));
    let likelihood = keep(&mut issues, scale(&fields, "likelihood", Likelihood::from_value));
    let vulnerability_override = match fields.get("override") {
        None | Some(Value::Null) => Some(None),
        Some(_) => keep(&mut issues, scale(&fields, "override", VulnerabilityLevel::from_value)).map(Some),
    };

    match (asset_value, threat_level, cia, exposure, likelihood, vulnerability_override) {
        (Some(asset_value), Some(threat_level), Some(cia), Some(exposure), Some(likelihood), Some(vulnerability_override)) => {
            Ok(AssessmentInput {
                asset_value,
                threat_level,
                cia,
                exposure,
                vulnerability_override,
                likelihood,
            })
        }
        _ => {
            let summary = issues.iter().map(|i| i.reason.as_str()).collect::<Vec<_>>().join("; ");
            Err(ApiError::validation(format!("invalid assessment input: {summary}")).with_detail(issues))
        }
    }
}
