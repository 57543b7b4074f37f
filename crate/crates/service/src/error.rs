use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use assessits::register::RegisterError;
use assessits::reporting::ReportError;
use assessits::scenario::ScenarioError;
use assessits::ScoringError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorCode {
    NotFound,
    Conflict,
    Validation,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Conflict => StatusCode::CONFLICT,
            ErrorCode::Validation => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

/// One offending input field. `min`/`max` are present when the field sits
/// on a bounded scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldIssue {
    pub field: String,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<u32>,
}

impl FieldIssue {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        FieldIssue {
            field: field.into(),
            reason: reason.into(),
            min: None,
            max: None,
        }
    }

    pub fn from_scoring(field: impl Into<String>, e: &ScoringError) -> Self {
        let mut issue = FieldIssue::new(field, e.to_string());
        if let ScoringError::OutOfRange { min, max, .. } = *e {
            issue.min = Some(min);
            issue.max = Some(max);
        }
        issue
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detail: Vec<FieldIssue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_version: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actual_version: Option<u64>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            detail: Vec::new(),
            expected_version: None,
            actual_version: None,
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        ApiError::new(ErrorCode::Validation, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(ErrorCode::NotFound, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(ErrorCode::Internal, message)
    }

    pub fn conflict(expected: u64, actual: u64) -> Self {
        ApiError {
            expected_version: Some(expected),
            actual_version: Some(actual),
            ..ApiError::new(
                ErrorCode::Conflict,
                format!("version conflict: expected {expected}, register is at {actual}"),
            )
        }
    }

    pub fn with_detail(mut self, detail: Vec<FieldIssue>) -> Self {
        self.detail = detail;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

impl From<ScoringError> for ApiError {
    fn from(e: ScoringError) -> Self {
        let field = match &e {
            ScoringError::OutOfRange { scale, .. } | ScoringError::UnknownLabel { scale, .. } => scale.to_string(),
            ScoringError::OutOfPolicyRange { .. } | ScoringError::InvalidPolicy(_) => "policy".into(),
            ScoringError::NegativeRate(_) => "incident_rate".into(),
        };
        ApiError::validation(e.to_string()).with_detail(vec![FieldIssue::from_scoring(field, &e)])
    }
}

impl From<RegisterError> for ApiError {
    fn from(e: RegisterError) -> Self {
        match e {
            RegisterError::VersionConflict { expected, actual } => ApiError::conflict(expected, actual),
            RegisterError::Io(_) | RegisterError::NotFound(_) => ApiError::internal(e.to_string()),
            RegisterError::Integrity(ref refs) => {
                let detail = refs
                    .iter()
                    .map(|r| {
                        FieldIssue::new(
                            format!("{}.{}", r.from_id, r.field),
                            format!("missing {} {:?}", r.target_kind, r.missing_id),
                        )
                    })
                    .collect();
                ApiError::validation(e.to_string()).with_detail(detail)
            }
            RegisterError::Scoring { ref entry_id, ref source } => {
                ApiError::validation(e.to_string()).with_detail(vec![FieldIssue::from_scoring(entry_id.clone(), source)])
            }
            RegisterError::NeedsRecompute(ref ids) => {
                let detail = ids.iter().map(|id| FieldIssue::new(id.clone(), "needs recompute")).collect();
                ApiError::validation(e.to_string()).with_detail(detail)
            }
            other => ApiError::validation(other.to_string()),
        }
    }
}

impl From<ScenarioError> for ApiError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::UnknownEntry(_) => ApiError::not_found(e.to_string()),
            ScenarioError::Register(inner) => inner.into(),
            ScenarioError::Scoring { ref entry_id, ref source } => {
                ApiError::validation(e.to_string()).with_detail(vec![FieldIssue::from_scoring(entry_id.clone(), source)])
            }
            other => ApiError::validation(other.to_string()),
        }
    }
}

impl From<ReportError> for ApiError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Register(inner) => inner.into(),
            ReportError::InconsistentRegister(ids) => RegisterError::NeedsRecompute(ids).into(),
            other => ApiError::validation(other.to_string()),
        }
    }
}
