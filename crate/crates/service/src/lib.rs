//! HTTP API over a single register document.
//!
//! | method | path                | body / query                              |
//! |--------|---------------------|-------------------------------------------|
//! | GET    | `/register`         | the register document                     |
//! | PUT    | `/register/records` | `{record, expected_version}`              |
//! | POST   | `/assess`           | `{av, threat_level, cia, exposure, override?, likelihood}` |
//! | POST   | `/whatif`           | `{entry_id, effect}` or `{assignments}`   |
//! | GET    | `/report`           | `?format=&view=&today=`                   |
//! | GET    | `/staleness`        | `?today=`                                 |
//!
//! Errors are JSON [`ApiError`] values.

mod error;
mod input;
mod state;

use std::collections::HashMap;
use std::net::SocketAddr;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::header::CONTENT_TYPE;
use axum::http::HeaderValue;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use chrono::{NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use assessits::register::Record;
use assessits::reporting::{render, ReportFormat, ReportView};
use assessits::scenario::{commit_effect, simulate, simulate_portfolio, Scenario};
use assessits::{assess, RemediationEffect, RemediationRecord, RiskRegister};

pub use error::{ApiError, ErrorCode, FieldIssue};
pub use input::assessment_input;
pub use state::AppState;

/// Header carrying the register version a response was computed from.
pub const VERSION_HEADER: &str = "x-register-version";

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/register", get(get_register))
        .route("/register/records", put(put_record))
        .route("/assess", post(post_assess))
        .route("/whatif", post(post_whatif))
        .route("/report", get(get_report))
        .route("/staleness", get(get_staleness))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, read_only = state.is_read_only(), "listening");
    axum::serve(listener, router(state)).await
}

fn document(content_type: &'static str, version: u64, body: String) -> Response {
    let mut response = body.into_response();
    let headers = response.headers_mut();
    headers.insert(CONTENT_TYPE, HeaderValue::from_static(content_type));
    headers.insert(VERSION_HEADER, HeaderValue::from(version));
    response
}

async fn get_register(State(state): State<AppState>) -> Response {
    let register = state.snapshot();
    document("application/json", register.version(), register.to_document())
}

/// A change submitted to `PUT /register/records`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum RecordChange {
    Upsert(Record),
    /// Applies an implemented remediation's effect to an entry.
    CommitRemediation(CommitRemediation),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename = "commit_remediation")]
pub struct CommitRemediation {
    pub entry_id: String,
    pub remediation: RemediationRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordsRequest {
    pub record: RecordChange,
    pub expected_version: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitResponse {
    pub version: u64,
}

impl RecordChange {
    /// Decodes the `record` member of a records request. `kind` selects
    /// the record type; `commit_remediation` selects a remediation commit.
    pub fn from_value(value: serde_json::Value) -> Result<RecordChange, ApiError> {
        let kind = value.get("kind").and_then(|k| k.as_str()).unwrap_or("?").to_string();
        let parsed = if kind == "commit_remediation" {
            serde_json::from_value(value).map(RecordChange::CommitRemediation)
        } else {
            serde_json::from_value(value).map(RecordChange::Upsert)
        };
        parsed.map_err(|e| ApiError::validation(format!("invalid {kind} record: {e}")))
    }

    /// The committed successor of `current`: exactly one version later.
    pub fn apply(self, current: &RiskRegister) -> Result<RiskRegister, ApiError> {
        match self {
            RecordChange::Upsert(record) => Ok(current.upsert_and_recompute(record)?),
            RecordChange::CommitRemediation(c) => Ok(commit_effect(current, &c.entry_id, c.remediation)?),
        }
    }
}

async fn put_record(State(state): State<AppState>, body: Bytes) -> Result<Json<CommitResponse>, ApiError> {
    #[derive(Deserialize)]
    struct Raw {
        record: serde_json::Value,
        expected_version: u64,
    }
    let raw: Raw = input::parse_json(&body)?;
    let change = RecordChange::from_value(raw.record)?;
    let committed = state.commit(raw.expected_version, |current| change.apply(current)).await?;
    Ok(Json(CommitResponse {
        version: committed.version(),
    }))
}

async fn post_assess(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let input = assessment_input(&body)?;
    let result = assess(&input, state.snapshot().policy())?;
    let json = serde_json::to_string(&result).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(([(CONTENT_TYPE, "application/json")], json).into_response())
}

#[derive(Deserialize)]
struct WhatIf {
    entry_id: String,
    #[serde(default)]
    effect: RemediationEffect,
}

async fn post_whatif(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let value: serde_json::Value = input::parse_json(&body)?;
    let register = state.snapshot();
    if value.get("assignments").is_some() {
        let scenario: Scenario =
            serde_json::from_value(value).map_err(|e| ApiError::validation(format!("invalid scenario: {e}")))?;
        let outcome = simulate_portfolio(&register, &scenario.assignments)?;
        return Ok(Json(outcome).into_response());
    }
    let request: WhatIf =
        serde_json::from_value(value).map_err(|e| ApiError::validation(format!("invalid what-if request: {e}")))?;
    let delta = simulate(&register, &request.entry_id, &request.effect)?;
    Ok(Json(delta).into_response())
}

fn today(query: &HashMap<String, String>) -> Result<NaiveDate, ApiError> {
    match query.get("today") {
        None => Ok(Utc::now().date_naive()),
        Some(s) => s.parse().map_err(|_| {
            ApiError::validation(format!("today must be a YYYY-MM-DD date, got {s:?}"))
                .with_detail(vec![FieldIssue::new("today", "expected YYYY-MM-DD")])
        }),
    }
}

async fn get_report(
    State(state): State<AppState>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let format: ReportFormat = query.get("format").map_or(Ok(ReportFormat::Csv), |f| f.parse())?;
    let view: ReportView = query.get("view").map_or(Ok(ReportView::Matrix), |v| v.parse())?;
    let today = today(&query)?;
    let register = state.snapshot();
    let doc = render(&register, format, view, today)?;
    Ok(document(format.content_type(), doc.register_version, doc.body))
}

async fn get_staleness(
    State(state): State<AppState>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let today = today(&query)?;
    let register = state.snapshot();
    let stale = register.flag_stale(today)?;
    Ok(Json(stale).into_response())
}
