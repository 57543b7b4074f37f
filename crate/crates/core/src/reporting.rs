//! Assessment matrix and prioritized-risk documents, plus summary figures.
//!
//! Rendering never rescores: every number printed comes straight from the
//! register, and a register with pending recomputes is refused. Output is a
//! pure function of the register, so the same version renders to the same
//! bytes in every format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::register::{matrix_rows, MatrixRow, RegisterError, RiskRegister, MATRIX_COLUMNS};
use crate::scenario::empty_histogram;
use crate::scoring::CriticalityLevel;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("register has entries that need recompute: {}", .0.join(", "))]
    InconsistentRegister(Vec<String>),
    #[error("unknown report format {0:?} (expected csv, markdown, html or json)")]
    UnknownFormat(String),
    #[error("unknown report view {0:?} (expected matrix or prioritized)")]
    UnknownView(String),
    #[error("top_n must be positive")]
    InvalidTopN,
    #[error(transparent)]
    Register(RegisterError),
}

impl From<RegisterError> for ReportError {
    fn from(e: RegisterError) -> Self {
        match e {
            RegisterError::NeedsRecompute(ids) => ReportError::InconsistentRegister(ids),
            other => ReportError::Register(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Markdown,
    Html,
    /// JSON for programmatic consumers.
    Structured,
}

impl ReportFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            ReportFormat::Csv => "text/csv; charset=utf-8",
            ReportFormat::Markdown => "text/markdown; charset=utf-8",
            ReportFormat::Html => "text/html; charset=utf-8",
            ReportFormat::Structured => "application/json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "html" => Ok(ReportFormat::Html),
            "json" | "structured" => Ok(ReportFormat::Structured),
            _ => Err(ReportError::UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportView {
    Matrix,
    Prioritized,
}

impl FromStr for ReportView {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "matrix" => Ok(ReportView::Matrix),
            "prioritized" | "queue" => Ok(ReportView::Prioritized),
            _ => Err(ReportError::UnknownView(s.to_string())),
        }
    }
}

/// A rendered report. `body` is the document itself; `generated_at` is
/// metadata for the caller and is not embedded in the body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixDocument {
    pub format: ReportFormat,
    pub view: ReportView,
    pub columns: Vec<&'static str>,
    pub row_count: usize,
    pub register_version: u64,
    pub generated_at: DateTime<Utc>,
    pub body: String,
}

fn require_consistent(register: &RiskRegister) -> Result<(), ReportError> {
    let pending = register.entries_needing_recompute();
    if pending.is_empty() {
        Ok(())
    } else {
        Err(ReportError::InconsistentRegister(pending))
    }
}

fn with_label(value: impl std::fmt::Display, label: &str) -> String {
    format!("{value} — {label}")
}

/// Renders either view. `today` only affects the prioritized view.
pub fn render(
    register: &RiskRegister,
    format: ReportFormat,
    view: ReportView,
    today: NaiveDate,
) -> Result<MatrixDocument, ReportError> {
    match view {
        ReportView::Matrix => render_matrix(register, format),
        ReportView::Prioritized => render_prioritized(register, format, today),
    }
}

pub fn render_matrix(register: &RiskRegister, format: ReportFormat) -> Result<MatrixDocument, ReportError> {
    require_consistent(register)?;
    let rows = matrix_rows(register)?;
    let body = match format {
        ReportFormat::Csv => crate::register::export_csv(register)?,
        ReportFormat::Markdown => markdown_table(&MATRIX_COLUMNS, rows.iter().map(labelled_cells)),
        ReportFormat::Html => html_document(
            "Risk Assessment Matrix",
            "risk-matrix",
            register.version(),
            &MATRIX_COLUMNS,
            rows.iter().map(|r| (r.entry_id.as_str(), r.criticality, labelled_cells(r))),
        ),
        ReportFormat::Structured => structured(ReportView::Matrix, register.version(), &MATRIX_COLUMNS, &rows),
    };
    Ok(MatrixDocument {
        format,
        view: ReportView::Matrix,
        columns: MATRIX_COLUMNS.to_vec(),
        row_count: rows.len(),
        register_version: register.version(),
        generated_at: Utc::now(),
        body,
    })
}

/// Matrix cells with numeric ratings paired with their scale labels.
fn labelled_cells(r: &MatrixRow) -> Vec<String> {
    vec![
        r.si.to_string(),
        r.asset.clone(),
        r.owner.clone(),
        r.asset_value.to_string(),
        r.threat.clone(),
        with_label(r.threat_level, r.threat_level.label()),
        r.vulnerability.clone(),
        r.remediation.clone(),
        r.impact_c.to_string(),
        r.impact_i.to_string(),
        r.impact_a.to_string(),
        with_label(r.vuln_level, r.vuln_level.label()),
        r.threat_value.to_string(),
        with_label(r.likelihood, r.likelihood.label()),
        r.risk_impact_rating.to_string(),
        with_label(r.criticality.rank(), r.criticality.label()),
    ]
}

pub const PRIORITIZED_COLUMNS: [&str; 11] = [
    "Rank",
    "EntryId",
    "AssetId",
    "Asset/Service",
    "Threat",
    "Vulnerability",
    "RiskImpactRating",
    "CriticalityLevel",
    "AssessedDate",
    "DaysSinceAssessment",
    "Stale",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrioritizedRow {
    pub rank: usize,
    pub entry_id: String,
    pub asset_id: String,
    pub asset: String,
    pub threat: String,
    pub vulnerability: String,
    pub risk_impact_rating: u16,
    pub criticality: CriticalityLevel,
    pub assessed_date: NaiveDate,
    pub days_since_assessment: i64,
    pub stale: bool,
}

impl PrioritizedRow {
    fn cells(&self, labelled: bool) -> Vec<String> {
        let criticality = if labelled {
            with_label(self.criticality.rank(), self.criticality.label())
        } else {
            self.criticality.label().to_string()
        };
        vec![
            self.rank.to_string(),
            self.entry_id.clone(),
            self.asset_id.clone(),
            self.asset.clone(),
            self.threat.clone(),
            self.vulnerability.clone(),
            self.risk_impact_rating.to_string(),
            criticality,
            self.assessed_date.to_string(),
            self.days_since_assessment.to_string(),
            if self.stale { "yes" } else { "no" }.to_string(),
        ]
    }
}

/// Entries ordered by criticality, then RI, then asset id (entry id breaks
/// any remaining tie), each annotated with its review staleness.
pub fn prioritized_rows(register: &RiskRegister, today: NaiveDate) -> Result<Vec<PrioritizedRow>, ReportError> {
    require_consistent(register)?;
    let stale: BTreeSet<String> = register
        .flag_stale(today)?
        .into_iter()
        .map(|s| s.entry_id)
        .collect();
    let mut rows = matrix_rows(register)?;
    rows.sort_by(|a, b| {
        b.criticality
            .cmp(&a.criticality)
            .then_with(|| b.risk_impact_rating.cmp(&a.risk_impact_rating))
            .then_with(|| a.asset_id.cmp(&b.asset_id))
            .then_with(|| a.entry_id.cmp(&b.entry_id))
    });
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| PrioritizedRow {
            rank: i + 1,
            stale: stale.contains(&r.entry_id),
            days_since_assessment: (today - r.assessed_date).num_days(),
            entry_id: r.entry_id,
            asset_id: r.asset_id,
            asset: r.asset,
            threat: r.threat,
            vulnerability: r.vulnerability,
            risk_impact_rating: r.risk_impact_rating,
            criticality: r.criticality,
            assessed_date: r.assessed_date,
        })
        .collect())
}

pub fn render_prioritized(
    register: &RiskRegister,
    format: ReportFormat,
    today: NaiveDate,
) -> Result<MatrixDocument, ReportError> {
    let rows = prioritized_rows(register, today)?;
    let body = match format {
        ReportFormat::Csv => {
            let mut writer = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            let io = |e: csv::Error| ReportError::Register(RegisterError::Io(std::io::Error::other(e)));
            writer.write_record(PRIORITIZED_COLUMNS).map_err(io)?;
            for r in &rows {
                writer.write_record(r.cells(false)).map_err(io)?;
            }
            let bytes = writer
                .into_inner()
                .map_err(|e| ReportError::Register(RegisterError::Io(e.into_error())))?;
            String::from_utf8(bytes).expect("UTF-8 input")
        }
        ReportFormat::Markdown => markdown_table(&PRIORITIZED_COLUMNS, rows.iter().map(|r| r.cells(true))),
        ReportFormat::Html => html_document(
            "Prioritized Risks",
            "risk-priorities",
            register.version(),
            &PRIORITIZED_COLUMNS,
            rows.iter().map(|r| (r.entry_id.as_str(), r.criticality, r.cells(true))),
        ),
        ReportFormat::Structured => {
            structured(ReportView::Prioritized, register.version(), &PRIORITIZED_COLUMNS, &rows)
        }
    };
    Ok(MatrixDocument {
        format,
        view: ReportView::Prioritized,
        columns: PRIORITIZED_COLUMNS.to_vec(),
        row_count: rows.len(),
        register_version: register.version(),
        generated_at: Utc::now(),
        body,
    })
}

fn markdown_table(columns: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let cell = |s: &str| s.replace('|', "\\|").replace(['\r', '\n'], " ");
    let mut out = String::new();
    let _ = writeln!(out, "| {} |", columns.iter().map(|c| cell(c)).collect::<Vec<_>>().join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(columns.len()));
    for row in rows {
        let _ = writeln!(out, "| {} |", row.iter().map(|c| cell(c)).collect::<Vec<_>>().join(" | "));
    }
    out
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Class name carried by rows of each criticality level.
pub fn criticality_class(level: CriticalityLevel) -> &'static str {
    match level {
        CriticalityLevel::Low => "crit-low",
        CriticalityLevel::Medium => "crit-medium",
        CriticalityLevel::High => "crit-high",
        CriticalityLevel::Critical => "crit-critical",
    }
}

fn html_document<'a>(
    title: &str,
    table_id: &str,
    version: u64,
    columns: &[&str],
    rows: impl Iterator<Item = (&'a str, CriticalityLevel, Vec<String>)>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<!DOCTYPE html>");
    let _ = writeln!(out, "<html lang=\"en\">");
    let _ = writeln!(out, "<head><meta charset=\"utf-8\"><title>{}</title></head>", escape_html(title));
    let _ = writeln!(out, "<body>");
    let _ = writeln!(out, "<table id=\"{table_id}\" data-register-version=\"{version}\">");
    let _ = writeln!(out, "<thead><tr>");
    for c in columns {
        let _ = writeln!(out, "<th>{}</th>", escape_html(c));
    }
    let _ = writeln!(out, "</tr></thead>");
    let _ = writeln!(out, "<tbody>");
    for (entry_id, level, cells) in rows {
        let id = escape_html(entry_id);
        let _ = writeln!(
            out,
            "<tr id=\"entry-{id}\" class=\"{}\" data-entry-id=\"{id}\">",
            criticality_class(level)
        );
        for cell in cells {
            let _ = writeln!(out, "<td>{}</td>", escape_html(&cell));
        }
        let _ = writeln!(out, "</tr>");
    }
    let _ = writeln!(out, "</tbody>");
    let _ = writeln!(out, "</table>");
    let _ = writeln!(out, "</body>");
    let _ = writeln!(out, "</html>");
    out
}

fn structured<R: Serialize>(view: ReportView, version: u64, columns: &[&str], rows: &[R]) -> String {
    #[derive(Serialize)]
    struct Doc<'a, R> {
        view: ReportView,
        register_version: u64,
        columns: &'a [&'a str],
        rows: &'a [R],
    }
    let mut out = serde_json::to_string_pretty(&Doc {
        view,
        register_version: version,
        columns,
        rows,
    })
    .expect("report serializes");
    out.push('\n');
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopRisk {
    pub entry_id: String,
    pub ri: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub counts_by_criticality: BTreeMap<CriticalityLevel, usize>,
    pub top_risks: Vec<TopRisk>,
    pub stale_count: usize,
    /// Mean RI rounded to two decimals; 0 for an empty register.
    pub mean_ri: f64,
}

pub fn summarize(register: &RiskRegister, top_n: usize, today: NaiveDate) -> Result<SummaryStats, ReportError> {
    if top_n == 0 {
        return Err(ReportError::InvalidTopN);
    }
    require_consistent(register)?;
    let stale_count = register.flag_stale(today)?.len();

    let mut counts = empty_histogram();
    let mut scored: Vec<TopRisk> = Vec::with_capacity(register.entries().len());
    let mut total: u64 = 0;
    for entry in register.entries() {
        let computed = entry.computed.expect("consistency checked");
        *counts.entry(computed.criticality).or_default() += 1;
        total += u64::from(computed.risk_impact.value());
        scored.push(TopRisk {
            entry_id: entry.id.clone(),
            ri: computed.risk_impact.value(),
        });
    }
    let mean_ri = if scored.is_empty() {
        0.0
    } else {
        (total as f64 / scored.len() as f64 * 100.0).round() / 100.0
    };
    scored.sort_by(|a, b| b.ri.cmp(&a.ri).then_with(|| a.entry_id.cmp(&b.entry_id)));
    scored.truncate(top_n);
    Ok(SummaryStats {
        counts_by_criticality: counts,
        top_risks: scored,
        stale_count,
        mean_ri,
    })
}
