//! `assessits`: command-line workflow over a register document.
//!
//! Exit codes: 0 success, 1 validation or integrity failure, 2 usage error,
//! 3 one or more entries are overdue for review.

mod commands;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "assessits", version, about = "Risk assessment register, scoring and reports")]
pub struct Cli {
    /// Register document to operate on.
    #[arg(long, global = true, env = "ASSESSITS_REGISTER", value_name = "PATH")]
    pub register: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an empty register.
    Init {
        /// Tolerance thresholds as LOW,MEDIUM,HIGH,CRITICAL upper bounds.
        #[arg(long, default_value = "45,99,199,250")]
        policy: String,
        /// Days between mandatory reviews.
        #[arg(long, default_value_t = 183)]
        review_period: u32,
    },
    /// Check integrity and score consistency.
    Validate,
    /// Score one finding without touching any register.
    Assess(AssessArgs),
    /// Insert or replace a record from a JSON document, then rescore.
    Upsert {
        /// Record file, or `-` for stdin.
        #[arg(long, value_name = "FILE")]
        record: PathBuf,
        /// Refuse unless the register is at this version.
        #[arg(long)]
        expected_version: Option<u64>,
    },
    /// Rescore every entry from its records.
    Recompute,
    /// Render the assessment matrix or the prioritized queue.
    Report {
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long, default_value = "matrix")]
        view: String,
        /// Reference date for the prioritized view's review column.
        #[arg(long)]
        today: Option<NaiveDate>,
        /// Write here instead of stdout.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// What-if remediation effects.
    Simulate(SimulateArgs),
    /// List entries overdue for review. Exits 3 if there are any.
    ReviewStatus {
        #[arg(long)]
        today: Option<NaiveDate>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Replace the register's contents with an assessment-matrix CSV.
    Import {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Assessment date recorded on imported entries.
        #[arg(long)]
        assessed_on: Option<NaiveDate>,
    },
    /// Write the assessment matrix as CSV.
    Export {
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "ASSESSITS_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, env = "ASSESSITS_READ_ONLY")]
        read_only: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

/// Ratings accept a number or the scale's label, e.g. `--threat Major`.
#[derive(Debug, Args)]
pub struct AssessArgs {
    #[arg(long)]
    pub av: String,
    #[arg(long)]
    pub threat: String,
    /// Confidentiality, integrity and availability impact, e.g. `4,4,4`.
    #[arg(long)]
    pub cia: String,
    #[arg(long)]
    pub exposure: String,
    /// Direct vulnerability rating in place of the derived one.
    #[arg(long = "override")]
    pub vulnerability_override: Option<String>,
    #[arg(long)]
    pub likelihood: String,
    #[arg(long, default_value = "45,99,199,250")]
    pub policy: String,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario document listing `{entry_id, effect}` assignments.
    #[arg(long, value_name = "FILE", conflicts_with = "entry")]
    pub scenario: Option<PathBuf>,
    #[arg(long, required_unless_present = "scenario")]
    pub entry: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub delta_c: i64,
    #[arg(long, default_value_t = 0)]
    pub delta_i: i64,
    #[arg(long, default_value_t = 0)]
    pub delta_a: i64,
    #[arg(long, default_value_t = 0)]
    pub delta_exposure: i64,
    /// Vulnerability rating the remediation sets directly.
    #[arg(long)]
    pub sets_override: Option<String>,
    /// Order scenario results by RI reduction.
    #[arg(long, requires = "scenario")]
    pub rank: bool,
    /// Commit the effect as an implemented remediation.
    #[arg(long, requires = "entry", requires = "remediation_id")]
    pub apply: bool,
    #[arg(long)]
    pub remediation_id: Option<String>,
    #[arg(long, default_value = "")]
    pub description: String,
    #[arg(long)]
    pub applied_date: Option<NaiveDate>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
