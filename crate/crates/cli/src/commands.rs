use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use chrono::{NaiveDate, Utc};

use assessits::register::{
    commit_register, export_csv, import_csv, load_register, write_atomic, RegisterError,
};
use assessits::reporting::{render, ReportFormat, ReportView};
use assessits::scenario::{commit_effect, rank_remediations, simulate, simulate_portfolio, Scenario};
use assessits::scoring::{
    assess, AssessmentInput, AssetValue, CiaImpact, ExposureLevel, Likelihood, RiskTolerancePolicy, ThreatLevel,
    VulnerabilityLevel,
};
use assessits::{RemediationEffect, RemediationRecord, RemediationStatus, RiskRegister};
use assessits_service::{ApiError, AppState, RecordChange};

use crate::{AssessArgs, Cli, Command, OutputFormat, SimulateArgs};

const EXIT_STALE: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<RegisterError> for Failure {
    fn from(e: RegisterError) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        let mut message = e.message;
        for d in &e.detail {
            message.push_str(&format!("\n  {}: {}", d.field, d.reason));
        }
        Failure::invalid(message)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::invalid(e.to_string())
    }
}

type Outcome = Result<ExitCode, Failure>;

/// Parses a flag value, naming the flag on failure.
fn flag<T>(name: &str, value: &str) -> Result<T, Failure>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| Failure::invalid(format!("--{name}: {e}")))
}

fn today_or_now(today: Option<NaiveDate>) -> NaiveDate {
    today.unwrap_or_else(|| Utc::now().date_naive())
}

fn emit(output: Option<&Path>, body: &str) -> Result<(), Failure> {
    match output {
        Some(path) => write_atomic(path, body.as_bytes())?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn run(cli: Cli) -> Outcome {
    let register = cli.register;
    let path = || register.clone().ok_or_else(|| Failure::usage("--register is required (or set ASSESSITS_REGISTER)"));
    match cli.command {
        Command::Assess(args) => assess_cmd(args),
        Command::Init { policy, review_period } => init(&path()?, &policy, review_period),
        Command::Validate => validate(&path()?),
        Command::Upsert {
            record,
            expected_version,
        } => upsert(&path()?, &record, expected_version),
        Command::Recompute => recompute(&path()?),
        Command::Report {
            format,
            view,
            today,
            output,
        } => report(&path()?, &format, &view, today_or_now(today), output.as_deref()),
        Command::Simulate(args) => simulate_cmd(&path()?, args),
        Command::ReviewStatus { today, format } => review_status(&path()?, today_or_now(today), format),
        Command::Import { input, assessed_on } => import(&path()?, &input, today_or_now(assessed_on)),
        Command::Export { output } => export(&path()?, output.as_deref()),
        Command::Serve { listen, read_only } => serve(&path()?, listen, read_only),
    }
}

fn assess_cmd(args: AssessArgs) -> Outcome {
    let input = AssessmentInput {
        asset_value: flag::<AssetValue>("av", &args.av)?,
        threat_level: flag::<ThreatLevel>("threat", &args.threat)?,
        cia: flag::<CiaImpact>("cia", &args.cia)?,
        exposure: flag::<ExposureLevel>("exposure", &args.exposure)?,
        vulnerability_override: args
            .vulnerability_override
            .as_deref()
            .map(|v| flag::<VulnerabilityLevel>("override", v))
            .transpose()?,
        likelihood: flag::<Likelihood>("likelihood", &args.likelihood)?,
    };
    let policy: RiskTolerancePolicy = flag("policy", &args.policy)?;
    let result = assess(&input, &policy).map_err(|e| Failure::invalid(e.to_string()))?;
    let out = match args.format {
        OutputFormat::Json => serde_json::to_string(&result).expect("serializable"),
        OutputFormat::Text => format!(
            "vr={} tv={} ri={} criticality={}\n",
            result.vulnerability.value(),
            result.threat_value.value(),
            result.risk_impact.value(),
            result.criticality.label()
        ),
    };
    emit(None, &out)?;
    Ok(ExitCode::SUCCESS)
}

fn init(path: &Path, policy: &str, review_period: u32) -> Outcome {
    if path.exists() {
        return Err(Failure::invalid(format!(
            "refusing to overwrite existing register {}",
            path.display()
        )));
    }
    let policy: RiskTolerancePolicy = flag("policy", policy)?;
    if review_period == 0 {
        return Err(Failure::invalid("--review-period: must be at least 1 day"));
    }
    let register = RiskRegister::new(policy, review_period);
    commit_register(&register, path, None)?;
    eprintln!("initialized {} at version {}", path.display(), register.version());
    Ok(ExitCode::SUCCESS)
}

fn validate(path: &Path) -> Outcome {
    let register = load_register(path)?;
    register.check_integrity()?;
    let pending = register.entries_needing_recompute();
    if !pending.is_empty() {
        return Err(RegisterError::NeedsRecompute(pending).into());
    }
    println!(
        "ok: version {}, {} entries, {} assets, {} threats, {} vulnerabilities, {} remediations",
        register.version(),
        register.entries().len(),
        register.assets().len(),
        register.threats().len(),
        register.vulnerabilities().len(),
        register.remediations().len()
    );
    Ok(ExitCode::SUCCESS)
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
    }
}

fn commit(next: &RiskRegister, path: &Path, base: &RiskRegister) -> Result<(), Failure> {
    commit_register(next, path, Some(base.version()))?;
    eprintln!("committed version {}", next.version());
    Ok(())
}

fn upsert(path: &Path, record: &Path, expected_version: Option<u64>) -> Outcome {
    let current = load_register(path)?;
    if let Some(expected) = expected_version {
        if expected != current.version() {
            return Err(RegisterError::VersionConflict {
                expected,
                actual: current.version(),
            }
            .into());
        }
    }
    let text = read_input(record)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("--record: {e}")))?;
    let next = RecordChange::from_value(value)?.apply(&current)?;
    commit(&next, path, &current)?;
    Ok(ExitCode::SUCCESS)
}

fn recompute(path: &Path) -> Outcome {
    let current = load_register(path)?;
    let next = current.recompute_all()?;
    if next.version() == current.version() {
        eprintln!("already consistent at version {}", current.version());
    } else {
        commit(&next, path, &current)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn report(path: &Path, format: &str, view: &str, today: NaiveDate, output: Option<&Path>) -> Outcome {
    let format: ReportFormat = flag("format", format)?;
    let view: ReportView = flag("view", view)?;
    let register = load_register(path)?;
    let doc = render(&register, format, view, today).map_err(|e| Failure::invalid(e.to_string()))?;
    emit(output, &doc.body)?;
    Ok(ExitCode::SUCCESS)
}

fn effect_of(args: &SimulateArgs) -> Result<RemediationEffect, Failure> {
    let sets_override = args
        .sets_override
        .as_deref()
        .map(|v| flag::<VulnerabilityLevel>("sets-override", v))
        .transpose()?;
    RemediationEffect::new(args.delta_c, args.delta_i, args.delta_a, args.delta_exposure, sets_override)
        .map_err(|e| Failure::invalid(e.to_string()))
}

fn simulate_cmd(path: &Path, args: SimulateArgs) -> Outcome {
    let register = load_register(path)?;
    let scenario_err = |e: assessits::ScenarioError| Failure::from(ApiError::from(e));

    if let Some(file) = &args.scenario {
        let scenario = Scenario::from_document(&read_input(file)?)?;
        let out = if args.rank {
            json(&rank_remediations(&register, &scenario.assignments).map_err(scenario_err)?)
        } else {
            json(&simulate_portfolio(&register, &scenario.assignments).map_err(scenario_err)?)
        };
        emit(None, &out)?;
        return Ok(ExitCode::SUCCESS);
    }

    let entry_id = args.entry.as_deref().expect("clap requires --entry without --scenario");
    let effect = effect_of(&args)?;
    let delta = simulate(&register, entry_id, &effect).map_err(scenario_err)?;
    emit(None, &json(&delta))?;

    if args.apply {
        let remediation = RemediationRecord {
            id: args.remediation_id.clone().expect("clap requires --remediation-id with --apply"),
            description: args.description.clone(),
            status: RemediationStatus::Implemented,
            effect,
            applied_date: Some(today_or_now(args.applied_date)),
        };
        let next = commit_effect(&register, entry_id, remediation).map_err(scenario_err)?;
        commit(&next, path, &register)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn review_status(path: &Path, today: NaiveDate, format: OutputFormat) -> Outcome {
    let register = load_register(path)?;
    let stale = register.flag_stale(today)?;
    let out = match format {
        OutputFormat::Json => json(&stale),
        OutputFormat::Text => {
            let width = stale.iter().map(|s| s.entry_id.len()).max().unwrap_or(0).max("entry".len());
            let mut out = format!("{:<width$}  days_since_assessment\n", "entry");
            for s in &stale {
                out.push_str(&format!("{:<width$}  {}\n", s.entry_id, s.days_since_assessment));
            }
            out
        }
    };
    emit(None, &out)?;
    if stale.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "{} of {} entries overdue (review period {} days)",
            stale.len(),
            register.entries().len(),
            register.review_period_days()
        );
        Ok(ExitCode::from(EXIT_STALE))
    }
}

fn import(path: &Path, input: &Path, assessed_on: NaiveDate) -> Outcome {
    let file = fs::File::open(input).map_err(|e| Failure::invalid(format!("--input {}: {e}", input.display())))?;
    let existing = match load_register(path) {
        Ok(r) => Some(r),
        Err(RegisterError::NotFound(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let policy = existing.as_ref().map(|r| *r.policy()).unwrap_or_default();
    let imported = import_csv(io::BufReader::new(file), policy, assessed_on)?;
    let (next, base) = match &existing {
        Some(current) => {
            let review = current.review_period_days();
            let next = current.replaced_by(imported.with_review_period(review));
            (next, Some(current.version()))
        }
        None => (imported, None),
    };
    commit_register(&next, path, base)?;
    eprintln!(
        "imported {} entries; committed version {}",
        next.entries().len(),
        next.version()
    );
    Ok(ExitCode::SUCCESS)
}

fn export(path: &Path, output: Option<&Path>) -> Outcome {
    let register = load_register(path)?;
    emit(output, &export_csv(&register)?)?;
    Ok(ExitCode::SUCCESS)
}

fn serve(path: &PathBuf, listen: std::net::SocketAddr, read_only: bool) -> Outcome {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(io::stderr)
        .init();
    let state = AppState::open(path, read_only)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(assessits_service::serve(listen, state))?;
    Ok(ExitCode::SUCCESS)
}
