//! Report generation for the `homapprox` command.

pub mod input;
pub mod render;

use std::path::PathBuf;
use std::str::FromStr;

use homapprox_core::approx::{approximate, ApproxError, ApproximationResult, AutonomousOutcome, Mode, Options, DEFAULT_MAX_ORDER};
use homapprox_core::series::{series_up_to, ControlSystem, SeriesError};
use homapprox_core::verify::{verify_system, VerificationReport, VerifyError, VerifyOptions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use input::{parse_system, read_system, InputError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Text,
    Latex,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Latex => "tex",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "latex" => Ok(Format::Latex),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected text, latex or json)")),
        }
    }
}

pub fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "both" => Ok(Mode::Both),
        "nonautonomous" => Ok(Mode::Nonautonomous),
        "autonomous" => Ok(Mode::Autonomous),
        _ => Err(format!("unknown mode `{s}` (expected both, nonautonomous or autonomous)")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub input: PathBuf,
    pub max_order: Option<usize>,
    pub mode: Mode,
    pub format: Format,
    pub verify: bool,
    pub out: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

impl JobConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            max_order: None,
            mode: Mode::Both,
            format: Format::Text,
            verify: false,
            out: None,
            cache_dir: None,
        }
    }
}

/// The input as it was read, for the report header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemEcho {
    pub a: Vec<String>,
    pub b: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub system: SystemEcho,
    pub result: ApproximationResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => render::text(self),
            Format::Latex => render::latex(self),
            Format::Json => to_json(self),
        }
    }
}

pub fn to_json(report: &Report) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("reports always serialize");
    out.push('\n');
    out
}

pub fn from_json(text: &str) -> Result<Report, serde_json::Error> {
    serde_json::from_str(text)
}

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    InputError = 2,
    NotAccessible = 3,
    NoAutonomous = 4,
    Internal = 5,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error("verification could not run: {0}")]
    Verify(#[from] VerifyError),
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl RunError {
    pub fn status(&self) -> Status {
        match self {
            RunError::Input(_) => Status::InputError,
            RunError::Approx(ApproxError::NotAccessible { .. }) => Status::NotAccessible,
            // the series of such systems is not defined over the rationals
            RunError::Approx(ApproxError::Series(SeriesError::Eval(_))) => Status::InputError,
            RunError::Approx(ApproxError::OrderLimit { .. }) => Status::InputError,
            RunError::Approx(_) | RunError::Verify(_) | RunError::Internal(_) | RunError::Output { .. } => Status::Internal,
        }
    }
}

/// A finished run: the report, its rendering and the exit status it implies.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub rendered: String,
    pub status: Status,
    /// File the report was written to, with `--out`.
    pub written: Option<PathBuf>,
}

/// The input system and the two approximating systems, each with its series.
fn verification(sys: &ControlSystem, result: &ApproximationResult) -> Result<VerificationReport, RunError> {
    let table = series_up_to(sys, result.series_order).map_err(ApproxError::from)?;
    let top = *result.orders.iter().max().expect("at least one order");
    let mut approximations = Vec::new();
    let mut outputs = Vec::new();
    if let Some(p) = &result.nonautonomous {
        outputs.push(("non-autonomous", p));
    }
    if let Some(AutonomousOutcome::Found(p)) = &result.autonomous {
        outputs.push(("autonomous", p));
    }
    for (name, p) in outputs {
        let output = p.to_control_system().map_err(|e| RunError::Internal(format!("{name} output system: {e}")))?;
        let output_table = series_up_to(&output, top).map_err(ApproxError::from)?;
        approximations.push((name.to_string(), output, output_table));
    }
    Ok(verify_system(sys, &table, &approximations, &VerifyOptions::default())?)
}

pub fn build_report(sys: &ControlSystem, cfg: &JobConfig) -> Result<Report, RunError> {
    let options = Options {
        max_order: cfg.max_order.unwrap_or(DEFAULT_MAX_ORDER),
        mode: cfg.mode,
        cache_dir: cfg.cache_dir.clone(),
    };
    let result = approximate(sys, &options)?;
    let verification = if cfg.verify { Some(verification(sys, &result)?) } else { None };
    Ok(Report {
        system: SystemEcho {
            a: sys.drift().iter().map(ToString::to_string).collect(),
            b: sys.control_field().iter().map(ToString::to_string).collect(),
        },
        result,
        verification,
    })
}

pub fn run(cfg: &JobConfig) -> Result<Outcome, RunError> {
    let sys = read_system(&cfg.input)?;
    log::info!("read a system of dimension {}", sys.dimension());
    let report = build_report(&sys, cfg)?;
    let rendered = report.render(cfg.format);
    let written = match &cfg.out {
        Some(dir) => {
            let path = dir.join(format!("report.{}", cfg.format.extension()));
            let io = |source| RunError::Output { path: path.display().to_string(), source };
            std::fs::create_dir_all(dir).map_err(io)?;
            std::fs::write(&path, &rendered).map_err(io)?;
            Some(path)
        }
        None => None,
    };
    let status = if report.verification.as_ref().is_some_and(|v| !v.passed()) {
        Status::Internal
    } else if cfg.mode == Mode::Autonomous && matches!(report.result.autonomous, Some(AutonomousOutcome::Nonexistent(_))) {
        Status::NoAutonomous
    } else {
        Status::Success
    };
    Ok(Outcome { report, rendered, status, written })
}
