//! Run reports and exit codes.

use std::fmt;
use std::time::Instant;

use orbitlet_core::error::Error;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA: &str = "orbitlet-report/1";

/// Failure classes, each with its own exit code.
#[derive(Clone, Debug, PartialEq)]
pub enum CliError {
    /// Bad input: unknown group, unreadable file, malformed spec. Exit 2.
    Config(String),
    /// A computation could not be carried out. Exit 3.
    Numerical(String),
    /// A requested verdict did not hold. Exit 1.
    Verdict { label: String, message: String },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Verdict { label, message } => write!(f, "{label}: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verdict { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn kind(&self) -> ErrorKind {
        match self {
            CliError::Verdict { .. } => ErrorKind::Verdict,
            CliError::Config(_) => ErrorKind::Config,
            CliError::Numerical(_) => ErrorKind::Numerical,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Verdict { message: m, .. } => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        let verdict = |label: &str| CliError::Verdict {
            label: label.into(),
            message: m.clone(),
        };
        match e {
            Error::NotStronglySquareIntegrable => verdict("NOT_STRONGLY_SQUARE_INTEGRABLE"),
            Error::NotRegular(_) => verdict("NOT_REGULAR"),
            Error::NotRegularRegion => verdict("NOT_REGULAR_REGION"),
            Error::NotAdmissibleInput(_) => verdict("NOT_ADMISSIBLE_INPUT"),
            Error::BadContraction(_) => verdict("BAD_CONTRACTION"),
            Error::Unimodular => verdict("UNIMODULAR"),
            Error::NotUnimodular => verdict("NOT_UNIMODULAR"),
            Error::NoAtlas(_)
            | Error::InvalidChart(_)
            | Error::InvalidRegion(_)
            | Error::Expression(_)
            | Error::DimensionMismatch { .. }
            | Error::ShapeMismatch(_)
            | Error::GridMismatch(_)
            | Error::EmptyProbeGrid
            | Error::TruncationMissing(_) => CliError::Config(m),
            Error::OutOfDomain(_) | Error::NonFinite(_) | Error::ProfileUnevaluable(_) => CliError::Numerical(m),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Config,
    Numerical,
    Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub name: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<ErrorKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// Largest quadrature error estimate reported by the step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_error: Option<f64>,
    #[serde(default)]
    pub results: Value,
    pub seconds: f64,
}

/// Outcome of a step body: pass/fail, a verdict label, numbers.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub pass: bool,
    pub verdict: Option<String>,
    pub message: Option<String>,
    pub quadrature_error: Option<f64>,
    pub results: Value,
}

impl Outcome {
    pub fn pass(results: Value) -> Self {
        Self {
            pass: true,
            results,
            ..Self::default()
        }
    }

    pub fn judged(pass: bool, verdict: impl Into<String>, results: Value) -> Self {
        Self {
            pass,
            verdict: Some(verdict.into()),
            results,
            ..Self::default()
        }
    }

    pub fn with_error(mut self, e: f64) -> Self {
        self.quadrature_error = Some(e);
        self
    }

    pub fn with_message(mut self, m: impl Into<String>) -> Self {
        self.message = Some(m.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub command: String,
    pub steps: Vec<Step>,
    pub exit_code: i32,
}

impl RunReport {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            schema: SCHEMA.into(),
            command: command.into(),
            steps: vec![],
            exit_code: 0,
        }
    }

    /// Run `body` as a named step and record its outcome. Returns the
    /// outcome's results when the step passed.
    pub fn run(&mut self, name: &str, body: impl FnOnce() -> Result<Outcome, CliError>) -> Option<Value> {
        self.step(name, || {
            let o = body()?;
            let v = o.results.clone();
            Ok((o, v))
        })
    }

    /// Like [`RunReport::run`], with typed data handed to later steps when
    /// the step passed.
    pub fn step<T>(&mut self, name: &str, body: impl FnOnce() -> Result<(Outcome, T), CliError>) -> Option<T> {
        let t = Instant::now();
        let r = body();
        let seconds = t.elapsed().as_secs_f64();
        let (step, data) = match r {
            Ok((o, data)) => (
                Step {
                    name: name.into(),
                    status: if o.pass { Status::Pass } else { Status::Fail },
                    verdict: o.verdict,
                    error_kind: None,
                    message: o.message,
                    quadrature_error: o.quadrature_error,
                    results: o.results,
                    seconds,
                },
                Some(data),
            ),
            Err(e) => (
                Step {
                    name: name.into(),
                    status: Status::Error,
                    verdict: match &e {
                        CliError::Verdict { label, .. } => Some(label.clone()),
                        _ => None,
                    },
                    error_kind: Some(e.kind()),
                    message: Some(e.message().to_string()),
                    quadrature_error: None,
                    results: Value::Null,
                    seconds,
                },
                None,
            ),
        };
        let ok = step.status == Status::Pass;
        self.steps.push(step);
        self.exit_code = exit_code(self);
        data.filter(|_| ok)
    }

    pub fn skip(&mut self, name: &str, reason: impl Into<String>) {
        self.steps.push(Step {
            name: name.into(),
            status: Status::Skipped,
            verdict: None,
            error_kind: None,
            message: Some(reason.into()),
            quadrature_error: None,
            results: Value::Null,
            seconds: 0.0,
        });
    }

    pub fn passed(&self) -> bool {
        exit_code(self) == 0
    }
}

/// Exit code from report content alone: configuration errors dominate,
/// then numerical failures, then failed verdicts.
pub fn exit_code(report: &RunReport) -> i32 {
    let mut code = 0;
    for s in &report.steps {
        let c = match (s.status, s.error_kind) {
            (Status::Error, Some(ErrorKind::Config)) => 2,
            (Status::Error, Some(ErrorKind::Numerical)) | (Status::Error, None) => 3,
            (Status::Error, Some(ErrorKind::Verdict)) | (Status::Fail, _) => 1,
            (Status::Pass | Status::Skipped, _) => 0,
        };
        code = match (code, c) {
            (2, _) | (_, 2) => 2,
            (3, _) | (_, 3) => 3,
            (a, b) => a.max(b),
        };
    }
    code
}
