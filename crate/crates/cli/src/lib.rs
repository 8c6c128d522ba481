//! Experiment runner for the damped p-system diffusion-wave study.

pub mod commands;
pub mod config;
pub mod output;
pub mod report;

use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, Violation};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", join_violations(.0))]
    Config(Vec<Violation>),

    #[error("missing upstream artifact: {0}")]
    Dependency(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("numerical failure: {0}")]
    Numerical(#[from] dwave::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Dependency(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn num(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e4) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// One measured quantity against its acceptance bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: format!("<= {}", num(bound)),
            pass: value <= bound,
        }
    }

    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: format!("< {}", num(bound)),
            pass: value < bound,
        }
    }

    pub fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: format!("> {}", num(bound)),
            pass: value > bound,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: format!(">= {}", num(bound)),
            pass: value >= bound,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, center: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: format!("{center} +- {tol}"),
            pass: (value - center).abs() <= tol,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            target: "true".into(),
            pass: ok,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Pending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub subcommand: String,
    pub status: Status,
    pub checks: Vec<Check>,
}

impl CriterionResult {
    pub fn new(id: u8, subcommand: &str, checks: Vec<Check>) -> Self {
        let status = if checks.iter().all(|c| c.pass) { Status::Pass } else { Status::Fail };
        Self {
            id,
            title: report::title(id).into(),
            subcommand: subcommand.into(),
            status,
            checks,
        }
    }

    pub fn pending(id: u8, subcommand: &str) -> Self {
        Self {
            id,
            title: report::title(id).into(),
            subcommand: subcommand.into(),
            status: Status::Pending,
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Process exit code for a finished subcommand.
pub fn outcome_code(criteria: &[CriterionResult]) -> i32 {
    if criteria.iter().any(|c| c.status == Status::Fail) {
        1
    } else {
        0
    }
}
