//! Collation of per-subcommand results into one table.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::output::{read_json, write_file, write_json};
use crate::{CliError, CriterionResult, Status};

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "diffusion-wave profile",
        2 => "correction profile",
        3 => "residual decay rates",
        4 => "L2 decay of the perturbation",
        5 => "sup-norm decay and rate hierarchy",
        6 => "Duhamel reconstruction",
        7 => "kernel bounds",
        8 => "solver integrity",
        9 => "determinism",
        _ => "unknown",
    }
}

/// Result file and producing subcommand for each criterion.
pub const SOURCES: [(u8, &str, &str); 9] = [
    (1, "profile.json", "profile"),
    (2, "correct.json", "correct"),
    (3, "correct.json", "correct"),
    (4, "decay.json", "analyze"),
    (5, "decay.json", "analyze"),
    (6, "duhamel.json", "duhamel"),
    (7, "kernel.json", "kernel-check"),
    (8, "integrity.json", "simulate"),
    (9, "determinism.json", "all"),
];

#[derive(Debug, Deserialize)]
struct Results {
    criteria: Vec<CriterionResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub criteria: Vec<CriterionResult>,
    pub passed: usize,
    pub failed: usize,
    pub pending: usize,
}

impl Report {
    pub fn get(&self, id: u8) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| c.id == id)
    }
}

/// Read whatever results exist under `out`; absent ones are pending.
pub fn collate(out: &Path) -> Result<Report, CliError> {
    let mut criteria = Vec::with_capacity(SOURCES.len());
    for (id, file, cmd) in SOURCES {
        let path = out.join(file);
        let found = if path.exists() {
            let r: Results = read_json(&path)?;
            r.criteria.into_iter().find(|c| c.id == id)
        } else {
            None
        };
        criteria.push(found.unwrap_or_else(|| CriterionResult::pending(id, cmd)));
    }
    let count = |s: Status| criteria.iter().filter(|c| c.status == s).count();
    Ok(Report {
        passed: count(Status::Pass),
        failed: count(Status::Fail),
        pending: count(Status::Pending),
        criteria,
    })
}

pub fn render(r: &Report) -> String {
    let mut s = String::new();
    for c in &r.criteria {
        let tag = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Pending => "----",
        };
        let _ = writeln!(s, "[{tag}] {} {} ({})", c.id, c.title, c.subcommand);
        for k in &c.checks {
            let mark = if k.pass { ' ' } else { '!' };
            let _ = writeln!(s, "     {mark} {:<40} {:>24.16e}  {}", k.name, k.value, k.target);
        }
    }
    let _ = writeln!(s, "{} passed, {} failed, {} pending", r.passed, r.failed, r.pending);
    s
}

pub fn write_report(out: &Path) -> Result<Report, CliError> {
    let r = collate(out)?;
    write_json(&out.join("report.json"), &r)?;
    write_file(&out.join("report.txt"), render(&r).as_bytes())?;
    Ok(r)
}
