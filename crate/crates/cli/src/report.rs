use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;

/// One acceptance check. `value` is compared against `tolerance` (or the
/// interval `[lower, tolerance]`).
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            lower: None,
            tolerance,
            pass: value <= tolerance,
            detail: None,
        }
    }

    pub fn within(name: &str, value: f64, lower: f64, upper: f64) -> Self {
        Check {
            name: name.into(),
            value,
            lower: Some(lower),
            tolerance: upper,
            pass: (lower..=upper).contains(&value),
            detail: None,
        }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            lower: Some(bound),
            tolerance: f64::INFINITY,
            pass: value >= bound,
            detail: None,
        }
    }

    /// A yes/no check, recorded as 1 (holds) or 0.
    pub fn holds(name: &str, ok: bool) -> Self {
        Check {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            lower: Some(1.0),
            tolerance: 1.0,
            pass: ok,
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
    pub summary: Value,
    pub pass: bool,
}

impl Report {
    pub fn new(command: &str, config: &ExperimentConfig, warnings: Vec<String>, checks: Vec<Check>, summary: Value) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Report {
            command: command.into(),
            config: config.clone(),
            warnings,
            checks,
            summary,
            pass,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(dir.join("report.json"), text + "\n").context("writing report.json")
    }

    pub fn print(&self) {
        for w in &self.warnings {
            eprintln!("warning: {w}");
        }
        for c in &self.checks {
            let tag = if c.pass { "PASS" } else { "FAIL" };
            if c.lower == Some(1.0) && c.tolerance == 1.0 {
                match &c.detail {
                    Some(d) => println!("[{tag}] {}; {d}", c.name),
                    None => println!("[{tag}] {}", c.name),
                }
                continue;
            }
            let bound = match c.lower {
                Some(l) if c.tolerance.is_infinite() => format!(">= {l:e}"),
                Some(l) => format!("in [{l:e}, {:e}]", c.tolerance),
                None => format!("<= {:e}", c.tolerance),
            };
            match &c.detail {
                Some(d) => println!("[{tag}] {}: {:e} (want {bound}); {d}", c.name, c.value),
                None => println!("[{tag}] {}: {:e} (want {bound})", c.name, c.value),
            }
        }
        println!("{}: {}", self.command, if self.pass { "pass" } else { "FAIL" });
    }
}
