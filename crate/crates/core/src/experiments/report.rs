//! Per-trial records, cell summaries and CSV emission.

use std::collections::hash_map::DefaultHasher;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

use super::stats::wilson95;

pub const CSV_HEADER: &str = "cell,trial,seed,success,generator_queries,reward_queries,recovered_hash,metric,wallclock_ns";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub cell: String,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub generator_queries: usize,
    pub reward_queries: usize,
    /// Hash of the recovered object, 0 for ⊥ or when nothing is recovered.
    pub recovered_hash: u64,
    /// Experiment-specific real value (a TV distance, an objective gap, ...).
    pub metric: Option<f64>,
    pub wallclock_ns: u64,
}

/// Stable-within-a-build hash used for the `recovered_hash` column.
pub fn object_hash<T: Hash + ?Sized>(value: &T) -> u64 {
    let mut h = DefaultHasher::new();
    value.hash(&mut h);
    h.finish()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub cell: String,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub wilson95: (f64, f64),
    pub mean_generator_queries: f64,
    pub max_generator_queries: usize,
    pub mean_reward_queries: f64,
    /// Theoretical value the rate or metric is compared against.
    pub reference: Option<f64>,
}

impl CellSummary {
    /// Folds the records of one cell, in order.
    pub fn from_trials(cell: &str, trials: &[TrialRecord], reference: Option<f64>) -> Self {
        let n = trials.len();
        let successes = trials.iter().filter(|t| t.success).count();
        let mean = |f: &dyn Fn(&TrialRecord) -> usize| {
            if n == 0 {
                0.0
            } else {
                trials.iter().map(|t| f(t) as f64).sum::<f64>() / n as f64
            }
        };
        Self {
            cell: cell.to_string(),
            trials: n,
            successes,
            success_rate: if n == 0 { 0.0 } else { successes as f64 / n as f64 },
            wilson95: wilson95(successes, n),
            mean_generator_queries: mean(&|t| t.generator_queries),
            max_generator_queries: trials.iter().map(|t| t.generator_queries).max().unwrap_or(0),
            mean_reward_queries: mean(&|t| t.reward_queries),
            reference,
        }
    }
}

/// Named pass/fail assertion attached to a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// Auxiliary table written into the footer.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub trials: Vec<TrialRecord>,
    pub cells: Vec<CellSummary>,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, seed: u64) -> Self {
        Self { experiment: experiment.into(), seed, ..Self::default() }
    }

    /// Appends the records of one cell and its summary.
    pub fn push_cell(&mut self, cell: &str, trials: Vec<TrialRecord>, reference: Option<f64>) -> &CellSummary {
        self.cells.push(CellSummary::from_trials(cell, &trials, reference));
        self.trials.extend(trials);
        self.cells.last().expect("just pushed")
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn cell_trials<'a>(&'a self, cell: &'a str) -> impl Iterator<Item = &'a TrialRecord> + 'a {
        self.trials.iter().filter(move |t| t.cell == cell)
    }

    /// CSV body plus a `#`-prefixed footer with summaries, tables and checks.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(CSV_HEADER);
        s.push('\n');
        for t in &self.trials {
            let metric = t.metric.map(|m| m.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:016x},{},{}",
                t.cell,
                t.trial,
                t.seed,
                u8::from(t.success),
                t.generator_queries,
                t.reward_queries,
                t.recovered_hash,
                metric,
                t.wallclock_ns
            );
        }
        if self.cells.is_empty() && self.tables.is_empty() && self.checks.is_empty() {
            return s;
        }
        let _ = writeln!(s, "# experiment={} seed={}", self.experiment, self.seed);
        for c in &self.cells {
            let reference = c.reference.map(|r| r.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "# cell={} trials={} successes={} rate={} wilson95=[{},{}] mean_generator_queries={} max_generator_queries={} mean_reward_queries={} reference={}",
                c.cell,
                c.trials,
                c.successes,
                c.success_rate,
                c.wilson95.0,
                c.wilson95.1,
                c.mean_generator_queries,
                c.max_generator_queries,
                c.mean_reward_queries,
                reference
            );
        }
        for table in &self.tables {
            let _ = writeln!(s, "# table {}: {}", table.name, table.header.join(","));
            for row in &table.rows {
                let _ = writeln!(s, "# {}", row.join(","));
            }
        }
        for c in &self.checks {
            let _ = writeln!(s, "# check {}: {} ({})", c.name, if c.passed { "pass" } else { "FAIL" }, c.detail);
        }
        s
    }
}

/// Writes the CSV rendering of `report` to `path`.
pub fn emit_report(report: &ExperimentReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_csv()).map_err(|source| Error::Io { path: path.into(), source })
}
