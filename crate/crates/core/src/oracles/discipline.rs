use std::collections::HashSet;

use serde::Serialize;

use crate::vocab::Prefix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Ok,
    Violation,
}

/// Result of checking a prefix trail against the local-reset discipline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DisciplineAudit {
    pub verdict: Verdict,
    /// 1-based position of the first offending query.
    pub offending_index: Option<usize>,
}

impl DisciplineAudit {
    pub fn is_ok(&self) -> bool {
        self.verdict == Verdict::Ok
    }
}

/// Incremental local-reset checker: the first query is the root and every
/// later one revisits a queried prefix or extends one by a single token.
#[derive(Clone, Debug, Default)]
pub struct DisciplineTracker {
    seen: HashSet<Prefix>,
    len: usize,
}

impl DisciplineTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn admits(&self, p: &Prefix) -> bool {
        if self.len == 0 {
            return p.is_root();
        }
        self.seen.contains(p) || p.parent().is_some_and(|parent| self.seen.contains(&parent))
    }

    pub fn record(&mut self, p: &Prefix) {
        self.len += 1;
        if !self.seen.contains(p) {
            self.seen.insert(p.clone());
        }
    }
}

pub fn audit_discipline(trail: &[Prefix]) -> DisciplineAudit {
    let mut tracker = DisciplineTracker::new();
    for (i, p) in trail.iter().enumerate() {
        if !tracker.admits(p) {
            return DisciplineAudit { verdict: Verdict::Violation, offending_index: Some(i + 1) };
        }
        tracker.record(p);
    }
    DisciplineAudit { verdict: Verdict::Ok, offending_index: None }
}
