use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::vocab::{Completion, Prefix, Token};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OracleKind {
    PathFull,
    OutputOnly,
    OutputWithLogprobs,
    OutputWithTopK,
    PrefixSample,
    PrefixTop,
    PrefixLogit,
    SeqScore,
}

impl OracleKind {
    pub const ALL: [OracleKind; 8] = [
        OracleKind::PathFull,
        OracleKind::OutputOnly,
        OracleKind::OutputWithLogprobs,
        OracleKind::OutputWithTopK,
        OracleKind::PrefixSample,
        OracleKind::PrefixTop,
        OracleKind::PrefixLogit,
        OracleKind::SeqScore,
    ];

    /// Whether each query is one fresh root-start rollout.
    pub fn is_no_reset(self) -> bool {
        matches!(
            self,
            OracleKind::PathFull
                | OracleKind::OutputOnly
                | OracleKind::OutputWithLogprobs
                | OracleKind::OutputWithTopK
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            OracleKind::PathFull => "path-full",
            OracleKind::OutputOnly => "output-only",
            OracleKind::OutputWithLogprobs => "output-with-logprobs",
            OracleKind::OutputWithTopK => "output-with-top-k",
            OracleKind::PrefixSample => "prefix-sample",
            OracleKind::PrefixTop => "prefix-top",
            OracleKind::PrefixLogit => "prefix-logit",
            OracleKind::SeqScore => "seq-score",
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum QueryTarget {
    Rollout,
    Prefix(Prefix),
    Completion(Completion),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReplySummary {
    Rollout(Completion),
    Token(Token),
    Top(Option<Token>),
    Vector(Vec<f64>),
    Score(f64),
}

impl fmt::Display for ReplySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplySummary::Rollout(y) => write!(f, "{y}"),
            ReplySummary::Token(t) => write!(f, "{t}"),
            ReplySummary::Top(Some(t)) => write!(f, "{t}"),
            ReplySummary::Top(None) => f.write_str("⊥"),
            ReplySummary::Vector(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
                f.write_str(&parts.join(" "))
            }
            ReplySummary::Score(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LedgerEntry {
    pub kind: OracleKind,
    pub target: QueryTarget,
    pub reply: ReplySummary,
}

/// Append-only record of every query a session answered.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QueryLedger {
    entries: Vec<LedgerEntry>,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn push(&mut self, entry: LedgerEntry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn total(&self) -> usize {
        self.entries.len()
    }

    pub fn count(&self, kind: OracleKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    /// Root-start rollouts drawn, one per no-reset query of any kind.
    pub fn rollouts(&self) -> usize {
        self.entries.iter().filter(|e| e.kind.is_no_reset()).count()
    }

    /// Prefixes queried by prefix-addressed kinds, in order.
    pub fn prefix_trail(&self) -> Vec<Prefix> {
        self.entries
            .iter()
            .filter_map(|e| match &e.target {
                QueryTarget::Prefix(p) => Some(p.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn scored_completions(&self) -> Vec<Completion> {
        self.entries
            .iter()
            .filter_map(|e| match &e.target {
                QueryTarget::Completion(y) => Some(y.clone()),
                _ => None,
            })
            .collect()
    }

    /// CSV with header `query_index,kind,prefix_or_completion,reply_summary`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("query_index,kind,prefix_or_completion,reply_summary\n");
        for (i, e) in self.entries.iter().enumerate() {
            let target = match &e.target {
                QueryTarget::Rollout => String::new(),
                QueryTarget::Prefix(p) => p.to_string(),
                QueryTarget::Completion(y) => y.to_string(),
            };
            let _ = writeln!(out, "{},{},{},{}", i + 1, e.kind, target, e.reply);
        }
        out
    }
}
