//! Access-model layer: oracle interfaces, query accounting and the
//! local-reset auditor.

pub mod discipline;
pub mod ledger;
pub mod noise;
pub mod reward;
pub mod session;

pub use discipline::{audit_discipline, DisciplineAudit, DisciplineTracker, Verdict};
pub use ledger::{LedgerEntry, OracleKind, QueryLedger, QueryTarget, ReplySummary};
pub use noise::NoisePolicy;
pub use reward::RewardOracle;
pub use session::{generated_logprobs, output_only, top_k_lists, OracleSession, PathFullReply, TopK, TopReply};
