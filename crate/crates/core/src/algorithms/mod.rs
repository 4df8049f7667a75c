//! Recovery and post-training procedures. Each consumes only the oracle it
//! is entitled to and leaves an auditable query trail.

pub mod bridge;
pub mod distinguisher;
pub mod hidden_path;
pub mod leader_trie;
pub mod seqscore;

use serde::Serialize;

use crate::generator::Generator;
use crate::oracles::OracleSession;
use crate::scalar::Scalar;
use crate::vocab::Prefix;

pub use bridge::{bridge_posttrain, BridgeOutput};
pub use distinguisher::{distinguish_no_reset_baseline, Guess};
pub use hidden_path::{hidden_path_sample_size, recover_hidden_path, recover_hidden_path_from};
pub use leader_trie::{leader_trie_sample_size, recover_leader_trie_logit, recover_leader_trie_sample};
pub use seqscore::{all_ones_padding, recover_hidden_path_seqscore, recover_hidden_path_seqscore_with};

/// Outcome of a recovery run. `recovered` is `None` for the failure marker ⊥.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryResult<T> {
    pub recovered: Option<T>,
    /// Ledger delta over the run.
    pub queries_used: usize,
    /// Prefixes queried during the run, in order.
    pub trail: Vec<Prefix>,
    /// Queried prefixes where the decision rule did not isolate a single
    /// hidden child.
    pub anomalies: Vec<Prefix>,
}

/// Ledger position at the start of a run.
pub(crate) struct RunMark {
    queries: usize,
    trail: usize,
}

impl RunMark {
    pub(crate) fn start<F: Scalar, G: Generator<F> + ?Sized>(session: &OracleSession<'_, F, G>) -> Self {
        Self { queries: session.ledger().total(), trail: session.ledger().prefix_trail().len() }
    }

    pub(crate) fn finish<F, G, T>(
        self,
        session: &OracleSession<'_, F, G>,
        recovered: Option<T>,
        anomalies: Vec<Prefix>,
    ) -> RecoveryResult<T>
    where
        F: Scalar,
        G: Generator<F> + ?Sized,
    {
        let mut trail = session.ledger().prefix_trail();
        trail.drain(..self.trail);
        RecoveryResult {
            recovered,
            queries_used: session.ledger().total() - self.queries,
            trail,
            anomalies,
        }
    }
}
