//! Exact, enumeration-based analysis quantities.

pub mod bounds;
pub mod divergence;
pub mod gibbs;
pub mod objective;
pub mod reach;
pub mod transcript;

use crate::error::{Error, Result};
use crate::vocab::VocabSpec;

pub use bounds::{lower_bound_certificate, no_reset_query_lower_bound, no_reset_success_ceiling, CertificateParams};
pub use divergence::{binary_kl, kl_divergence, policy_kl, Divergence};
pub use gibbs::{gibbs_normalizer_by_enumeration, gibbs_policy, GibbsPolicy};
pub use objective::{evaluate_objective, hard_prompt_objective, random_table_policy, regret_gap_check, Objective, RegretCheck};
pub use reach::{reachability, reachability_by_complement, reachability_equal_outside_agreement, PrefixSet, ReachComparison};
pub use transcript::{pathfull_law, tv_distance, ReplyKey, TranscriptLaw};

/// Default ceiling on the number of enumerated trajectories.
pub const ENUMERATION_CAP: u128 = 1_000_000;

pub(crate) fn check_cap(vocab: &VocabSpec, cap: u128) -> Result<()> {
    let size = vocab.num_completions();
    if size > cap {
        return Err(Error::EnumerationCap { size, cap });
    }
    Ok(())
}
