use rand::RngCore;

use crate::analysis::{gibbs_policy, GibbsPolicy};
use crate::error::Result;
use crate::families::{BridgeSetup, PromptId};
use crate::generator::Generator;
use crate::oracles::{OracleSession, RewardOracle};
use crate::policy::PointMassPolicy;
use crate::scalar::Scalar;
use crate::vocab::{Completion, Prefix, Token};

use super::hidden_path::{hidden_path_sample_size, majority_walk};
use super::RunMark;

/// Result of the local-reset post-training procedure.
#[derive(Clone, Debug)]
pub struct BridgeOutput<F> {
    pub suffix: Vec<Token>,
    pub bit: u8,
    /// Gibbs optimiser of the instance the procedure believes it faces.
    pub policy: GibbsPolicy<F>,
    pub generator_queries: usize,
    pub reward_queries: usize,
    pub trail: Vec<Prefix>,
}

/// Walks the public scaffold, recovers the hidden suffix by chosen-prefix
/// majority votes below it, then spends one reward query to read the bit.
///
/// Uses `(D+1) + L·m` generator queries with `m = ceil((2/Δ²)·log(L(K−1)/δ))`
/// and exactly one reward query.
pub fn bridge_posttrain<F, G>(
    setup: &BridgeSetup<F>,
    session: &mut OracleSession<'_, F, G>,
    reward: &mut RewardOracle<'_, F>,
    delta: F,
    rng: &mut dyn RngCore,
) -> Result<BridgeOutput<F>>
where
    F: Scalar,
    G: Generator<F> + ?Sized,
{
    let vocab = setup.vocab();
    let l = setup.suffix_len();
    let m = hidden_path_sample_size(setup.gap(), l, vocab.k(), delta)?;
    let mark = RunMark::start(session);
    let reward_before = reward.queries();

    let mut current = Prefix::root();
    session.query_prefix_sample(&current, rng)?;
    for &t in setup.scaffold() {
        current = current.child(t);
        session.query_prefix_sample(&current, rng)?;
    }
    let suffix = majority_walk(session, current, l, m, rng)?;

    let mut probe = setup.scaffold().to_vec();
    probe.extend_from_slice(&suffix);
    probe.push(setup.terminals()[0]);
    let probe = PointMassPolicy::new(vocab, Completion::new(&vocab, probe)?)?;
    let observed = reward.query(PromptId::Hard, &probe, rng);
    let bit = if observed > F::zero() { 0 } else { 1 };

    let policy = gibbs_policy(&setup.instance(suffix.clone(), bit)?);
    let run = mark.finish(session, Some(()), Vec::new());
    Ok(BridgeOutput {
        suffix,
        bit,
        policy,
        generator_queries: run.queries_used,
        reward_queries: reward.queries() - reward_before,
        trail: run.trail,
    })
}
