use std::collections::{BTreeMap, VecDeque};

use rand::Rng;

use crate::error::{Error, Result};
use crate::families::{LeaderTrie, LeaderTrieConstants, LEADER};
use crate::generator::Generator;
use crate::oracles::OracleSession;
use crate::scalar::Scalar;
use crate::vocab::{Prefix, Token};

use super::hidden_path::check_delta;
use super::{RecoveryResult, RunMark};

fn check_k(k: usize) -> Result<()> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!("leader-trie recovery needs K >= 3, got {k}")));
    }
    Ok(())
}

/// Samples per node `m = ceil(log(2(K−1)S/δ) / (2·Γ_lead²))`.
pub fn leader_trie_sample_size<F: Scalar>(k: usize, budget: usize, delta: F) -> Result<usize> {
    check_k(k)?;
    check_delta(delta)?;
    if budget == 0 {
        return Err(Error::InvalidParameter("node budget S must be >= 1".into()));
    }
    let margin = LeaderTrieConstants::<F>::new(k).prob_margin();
    let arg = F::lit(2.0) * F::from_count(k - 1) * F::from_count(budget) / delta;
    let m = (arg.ln() / (F::lit(2.0) * margin * margin)).ceil();
    m.to_usize()
        .filter(|&m| m >= 1)
        .ok_or_else(|| Error::InvalidParameter(format!("sample size {m} not representable")))
}

/// Breadth-first expansion shared by the logit and sample variants.
///
/// `elevated(p)` returns the nonleader tokens judged elevated at `p`; a
/// singleton marks `p` internal and queues both children below depth `H`.
/// `budget` caps the number of popped prefixes; the run reports ⊥ if the
/// queue is nonempty when it runs out.
fn breadth_first<E>(
    horizon: usize,
    budget: Option<usize>,
    mut elevated: E,
) -> Result<(BTreeMap<Prefix, Token>, Vec<Prefix>, bool)>
where
    E: FnMut(&Prefix) -> Result<Vec<Token>>,
{
    let mut branch = BTreeMap::new();
    let mut anomalies = Vec::new();
    let mut queue = VecDeque::from([Prefix::root()]);
    let mut popped = 0usize;
    while budget.is_none_or(|s| popped < s) {
        let Some(p) = queue.pop_front() else { break };
        popped += 1;
        let hits = elevated(&p)?;
        if let [b] = hits[..] {
            if p.len() + 1 < horizon {
                queue.push_back(p.child(LEADER));
                queue.push_back(p.child(b));
            }
            branch.insert(p, b);
        } else {
            anomalies.push(p);
        }
    }
    Ok((branch, anomalies, queue.is_empty()))
}

/// Exact trie recovery from chosen-prefix logits: one query per internal
/// node when the oracle error is below the log-space margin.
pub fn recover_leader_trie_logit<F, G, R>(
    session: &mut OracleSession<'_, F, G>,
    rng: &mut R,
) -> Result<RecoveryResult<LeaderTrie>>
where
    F: Scalar,
    G: Generator<F> + ?Sized,
    R: Rng + ?Sized,
{
    let vocab = session.vocab();
    check_k(vocab.k())?;
    let threshold = LeaderTrieConstants::<F>::new(vocab.k()).logit_threshold();
    let mark = RunMark::start(session);
    let (branch, anomalies, _) = breadth_first(vocab.horizon(), None, |p| {
        let logits = session.query_prefix_logit(p, rng)?;
        Ok((2..=vocab.k() as Token).filter(|&a| logits[a as usize - 1] > threshold).collect())
    })?;
    let recovered = LeaderTrie::new(vocab, branch).ok();
    Ok(mark.finish(session, recovered, anomalies))
}

/// Trie recovery from chosen-prefix samples: `m` samples per popped node, at
/// most `budget` nodes; ⊥ when the budget runs out first.
pub fn recover_leader_trie_sample<F, G, R>(
    session: &mut OracleSession<'_, F, G>,
    budget: usize,
    delta: F,
    rng: &mut R,
) -> Result<RecoveryResult<LeaderTrie>>
where
    F: Scalar,
    G: Generator<F> + ?Sized,
    R: Rng + ?Sized,
{
    let vocab = session.vocab();
    let m = leader_trie_sample_size(vocab.k(), budget, delta)?;
    let threshold = LeaderTrieConstants::<F>::new(vocab.k()).frequency_threshold();
    let mark = RunMark::start(session);
    let mut counts = vec![0usize; vocab.k()];
    let (branch, anomalies, drained) = breadth_first(vocab.horizon(), Some(budget), |p| {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..m {
            let a = session.query_prefix_sample(p, rng)?;
            counts[a as usize - 1] += 1;
        }
        let mf = F::from_count(m);
        Ok((2..=vocab.k() as Token)
            .filter(|&a| F::from_count(counts[a as usize - 1]) / mf > threshold)
            .collect())
    })?;
    let recovered = if drained { LeaderTrie::new(vocab, branch).ok() } else { None };
    Ok(mark.finish(session, recovered, anomalies))
}
