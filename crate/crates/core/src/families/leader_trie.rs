use std::collections::{BTreeMap, VecDeque};

use rand::Rng;

use crate::dist::NextTokenDist;
use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::scalar::Scalar;
use crate::vocab::{Prefix, Token, VocabSpec};

/// The leader token shared by every leader trie.
pub const LEADER: Token = 1;

/// Branching prefix set: every internal node `p` has exactly the children
/// `p·1` and `p·b(p)` with `b(p) ∈ {2, ..., K}`, and all leaves sit at depth `H`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LeaderTrie {
    vocab: VocabSpec,
    branch: BTreeMap<Prefix, Token>,
}

impl LeaderTrie {
    /// Validates the branch map: prefix closure, two children per internal
    /// node and uniform leaf depth.
    pub fn new(vocab: VocabSpec, branch: BTreeMap<Prefix, Token>) -> Result<Self> {
        if vocab.k() < 3 {
            return Err(Error::InvalidTrie(format!("leader tries need K >= 3, got {}", vocab.k())));
        }
        if !branch.contains_key(&Prefix::root()) {
            return Err(Error::InvalidTrie("root is not an internal node".into()));
        }
        let h = vocab.horizon();
        for (p, &b) in &branch {
            vocab.check_query_prefix(p).map_err(|e| Error::InvalidTrie(format!("node {p}: {e}")))?;
            if b < 2 || b as usize > vocab.k() {
                return Err(Error::InvalidTrie(format!("node {p}: hidden child {b} outside 2..={}", vocab.k())));
            }
            if let Some(parent) = p.parent() {
                let Some(&pb) = branch.get(&parent) else {
                    return Err(Error::InvalidTrie(format!("node {p}: parent not internal")));
                };
                let last = *p.last().expect("non-root");
                if last != LEADER && last != pb {
                    return Err(Error::InvalidTrie(format!("node {p} is not a child of {parent}")));
                }
            }
            if p.len() + 1 < h {
                for child in [p.child(LEADER), p.child(b)] {
                    if !branch.contains_key(&child) {
                        return Err(Error::InvalidTrie(format!(
                            "child {child} of {p} is a leaf above depth {h}"
                        )));
                    }
                }
            }
        }
        Ok(Self { vocab, branch })
    }

    /// Grows a trie breadth-first, drawing each hidden child uniformly from `2..=K`.
    pub fn random<R: Rng + ?Sized>(vocab: VocabSpec, rng: &mut R) -> Result<Self> {
        if vocab.k() < 3 {
            return Err(Error::InvalidTrie(format!("leader tries need K >= 3, got {}", vocab.k())));
        }
        let mut branch = BTreeMap::new();
        let mut queue = VecDeque::from([Prefix::root()]);
        while let Some(p) = queue.pop_front() {
            let b = rng.random_range(2..=vocab.k() as Token);
            if p.len() + 1 < vocab.horizon() {
                queue.push_back(p.child(LEADER));
                queue.push_back(p.child(b));
            }
            branch.insert(p, b);
        }
        Self::new(vocab, branch)
    }

    pub fn vocab(&self) -> VocabSpec {
        self.vocab
    }

    pub fn branch(&self) -> &BTreeMap<Prefix, Token> {
        &self.branch
    }

    /// Internal nodes `I(T)`.
    pub fn internal_nodes(&self) -> impl Iterator<Item = &Prefix> {
        self.branch.keys()
    }

    pub fn num_internal(&self) -> usize {
        self.branch.len()
    }

    pub fn hidden_child(&self, p: &[Token]) -> Option<Token> {
        self.branch.get(p).copied()
    }

    /// Whether `p` (length `<= H`) belongs to the trie node set.
    pub fn contains(&self, p: &[Token]) -> bool {
        match p.split_last() {
            None => true,
            Some((&last, parent)) => match self.branch.get(parent) {
                Some(&b) => last == LEADER || last == b,
                None => false,
            },
        }
    }
}

/// The four level probabilities and the two margins of the leader-trie
/// family, all functions of `K` only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeaderTrieConstants<F> {
    pub alpha: F,
    pub beta: F,
    pub gamma: F,
    pub gamma0: F,
    /// Leader probability off the trie, `4/(K+3)`.
    pub off_leader: F,
}

impl<F: Scalar> LeaderTrieConstants<F> {
    pub fn new(k: usize) -> Self {
        let kf = F::from_count(k);
        let four = F::lit(4.0);
        Self {
            alpha: four / (kf + four),
            beta: F::lit(2.0) / (kf + four),
            gamma: F::one() / (kf + four),
            gamma0: F::one() / (kf + F::lit(3.0)),
            off_leader: four / (kf + F::lit(3.0)),
        }
    }

    /// Probability-space margin `Γ_lead = (β − γ0)/2`.
    pub fn prob_margin(&self) -> F {
        (self.beta - self.gamma0) / F::lit(2.0)
    }

    /// Log-space margin `γ_lead = (log β − log γ0)/2`.
    pub fn log_margin(&self) -> F {
        (self.beta.ln() - self.gamma0.ln()) / F::lit(2.0)
    }

    /// Logit decision threshold, halfway between `log β` and `log γ0`.
    pub fn logit_threshold(&self) -> F {
        self.gamma0.ln() + self.log_margin()
    }

    /// Empirical-frequency threshold `γ0 + Γ_lead`.
    pub fn frequency_threshold(&self) -> F {
        self.gamma0 + self.prob_margin()
    }
}

#[derive(Clone, Debug)]
pub struct LeaderTrieModel<F> {
    trie: LeaderTrie,
    consts: LeaderTrieConstants<F>,
}

impl<F: Scalar> LeaderTrieModel<F> {
    pub fn new(trie: LeaderTrie) -> Self {
        let consts = LeaderTrieConstants::new(trie.vocab.k());
        Self { trie, consts }
    }

    pub fn trie(&self) -> &LeaderTrie {
        &self.trie
    }

    pub fn constants(&self) -> &LeaderTrieConstants<F> {
        &self.consts
    }
}

impl<F: Scalar> Generator<F> for LeaderTrieModel<F> {
    fn vocab(&self) -> VocabSpec {
        self.trie.vocab
    }

    fn conditional(&self, p: &[Token]) -> NextTokenDist<F> {
        let c = &self.consts;
        let k = self.trie.vocab.k();
        match self.trie.hidden_child(p) {
            Some(b) => {
                let mut probs = vec![c.gamma; k];
                probs[0] = c.alpha;
                probs[b as usize - 1] = c.beta;
                NextTokenDist::from_raw(probs)
            }
            None => {
                let mut probs = vec![c.gamma0; k];
                probs[0] = c.off_leader;
                NextTokenDist::from_raw(probs)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(k: usize, h: usize) -> VocabSpec {
        VocabSpec::new(k, h).unwrap()
    }

    fn p(s: &str) -> Prefix {
        s.parse().unwrap()
    }

    #[test]
    fn k3_internal_and_off_trie_rows() {
        let trie = LeaderTrie::new(v(3, 1), BTreeMap::from([(Prefix::root(), 2)])).unwrap();
        let m = LeaderTrieModel::<f64>::new(trie);
        let d = m.next_token_dist(&[]).unwrap();
        let expect = [4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0];
        for (a, b) in d.probs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let trie = LeaderTrie::new(v(3, 2), BTreeMap::from([(p(""), 3), (p("1"), 2), (p("3"), 2)])).unwrap();
        let m = LeaderTrieModel::<f64>::new(trie);
        let d = m.next_token_dist(&[2]).unwrap();
        let expect = [4.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        for (a, b) in d.probs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn constants_identities() {
        for k in 3..30 {
            let c = LeaderTrieConstants::<f64>::new(k);
            let kf = k as f64;
            assert!(c.alpha > c.beta && c.beta > c.gamma0 && c.gamma0 > c.gamma);
            assert!((c.alpha + c.beta + (kf - 2.0) * c.gamma - 1.0).abs() < 1e-12);
            assert!((c.off_leader + (kf - 1.0) * c.gamma0 - 1.0).abs() < 1e-12);
            let closed = (kf + 2.0) / (2.0 * (kf + 4.0) * (kf + 3.0));
            assert!((c.prob_margin() - closed).abs() < 1e-15);
            let log_closed = 0.5 * (2.0 * (kf + 3.0) / (kf + 4.0)).ln();
            assert!((c.log_margin() - log_closed).abs() < 1e-14);
            assert!(c.log_margin() > 0.0);
            assert!((c.frequency_threshold() - (c.beta + c.gamma0) / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_malformed_tries() {
        // K too small
        assert!(LeaderTrie::new(v(2, 1), BTreeMap::from([(p(""), 2)])).is_err());
        // hidden child equal to leader
        assert!(LeaderTrie::new(v(3, 1), BTreeMap::from([(p(""), 1)])).is_err());
        // missing child of root at H = 2
        assert!(LeaderTrie::new(v(3, 2), BTreeMap::from([(p(""), 2), (p("1"), 2)])).is_err());
        // extra node that is not a child of its parent
        assert!(LeaderTrie::new(
            v(3, 2),
            BTreeMap::from([(p(""), 2), (p("1"), 2), (p("2"), 2), (p("3"), 2)])
        )
        .is_err());
        // node at depth H
        assert!(LeaderTrie::new(v(3, 1), BTreeMap::from([(p(""), 2), (p("1"), 2)])).is_err());
        // root missing
        assert!(LeaderTrie::new(v(3, 2), BTreeMap::from([(p("1"), 2)])).is_err());
    }

    #[test]
    fn random_trie_is_full_binary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for h in 1..6 {
            let t = LeaderTrie::random(v(4, h), &mut rng).unwrap();
            assert_eq!(t.num_internal(), (1 << h) - 1);
            assert!(t.contains(&[]));
            for node in t.internal_nodes() {
                assert!(t.contains(node));
            }
        }
    }
}
