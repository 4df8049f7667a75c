use std::marker::PhantomData;

use rand::Rng;

use crate::dist::NextTokenDist;
use crate::error::{Error, Result};
use crate::generator::{trajectory_log_prob, Generator};
use crate::oracles::discipline::DisciplineTracker;
use crate::oracles::ledger::{LedgerEntry, OracleKind, QueryLedger, QueryTarget, ReplySummary};
use crate::oracles::noise::NoisePolicy;
use crate::scalar::Scalar;
use crate::vocab::{Completion, Prefix, Token, VocabSpec};

/// The `k` most likely tokens at one step, most likely first.
pub type TopK<F> = Vec<(Token, F)>;

/// The canonical no-reset reply: a rollout together with every visited
/// next-token distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct PathFullReply<F> {
    pub y: Completion,
    /// `mus[t]` is the distribution at `y_{<t}` (0-based `t`).
    pub mus: Vec<NextTokenDist<F>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopReply {
    Token(Token),
    /// No unique maximiser.
    Bottom,
}

pub fn output_only<F>(reply: &PathFullReply<F>) -> Completion {
    reply.y.clone()
}

/// Generated-token log-probabilities `log mus[t][y_t]`.
pub fn generated_logprobs<F: Scalar>(reply: &PathFullReply<F>) -> Vec<F> {
    reply.y.iter().zip(&reply.mus).map(|(&a, mu)| mu.prob(a).ln()).collect()
}

/// Per step, the `k` most likely tokens with their log-probabilities.
pub fn top_k_lists<F: Scalar>(reply: &PathFullReply<F>, k: usize) -> Vec<TopK<F>> {
    reply
        .mus
        .iter()
        .map(|mu| mu.ranked().into_iter().take(k).map(|a| (a, mu.prob(a).ln())).collect())
        .collect()
}

/// Stateful access channel to one fixed-prompt generator.
///
/// Every answered query is appended to the ledger. Prefix-addressed queries
/// feed a local-reset tracker; in strict mode a query that breaks the
/// discipline is refused with [`Error::DisciplineViolation`] and not recorded.
pub struct OracleSession<'m, F, G: ?Sized> {
    model: &'m G,
    ledger: QueryLedger,
    noise: NoisePolicy<F>,
    tracker: DisciplineTracker,
    strict: bool,
    _scalar: PhantomData<F>,
}

impl<'m, F: Scalar, G: Generator<F> + ?Sized> OracleSession<'m, F, G> {
    pub fn new(model: &'m G) -> Self {
        Self {
            model,
            ledger: QueryLedger::new(),
            noise: NoisePolicy::Exact,
            tracker: DisciplineTracker::new(),
            strict: false,
            _scalar: PhantomData,
        }
    }

    /// Noise applied by logit and sequence-score queries.
    pub fn with_noise(mut self, noise: NoisePolicy<F>) -> Self {
        self.noise = noise;
        self
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn vocab(&self) -> VocabSpec {
        self.model.vocab()
    }

    pub fn noise(&self) -> NoisePolicy<F> {
        self.noise
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> QueryLedger {
        self.ledger
    }

    fn rollout<R: Rng + ?Sized>(&self, rng: &mut R) -> PathFullReply<F> {
        let h = self.vocab().horizon();
        let mut tokens = Vec::with_capacity(h);
        let mut mus = Vec::with_capacity(h);
        for _ in 0..h {
            let mu = self.model.conditional(&tokens);
            tokens.push(mu.sample(rng));
            mus.push(mu);
        }
        PathFullReply { y: Completion::from_raw(tokens), mus }
    }

    /// Any no-reset interface: one fresh rollout, post-processed by `post`.
    pub fn query_no_reset<R, T>(
        &mut self,
        kind: OracleKind,
        rng: &mut R,
        post: impl FnOnce(&PathFullReply<F>, &mut R) -> T,
    ) -> T
    where
        R: Rng + ?Sized,
    {
        debug_assert!(kind.is_no_reset());
        let reply = self.rollout(rng);
        self.ledger.push(LedgerEntry {
            kind,
            target: QueryTarget::Rollout,
            reply: ReplySummary::Rollout(reply.y.clone()),
        });
        post(&reply, rng)
    }

    pub fn query_pathfull<R: Rng + ?Sized>(&mut self, rng: &mut R) -> PathFullReply<F> {
        self.query_no_reset(OracleKind::PathFull, rng, |w, _| w.clone())
    }

    pub fn query_output_only<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Completion {
        self.query_no_reset(OracleKind::OutputOnly, rng, |w, _| output_only(w))
    }

    pub fn query_output_with_logprobs<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (Completion, Vec<F>) {
        self.query_no_reset(OracleKind::OutputWithLogprobs, rng, |w, _| {
            (w.y.clone(), generated_logprobs(w))
        })
    }

    pub fn query_output_with_top_k<R: Rng + ?Sized>(
        &mut self,
        k: usize,
        rng: &mut R,
    ) -> Result<(Completion, Vec<TopK<F>>)> {
        if k == 0 || k > self.vocab().k() {
            return Err(Error::InvalidParameter(format!("top-k size {k} outside 1..={}", self.vocab().k())));
        }
        Ok(self.query_no_reset(OracleKind::OutputWithTopK, rng, |w, _| (w.y.clone(), top_k_lists(w, k))))
    }

    fn admit_prefix(&mut self, p: &Prefix) -> Result<()> {
        self.vocab().check_query_prefix(p)?;
        if self.strict && !self.tracker.admits(p) {
            return Err(Error::DisciplineViolation { index: self.ledger.prefix_trail().len() + 1 });
        }
        self.tracker.record(p);
        Ok(())
    }

    pub fn query_prefix_sample<R: Rng + ?Sized>(&mut self, p: &Prefix, rng: &mut R) -> Result<Token> {
        self.admit_prefix(p)?;
        let a = self.model.conditional(p).sample(rng);
        self.ledger.push(LedgerEntry {
            kind: OracleKind::PrefixSample,
            target: QueryTarget::Prefix(p.clone()),
            reply: ReplySummary::Token(a),
        });
        Ok(a)
    }

    pub fn query_prefix_top(&mut self, p: &Prefix) -> Result<TopReply> {
        self.admit_prefix(p)?;
        let top = self.model.conditional(p).unique_argmax();
        self.ledger.push(LedgerEntry {
            kind: OracleKind::PrefixTop,
            target: QueryTarget::Prefix(p.clone()),
            reply: ReplySummary::Top(top),
        });
        Ok(top.map_or(TopReply::Bottom, TopReply::Token))
    }

    /// Log-probability vector within `xi` of the exact one in sup norm;
    /// zero-probability entries are returned as `-inf`.
    pub fn query_prefix_logit<R: Rng + ?Sized>(&mut self, p: &Prefix, rng: &mut R) -> Result<Vec<F>> {
        self.admit_prefix(p)?;
        let exact = self.model.conditional(p).log_probs();
        let noisy: Vec<F> = exact.iter().map(|&l| self.noise.perturb(l, rng)).collect();
        self.ledger.push(LedgerEntry {
            kind: OracleKind::PrefixLogit,
            target: QueryTarget::Prefix(p.clone()),
            reply: ReplySummary::Vector(noisy.iter().map(|x| x.as_f64()).collect()),
        });
        Ok(noisy)
    }

    /// Teacher-forced sequence log-likelihood within `xi`.
    pub fn query_seqscore<R: Rng + ?Sized>(&mut self, y: &Completion, rng: &mut R) -> Result<F> {
        let exact = trajectory_log_prob(self.model, y)?;
        let score = self.noise.perturb(exact, rng);
        self.ledger.push(LedgerEntry {
            kind: OracleKind::SeqScore,
            target: QueryTarget::Completion(y.clone()),
            reply: ReplySummary::Score(score.as_f64()),
        });
        Ok(score)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{HiddenPathModel, LeaderTrie, LeaderTrieModel};
    use crate::generator::{trajectory_prob, TabularModel, UniformModel};
    use crate::oracles::discipline::audit_discipline;
    use crate::rng::seeded;

    fn v(k: usize, h: usize) -> VocabSpec {
        VocabSpec::new(k, h).unwrap()
    }

    #[test]
    fn pathfull_point_mass() {
        let g = TabularModel::new(v(3, 3), NextTokenDist::<f64>::point_mass(3, 2)).unwrap();
        let mut s = OracleSession::new(&g);
        let w = s.query_pathfull(&mut seeded(0));
        assert_eq!(&*w.y, &[2, 2, 2]);
        assert!(w.mus.iter().all(|mu| mu.prob(2) == 1.0));
        assert_eq!(s.ledger().count(OracleKind::PathFull), 1);
    }

    #[test]
    fn first_mu_is_root_distribution() {
        let m = HiddenPathModel::<f64>::new(v(3, 4), 1.0, vec![3, 1, 2, 2]).unwrap();
        let root = m.conditional(&[]);
        let mut s = OracleSession::new(&m);
        let mut rng = seeded(5);
        for _ in 0..50 {
            let w = s.query_pathfull(&mut rng);
            assert_eq!(w.mus[0], root);
            for t in 0..4 {
                assert_eq!(w.mus[t], m.conditional(&w.y[..t]));
            }
        }
    }

    #[test]
    fn logprobs_uniform_and_product_rule() {
        let g = UniformModel::new(v(4, 5));
        let mut s = OracleSession::<f64, _>::new(&g);
        let (_, lp) = s.query_output_with_logprobs(&mut seeded(1));
        assert!(lp.iter().all(|&l| (l + 4f64.ln()).abs() < 1e-15));

        let m = HiddenPathModel::<f64>::new(v(2, 6), 1.3, vec![1, 2, 2, 1, 1, 2]).unwrap();
        let mut s = OracleSession::new(&m);
        let mut rng = seeded(2);
        for _ in 0..100 {
            let (y, lp) = s.query_output_with_logprobs(&mut rng);
            let total: f64 = lp.iter().sum();
            let exact: f64 = trajectory_prob(&m, &y).unwrap();
            assert!((total - exact.ln()).abs() < 1e-10);
        }
        assert_eq!(s.ledger().rollouts(), 100);
    }

    #[test]
    fn on_path_logprobs_are_log_p_plus() {
        let m = HiddenPathModel::<f64>::new(v(2, 1), 2.0, vec![1]).unwrap();
        // with H = 1 every rollout is scored at the root only
        let mut s = OracleSession::new(&m);
        let mut rng = seeded(3);
        let (y, lp) = loop {
            let r = s.query_output_with_logprobs(&mut rng);
            if r.0[0] == 1 {
                break r;
            }
        };
        assert_eq!(&*y, &[1]);
        assert!((lp[0] - m.p_plus().ln()).abs() < 1e-15);
    }

    #[test]
    fn no_reset_replies_reconstruct_from_pathfull() {
        let m = HiddenPathModel::<f64>::new(v(3, 4), 0.8, vec![2, 2, 3, 1]).unwrap();
        let mut s = OracleSession::new(&m);
        for seed in 0..20 {
            let w = s.query_pathfull(&mut seeded(seed));
            let y = s.query_output_only(&mut seeded(seed));
            let (y2, lp) = s.query_output_with_logprobs(&mut seeded(seed));
            let (y3, top) = s.query_output_with_top_k(2, &mut seeded(seed)).unwrap();
            assert_eq!(y, output_only(&w));
            assert_eq!(y2, w.y);
            assert_eq!(y3, w.y);
            let lp_bits: Vec<u64> = lp.iter().map(|x| x.to_bits()).collect();
            let re_bits: Vec<u64> = generated_logprobs(&w).iter().map(|x| x.to_bits()).collect();
            assert_eq!(lp_bits, re_bits);
            assert_eq!(top, top_k_lists(&w, 2));
        }
        assert_eq!(s.ledger().rollouts(), 80);
        assert!(s.query_output_with_top_k(0, &mut seeded(0)).is_err());
    }

    #[test]
    fn prefix_top_cases() {
        let g = UniformModel::new(v(3, 2));
        let mut s = OracleSession::<f64, _>::new(&g);
        assert_eq!(s.query_prefix_top(&Prefix::root()).unwrap(), TopReply::Bottom);

        let m = HiddenPathModel::<f64>::new(v(3, 3), 0.5, vec![3, 1, 2]).unwrap();
        let mut s = OracleSession::new(&m);
        assert_eq!(s.query_prefix_top(&"".parse().unwrap()).unwrap(), TopReply::Token(3));
        assert_eq!(s.query_prefix_top(&"3".parse().unwrap()).unwrap(), TopReply::Token(1));
        assert_eq!(s.query_prefix_top(&"3.1".parse().unwrap()).unwrap(), TopReply::Token(2));
        assert_eq!(s.query_prefix_top(&"3.1".parse().unwrap()).unwrap(), TopReply::Token(2));
        assert!(s.query_prefix_top(&"3.1.2".parse().unwrap()).is_err());

        let mut rng = seeded(8);
        let trie = LeaderTrie::random(v(4, 3), &mut rng).unwrap();
        let lm = LeaderTrieModel::<f64>::new(trie);
        let mut s = OracleSession::new(&lm);
        for p in v(4, 3).query_prefixes() {
            assert_eq!(s.query_prefix_top(&p).unwrap(), TopReply::Token(1));
        }
    }

    #[test]
    fn prefix_sample_counts_and_frequency() {
        let m = HiddenPathModel::<f64>::new(v(2, 3), 1.0, vec![2, 1, 1]).unwrap();
        let mut s = OracleSession::new(&m);
        let mut rng = seeded(4);
        let p: Prefix = "2".parse().unwrap();
        s.query_prefix_sample(&Prefix::root(), &mut rng).unwrap();
        let n = 10_000;
        let hits = (0..n).filter(|_| s.query_prefix_sample(&p, &mut rng).unwrap() == 1).count();
        assert_eq!(s.ledger().count(OracleKind::PrefixSample), n + 1);
        let pp = m.p_plus();
        let sigma = (pp * (1.0 - pp) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - pp).abs() <= 3.0 * sigma);
    }

    #[test]
    fn logit_exact_and_noisy_contract() {
        let g = UniformModel::new(v(3, 2));
        let mut s = OracleSession::<f64, _>::new(&g);
        let l = s.query_prefix_logit(&Prefix::root(), &mut seeded(0)).unwrap();
        assert!(l.iter().all(|&x| (x + 3f64.ln()).abs() < 1e-15));

        let mut rng = seeded(6);
        let trie = LeaderTrie::random(v(5, 3), &mut rng).unwrap();
        let lm = LeaderTrieModel::<f64>::new(trie.clone());
        let c = *lm.constants();
        let mut s = OracleSession::new(&lm);
        let mut got = s.query_prefix_logit(&Prefix::root(), &mut rng).unwrap();
        let b = trie.hidden_child(&[]).unwrap() as usize;
        assert!((got[0] - c.alpha.ln()).abs() < 1e-15);
        assert!((got[b - 1] - c.beta.ln()).abs() < 1e-15);
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(got[..3].iter().all(|&x| (x - c.gamma.ln()).abs() < 1e-15));

        for noise in [
            NoisePolicy::Uniform { xi: 0.2 },
            NoisePolicy::TowardThreshold { xi: 0.2, threshold: c.logit_threshold() },
        ] {
            let mut s = OracleSession::new(&lm).with_noise(noise);
            for p in v(5, 3).query_prefixes().into_iter().take(40) {
                let noisy = s.query_prefix_logit(&p, &mut rng).unwrap();
                let exact = lm.conditional(&p).log_probs();
                let dev = noisy.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(dev <= 0.2 + 1e-15);
            }
        }
    }

    #[test]
    fn logit_zero_probability_is_neg_infinity() {
        let g = TabularModel::new(v(3, 2), NextTokenDist::<f64>::point_mass(3, 1)).unwrap();
        let mut s = OracleSession::new(&g).with_noise(NoisePolicy::Uniform { xi: 0.1 });
        let l = s.query_prefix_logit(&Prefix::root(), &mut seeded(0)).unwrap();
        assert_eq!(l[1], f64::NEG_INFINITY);
        assert!(l[0].abs() <= 0.1);
    }

    #[test]
    fn seqscore_cases() {
        let g = UniformModel::new(v(3, 4));
        let mut s = OracleSession::<f64, _>::new(&g);
        let y = Completion::new(&v(3, 4), vec![1, 2, 3, 1]).unwrap();
        assert!((s.query_seqscore(&y, &mut seeded(0)).unwrap() + 4.0 * 3f64.ln()).abs() < 1e-12);

        let m = HiddenPathModel::<f64>::new(v(2, 3), 1.0, vec![1, 1, 2]).unwrap();
        let mut s = OracleSession::new(&m);
        let z = m.hidden_path().clone();
        let got = s.query_seqscore(&z, &mut seeded(0)).unwrap();
        assert!((got - 3.0 * m.p_plus().ln()).abs() < 1e-12);
        // both leave the path at step 1, so later tokens only see uniform rows
        let a = Completion::new(&v(2, 3), vec![2, 1, 1]).unwrap();
        let b = Completion::new(&v(2, 3), vec![2, 2, 2]).unwrap();
        let sa = s.query_seqscore(&a, &mut seeded(0)).unwrap();
        let sb = s.query_seqscore(&b, &mut seeded(0)).unwrap();
        assert!((sa - sb).abs() < 1e-15);
        assert!(s.query_seqscore(&Completion::from_raw(vec![1]), &mut seeded(0)).is_err());
        assert_eq!(s.ledger().count(OracleKind::SeqScore), 3);

        let mut s = OracleSession::new(&m).with_noise(NoisePolicy::Uniform { xi: 0.05 });
        let mut rng = seeded(1);
        for y in v(2, 3).completions() {
            let exact: f64 = trajectory_log_prob(&m, &y).unwrap();
            assert!((s.query_seqscore(&y, &mut rng).unwrap() - exact).abs() <= 0.05);
        }
    }

    #[test]
    fn strict_mode_refuses_jumps() {
        let g = UniformModel::new(v(2, 4));
        let mut s = OracleSession::<f64, _>::new(&g).strict(true);
        let mut rng = seeded(0);
        assert!(matches!(
            s.query_prefix_sample(&"1".parse().unwrap(), &mut rng),
            Err(Error::DisciplineViolation { index: 1 })
        ));
        s.query_prefix_sample(&Prefix::root(), &mut rng).unwrap();
        s.query_prefix_sample(&"2".parse().unwrap(), &mut rng).unwrap();
        assert!(s.query_prefix_sample(&"2.1.1".parse().unwrap(), &mut rng).is_err());
        assert_eq!(s.ledger().total(), 2);

        let mut lax = OracleSession::<f64, _>::new(&g);
        lax.query_prefix_top(&"1.1".parse().unwrap()).unwrap();
        let audit = audit_discipline(&lax.ledger().prefix_trail());
        assert_eq!(audit.offending_index, Some(1));
    }

    #[test]
    fn ledger_csv_export() {
        let m = HiddenPathModel::<f64>::new(v(2, 2), 1.0, vec![1, 2]).unwrap();
        let mut s = OracleSession::new(&m);
        let mut rng = seeded(0);
        s.query_prefix_top(&Prefix::root()).unwrap();
        s.query_prefix_logit(&"1".parse().unwrap(), &mut rng).unwrap();
        let csv = s.ledger().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "query_index,kind,prefix_or_completion,reply_summary");
        assert_eq!(lines[1], "1,prefix-top,∅,1");
        assert!(lines[2].starts_with("2,prefix-logit,1,"));
    }
}
