//! Policies over completions at a fixed prompt.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::generator::{sample_trajectory, trajectory_prob, Generator};
use crate::scalar::Scalar;
use crate::vocab::{Completion, Token, VocabSpec};

pub trait CompletionPolicy<F: Scalar>: Send + Sync {
    fn vocab(&self) -> VocabSpec;

    /// `π(y)` for a completion of length `H`.
    fn prob(&self, y: &[Token]) -> F;

    fn sample(&self, rng: &mut dyn RngCore) -> Completion;
}

/// Deterministic policy concentrated on one completion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointMassPolicy {
    vocab: VocabSpec,
    target: Completion,
}

impl PointMassPolicy {
    pub fn new(vocab: VocabSpec, target: Completion) -> Result<Self> {
        vocab.check_completion(&target)?;
        Ok(Self { vocab, target })
    }

    pub fn target(&self) -> &Completion {
        &self.target
    }
}

impl<F: Scalar> CompletionPolicy<F> for PointMassPolicy {
    fn vocab(&self) -> VocabSpec {
        self.vocab
    }
    fn prob(&self, y: &[Token]) -> F {
        if *y == self.target[..] {
            F::one()
        } else {
            F::zero()
        }
    }
    fn sample(&self, _rng: &mut dyn RngCore) -> Completion {
        self.target.clone()
    }
}

/// The trajectory law of an autoregressive generator, used as a policy.
#[derive(Clone, Debug)]
pub struct GeneratorPolicy<G> {
    generator: G,
}

impl<G> GeneratorPolicy<G> {
    pub fn new(generator: G) -> Self {
        Self { generator }
    }
}

impl<F: Scalar, G: Generator<F>> CompletionPolicy<F> for GeneratorPolicy<G> {
    fn vocab(&self) -> VocabSpec {
        self.generator.vocab()
    }
    fn prob(&self, y: &[Token]) -> F {
        trajectory_prob(&self.generator, y).unwrap_or(F::zero())
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Completion {
        sample_trajectory(&self.generator, rng)
    }
}

/// Index of `y` in the lexicographic enumeration of `Σ^H`.
pub fn completion_index(vocab: &VocabSpec, y: &[Token]) -> usize {
    y.iter().fold(0usize, |acc, &t| acc * vocab.k() + (t as usize - 1))
}

/// Explicit probability table over all `K^H` completions, indexed
/// lexicographically.
#[derive(Clone, Debug, PartialEq)]
pub struct TablePolicy<F> {
    vocab: VocabSpec,
    probs: Vec<F>,
}

impl<F: Scalar> TablePolicy<F> {
    pub fn new(vocab: VocabSpec, probs: Vec<F>) -> Result<Self> {
        if probs.len() as u128 != vocab.num_completions() {
            return Err(Error::InvalidParameter(format!(
                "policy table has {} entries, expected K^H = {}",
                probs.len(),
                vocab.num_completions()
            )));
        }
        if probs.iter().any(|p| !(*p >= F::zero())) {
            return Err(Error::InvalidParameter("negative policy probability".into()));
        }
        let total: F = probs.iter().copied().sum();
        if (total - F::one()).abs() > F::lit(1e-10) {
            return Err(Error::InvalidParameter(format!("policy sums to {total}")));
        }
        Ok(Self { vocab, probs })
    }

    /// Tabulates any policy by enumeration.
    pub fn from_policy(policy: &dyn CompletionPolicy<F>) -> Result<Self> {
        let vocab = policy.vocab();
        let probs = vocab.completions().map(|y| policy.prob(&y)).collect();
        Self::new(vocab, probs)
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }
}

impl<F: Scalar> CompletionPolicy<F> for TablePolicy<F> {
    fn vocab(&self) -> VocabSpec {
        self.vocab
    }
    fn prob(&self, y: &[Token]) -> F {
        self.probs[completion_index(&self.vocab, y)]
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Completion {
        use rand::Rng;
        let u = F::lit(rng.random::<f64>());
        let mut acc = F::zero();
        let mut chosen = None;
        for (i, &p) in self.probs.iter().enumerate() {
            acc = acc + p;
            if p > F::zero() {
                chosen = Some(i);
                if u < acc {
                    break;
                }
            }
        }
        let mut idx = chosen.expect("nonempty support");
        let k = self.vocab.k();
        let mut tokens = vec![0; self.vocab.horizon()];
        for slot in tokens.iter_mut().rev() {
            *slot = (idx % k) as Token + 1;
            idx /= k;
        }
        Completion::from_raw(tokens)
    }
}
