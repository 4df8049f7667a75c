//! The generator abstraction: a next-token distribution at every prefix of a
//! fixed-prompt prefix tree.

use std::collections::BTreeMap;

use rand::Rng;

use crate::dist::NextTokenDist;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vocab::{Completion, Prefix, Token, VocabSpec};

pub trait Generator<F: Scalar>: Send + Sync {
    fn vocab(&self) -> VocabSpec;

    /// Next-token distribution at `p`. The prefix is assumed valid
    /// (`|p| < H`, tokens in range); use [`Generator::next_token_dist`] for
    /// checked access.
    fn conditional(&self, p: &[Token]) -> NextTokenDist<F>;

    fn next_token_dist(&self, p: &[Token]) -> Result<NextTokenDist<F>> {
        self.vocab().check_query_prefix(p)?;
        Ok(self.conditional(p))
    }
}

impl<F: Scalar, G: Generator<F> + ?Sized> Generator<F> for &G {
    fn vocab(&self) -> VocabSpec {
        (**self).vocab()
    }
    fn conditional(&self, p: &[Token]) -> NextTokenDist<F> {
        (**self).conditional(p)
    }
}

/// `log Pr(Y = y)`, accumulated as a sum of per-step logs.
pub fn trajectory_log_prob<F: Scalar, G: Generator<F> + ?Sized>(g: &G, y: &[Token]) -> Result<F> {
    g.vocab().check_completion(y)?;
    Ok((0..y.len()).map(|t| g.conditional(&y[..t]).prob(y[t]).ln()).sum())
}

/// `Pr(Y = y) = prod_t M(y_t | y_{<t})`.
pub fn trajectory_prob<F: Scalar, G: Generator<F> + ?Sized>(g: &G, y: &[Token]) -> Result<F> {
    trajectory_log_prob(g, y).map(F::exp)
}

/// One root-start rollout of `H` sequential draws.
pub fn sample_trajectory<F, G, R>(g: &G, rng: &mut R) -> Completion
where
    F: Scalar,
    G: Generator<F> + ?Sized,
    R: Rng + ?Sized,
{
    let h = g.vocab().horizon();
    let mut tokens = Vec::with_capacity(h);
    for _ in 0..h {
        let a = g.conditional(&tokens).sample(rng);
        tokens.push(a);
    }
    Completion::from_raw(tokens)
}

/// Uniform next-token distribution at every prefix.
#[derive(Clone, Debug)]
pub struct UniformModel {
    vocab: VocabSpec,
}

impl UniformModel {
    pub fn new(vocab: VocabSpec) -> Self {
        Self { vocab }
    }
}

impl<F: Scalar> Generator<F> for UniformModel {
    fn vocab(&self) -> VocabSpec {
        self.vocab
    }
    fn conditional(&self, _p: &[Token]) -> NextTokenDist<F> {
        NextTokenDist::uniform(self.vocab.k())
    }
}

/// Explicit per-prefix table with a fallback distribution.
///
/// Used for hand-built models in tests and for perturbation experiments.
#[derive(Clone, Debug)]
pub struct TabularModel<F> {
    vocab: VocabSpec,
    default: NextTokenDist<F>,
    table: BTreeMap<Prefix, NextTokenDist<F>>,
}

impl<F: Scalar> TabularModel<F> {
    pub fn new(vocab: VocabSpec, default: NextTokenDist<F>) -> Result<Self> {
        if default.k() != vocab.k() {
            return Err(Error::InvalidParameter("default distribution has wrong arity".into()));
        }
        Ok(Self { vocab, default, table: BTreeMap::new() })
    }

    pub fn uniform(vocab: VocabSpec) -> Self {
        Self { vocab, default: NextTokenDist::uniform(vocab.k()), table: BTreeMap::new() }
    }

    /// Copies every conditional of `g` into an explicit table.
    pub fn snapshot<G: Generator<F> + ?Sized>(g: &G) -> Self {
        let vocab = g.vocab();
        let table = vocab
            .query_prefixes()
            .into_iter()
            .map(|p| {
                let d = g.conditional(&p);
                (p, d)
            })
            .collect();
        Self { vocab, default: NextTokenDist::uniform(vocab.k()), table }
    }

    pub fn set(&mut self, p: Prefix, dist: NextTokenDist<F>) -> Result<()> {
        self.vocab.check_query_prefix(&p)?;
        if dist.k() != self.vocab.k() {
            return Err(Error::InvalidParameter("distribution has wrong arity".into()));
        }
        self.table.insert(p, dist);
        Ok(())
    }
}

impl<F: Scalar> Generator<F> for TabularModel<F> {
    fn vocab(&self) -> VocabSpec {
        self.vocab
    }
    fn conditional(&self, p: &[Token]) -> NextTokenDist<F> {
        self.table.get(p).unwrap_or(&self.default).clone()
    }
}
