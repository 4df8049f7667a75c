//! Prompt-conditioned post-training instance: a known scaffold `v`, a hidden
//! suffix `s` and a hidden reward bit `b`, with target completion `v·s·τ_b`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::NextTokenDist;
use crate::error::{Error, Result};
use crate::families::hidden_path::signal_probs;
use crate::generator::{Generator, UniformModel};
use crate::scalar::Scalar;
use crate::vocab::{Completion, Token, VocabSpec};

/// The two-point prompt space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptId {
    Hard,
    Easy,
}

/// Everything about a bridge instance that is public to a learner.
#[derive(Clone, Debug, PartialEq)]
pub struct BridgeSetup<F> {
    vocab: VocabSpec,
    scaffold: Vec<Token>,
    suffix_len: usize,
    terminals: [Token; 2],
    lambda: F,
    eta: F,
    beta: F,
    reward: F,
    p_plus: F,
    p_minus: F,
}

impl<F: Scalar> BridgeSetup<F> {
    /// Builds a setup with the reward scale `R = β·log(4/q0)`.
    pub fn new(
        k: usize,
        scaffold: Vec<Token>,
        suffix_len: usize,
        terminals: [Token; 2],
        lambda: F,
        eta: F,
        beta: F,
    ) -> Result<Self> {
        let d = scaffold.len();
        if d < 1 || suffix_len < 1 {
            return Err(Error::InvalidParameter(format!(
                "scaffold length D={d} and suffix length L={suffix_len} must both be >= 1"
            )));
        }
        let vocab = VocabSpec::new(k, d + suffix_len + 1)?;
        for &t in scaffold.iter().chain(terminals.iter()) {
            vocab.check_token(t)?;
        }
        if terminals[0] == terminals[1] {
            return Err(Error::InvalidParameter("terminal tokens must be distinct".into()));
        }
        if !(lambda > F::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("signal lambda={lambda} must be > 0")));
        }
        if !(eta > F::zero() && eta <= F::one()) {
            return Err(Error::InvalidParameter(format!("hard-prompt mass eta={eta} must lie in (0,1]")));
        }
        if !(beta > F::zero()) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("KL coefficient beta={beta} must be > 0")));
        }
        let (p_plus, p_minus) = signal_probs(k, lambda);
        let mut setup = Self {
            vocab,
            scaffold,
            suffix_len,
            terminals,
            lambda,
            eta,
            beta,
            reward: F::zero(),
            p_plus,
            p_minus,
        };
        setup.reward = setup.standard_reward_scale();
        Ok(setup)
    }

    /// Same setup with an explicit reward scale.
    pub fn with_reward(mut self, reward: F) -> Result<Self> {
        if !(reward >= F::zero()) || !reward.is_finite() {
            return Err(Error::InvalidParameter(format!("reward scale {reward} must be >= 0")));
        }
        self.reward = reward;
        Ok(self)
    }

    pub fn vocab(&self) -> VocabSpec {
        self.vocab
    }
    pub fn scaffold(&self) -> &[Token] {
        &self.scaffold
    }
    pub fn scaffold_len(&self) -> usize {
        self.scaffold.len()
    }
    pub fn suffix_len(&self) -> usize {
        self.suffix_len
    }
    pub fn terminals(&self) -> [Token; 2] {
        self.terminals
    }
    pub fn lambda(&self) -> F {
        self.lambda
    }
    pub fn eta(&self) -> F {
        self.eta
    }
    pub fn beta(&self) -> F {
        self.beta
    }
    pub fn reward(&self) -> F {
        self.reward
    }
    pub fn p_plus(&self) -> F {
        self.p_plus
    }
    pub fn p_minus(&self) -> F {
        self.p_minus
    }
    pub fn gap(&self) -> F {
        self.p_plus - self.p_minus
    }

    /// Base mass of any target completion, `q0 = p_plus^(D+L)/K`.
    pub fn q0(&self) -> F {
        self.p_plus.powi((self.scaffold.len() + self.suffix_len) as i32) / F::from_count(self.vocab.k())
    }

    /// `β·log(4/q0)`.
    pub fn standard_reward_scale(&self) -> F {
        self.beta * (F::lit(4.0) / self.q0()).ln()
    }

    /// Number of candidate targets, `N = 2·K^L`.
    pub fn num_targets(&self) -> u128 {
        2 * (self.vocab.k() as u128).pow(self.suffix_len as u32)
    }

    /// Binds the hidden state.
    pub fn instance(&self, suffix: Vec<Token>, bit: u8) -> Result<BridgeInstance<F>> {
        if suffix.len() != self.suffix_len {
            return Err(Error::InvalidParameter(format!(
                "suffix has length {}, expected {}",
                suffix.len(),
                self.suffix_len
            )));
        }
        for &t in &suffix {
            self.vocab.check_token(t)?;
        }
        if bit > 1 {
            return Err(Error::InvalidParameter(format!("reward bit {bit} must be 0 or 1")));
        }
        let mut path = self.scaffold.clone();
        path.extend_from_slice(&suffix);
        Ok(BridgeInstance { setup: self.clone(), suffix, bit, path })
    }

    pub fn random_instance<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BridgeInstance<F>> {
        let suffix = (0..self.suffix_len)
            .map(|_| rng.random_range(1..=self.vocab.k() as Token))
            .collect();
        let bit = rng.random_range(0..=1u8);
        self.instance(suffix, bit)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BridgeInstance<F> {
    setup: BridgeSetup<F>,
    suffix: Vec<Token>,
    bit: u8,
    /// `u = v·s`
    path: Vec<Token>,
}

impl<F: Scalar> BridgeInstance<F> {
    pub fn setup(&self) -> &BridgeSetup<F> {
        &self.setup
    }
    pub fn suffix(&self) -> &[Token] {
        &self.suffix
    }
    pub fn bit(&self) -> u8 {
        self.bit
    }

    /// `z_{s,b} = v·s·τ_b`.
    pub fn target(&self) -> Completion {
        let mut tokens = self.path.clone();
        tokens.push(self.setup.terminals[self.bit as usize]);
        Completion::from_raw(tokens)
    }

    pub fn hard_model(&self) -> HardPromptModel<F> {
        HardPromptModel {
            vocab: self.setup.vocab,
            path: self.path.clone(),
            p_plus: self.setup.p_plus,
            p_minus: self.setup.p_minus,
        }
    }

    /// The easy-prompt generator, uniform at every prefix.
    pub fn easy_model(&self) -> UniformModel {
        UniformModel::new(self.setup.vocab)
    }

    pub fn dist(&self, prompt: PromptId, p: &[Token]) -> Result<NextTokenDist<F>> {
        match prompt {
            PromptId::Hard => self.hard_model().next_token_dist(p),
            PromptId::Easy => self.easy_model().next_token_dist(p),
        }
    }

    /// `r(x, y) = R·1{x = hard, y = z_{s,b}}`.
    pub fn reward(&self, prompt: PromptId, y: &[Token]) -> F {
        let hit = prompt == PromptId::Hard
            && y.len() == self.path.len() + 1
            && y[..self.path.len()] == self.path[..]
            && y[self.path.len()] == self.setup.terminals[self.bit as usize];
        if hit {
            self.setup.reward
        } else {
            F::zero()
        }
    }
}

/// Hard-prompt base generator: hidden-path rule along `v·s` for the first
/// `D+L` steps, uniform at the final step and off the path.
#[derive(Clone, Debug, PartialEq)]
pub struct HardPromptModel<F> {
    vocab: VocabSpec,
    path: Vec<Token>,
    p_plus: F,
    p_minus: F,
}

impl<F: Scalar> Generator<F> for HardPromptModel<F> {
    fn vocab(&self) -> VocabSpec {
        self.vocab
    }

    fn conditional(&self, p: &[Token]) -> NextTokenDist<F> {
        let k = self.vocab.k();
        if p.len() < self.path.len() && self.path[..p.len()] == *p {
            let mut probs = vec![self.p_minus; k];
            probs[self.path[p.len()] as usize - 1] = self.p_plus;
            NextTokenDist::from_raw(probs)
        } else {
            NextTokenDist::uniform(k)
        }
    }
}
