use rand::Rng;

use crate::dist::NextTokenDist;
use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::scalar::Scalar;
use crate::vocab::{Completion, Token, VocabSpec};

/// On-path probabilities `(p_plus, p_minus)` for signal `lambda`:
/// `p_plus = e^λ/(e^λ+K−1)`, `p_minus = 1/(e^λ+K−1)`.
pub fn signal_probs<F: Scalar>(k: usize, lambda: F) -> (F, F) {
    let rivals = F::from_count(k - 1);
    // divide through by e^λ so large λ does not overflow
    let p_plus = F::one() / (F::one() + rivals * (-lambda).exp());
    let p_minus = (-lambda).exp() / (F::one() + rivals * (-lambda).exp());
    (p_plus, p_minus)
}

/// Generator that mildly favours one hidden chain `z` and is uniform off it.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenPathModel<F> {
    vocab: VocabSpec,
    lambda: F,
    z: Completion,
    p_plus: F,
    p_minus: F,
}

impl<F: Scalar> HiddenPathModel<F> {
    /// `lambda = 0` is accepted and yields the uniform model; recovery
    /// guarantees need `lambda > 0`.
    pub fn new(vocab: VocabSpec, lambda: F, z: Vec<Token>) -> Result<Self> {
        if !(lambda >= F::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("signal lambda={lambda} must be finite and >= 0")));
        }
        let z = Completion::new(&vocab, z)?;
        let (p_plus, p_minus) = signal_probs(vocab.k(), lambda);
        Ok(Self { vocab, lambda, z, p_plus, p_minus })
    }

    /// Hidden path drawn uniformly from `Σ^H`.
    pub fn random<R: Rng + ?Sized>(vocab: VocabSpec, lambda: F, rng: &mut R) -> Result<Self> {
        let z = (0..vocab.horizon())
            .map(|_| rng.random_range(1..=vocab.k() as Token))
            .collect();
        Self::new(vocab, lambda, z)
    }

    /// Same model with the last hidden token replaced by `last`.
    pub fn twin(&self, last: Token) -> Result<Self> {
        let mut z = self.z.to_vec();
        *z.last_mut().expect("H >= 1") = last;
        if z[..] == self.z[..] {
            return Err(Error::InvalidParameter("twin must differ in the last token".into()));
        }
        Self::new(self.vocab, self.lambda, z)
    }

    pub fn hidden_path(&self) -> &Completion {
        &self.z
    }

    pub fn lambda(&self) -> F {
        self.lambda
    }

    pub fn p_plus(&self) -> F {
        self.p_plus
    }

    pub fn p_minus(&self) -> F {
        self.p_minus
    }

    /// `Δ = p_plus − p_minus`.
    pub fn gap(&self) -> F {
        self.p_plus - self.p_minus
    }
}

impl<F: Scalar> Generator<F> for HiddenPathModel<F> {
    fn vocab(&self) -> VocabSpec {
        self.vocab
    }

    fn conditional(&self, p: &[Token]) -> NextTokenDist<F> {
        let k = self.vocab.k();
        if p.len() < self.z.len() && self.z[..p.len()] == *p {
            let mut probs = vec![self.p_minus; k];
            probs[self.z[p.len()] as usize - 1] = self.p_plus;
            NextTokenDist::from_raw(probs)
        } else {
            NextTokenDist::uniform(k)
        }
    }
}
