use rand::RngCore;

use crate::families::{BridgeInstance, PromptId};
use crate::policy::CompletionPolicy;
use crate::scalar::Scalar;

/// Outcome-reward channel: a query picks a prompt and a policy, a completion
/// is sampled from the policy and its reward is observed without noise.
pub struct RewardOracle<'a, F> {
    instance: &'a BridgeInstance<F>,
    queries: usize,
}

impl<'a, F: Scalar> RewardOracle<'a, F> {
    pub fn new(instance: &'a BridgeInstance<F>) -> Self {
        Self { instance, queries: 0 }
    }

    pub fn query(&mut self, prompt: PromptId, policy: &dyn CompletionPolicy<F>, rng: &mut dyn RngCore) -> F {
        self.queries += 1;
        let y = policy.sample(rng);
        self.instance.reward(prompt, &y)
    }

    pub fn queries(&self) -> usize {
        self.queries
    }
}
