use rand::{Rng, RngCore};

use crate::error::Result;
use crate::families::{BridgeInstance, HardPromptModel, PromptId};
use crate::generator::{sample_trajectory, trajectory_prob, Generator};
use crate::policy::CompletionPolicy;
use crate::scalar::Scalar;
use crate::vocab::{Completion, Token, VocabSpec};

use super::check_cap;

/// Exact maximiser of the KL-regularised objective at the hard prompt:
/// `π*(y) = Q(y)·exp(r(y)/β)/Z`. Easy prompts keep the base generator.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsPolicy<F> {
    instance: BridgeInstance<F>,
    base: HardPromptModel<F>,
    target: Completion,
    /// Base mass of the rewarded completion.
    base_target_mass: F,
    /// `exp(R/β)`
    tilt: F,
    normalizer: F,
}

/// Builds the optimiser with the closed-form normaliser
/// `Z = 1 − q0 + q0·exp(R/β)`.
pub fn gibbs_policy<F: Scalar>(instance: &BridgeInstance<F>) -> GibbsPolicy<F> {
    let setup = instance.setup();
    let base = instance.hard_model();
    let target = instance.target();
    let q0 = trajectory_prob(&base, &target).expect("target has length H");
    let tilt = (setup.reward() / setup.beta()).exp();
    let normalizer = F::one() - q0 + q0 * tilt;
    GibbsPolicy { instance: instance.clone(), base, target, base_target_mass: q0, tilt, normalizer }
}

/// `Σ_y Q(y)·exp(r(y)/β)` over all of `Σ^H`.
pub fn gibbs_normalizer_by_enumeration<F: Scalar>(instance: &BridgeInstance<F>, cap: u128) -> Result<F> {
    let setup = instance.setup();
    check_cap(&setup.vocab(), cap)?;
    let base = instance.hard_model();
    Ok(setup
        .vocab()
        .completions()
        .map(|y| {
            let q: F = trajectory_prob(&base, &y).expect("enumerated completion");
            q * (instance.reward(PromptId::Hard, &y) / setup.beta()).exp()
        })
        .sum())
}

impl<F: Scalar> GibbsPolicy<F> {
    pub fn instance(&self) -> &BridgeInstance<F> {
        &self.instance
    }

    pub fn normalizer(&self) -> F {
        self.normalizer
    }

    pub fn target(&self) -> &Completion {
        &self.target
    }

    /// `π*(z_{s,b}) = q0·exp(R/β)/Z`.
    pub fn target_mass(&self) -> F {
        self.base_target_mass * self.tilt / self.normalizer
    }

    /// Optimal hard-prompt value `β·log Z`.
    pub fn hard_prompt_value(&self) -> F {
        self.instance.setup().beta() * self.normalizer.ln()
    }

    /// Optimal objective `η·β·log Z`; easy prompts contribute zero.
    pub fn optimal_value(&self) -> F {
        self.instance.setup().eta() * self.hard_prompt_value()
    }
}

impl<F: Scalar> CompletionPolicy<F> for GibbsPolicy<F> {
    fn vocab(&self) -> VocabSpec {
        self.base.vocab()
    }

    fn prob(&self, y: &[Token]) -> F {
        let q: F = trajectory_prob(&self.base, y).unwrap_or(F::zero());
        if *y == self.target[..] {
            q * self.tilt / self.normalizer
        } else {
            q / self.normalizer
        }
    }

    /// Target with probability `π*(z)`, otherwise a base draw conditioned
    /// away from the target (by rejection).
    fn sample(&self, rng: &mut dyn RngCore) -> Completion {
        if rng.random::<f64>() < self.target_mass().as_f64() {
            return self.target.clone();
        }
        loop {
            let y = sample_trajectory(&self.base, rng);
            if y != self.target {
                return y;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ENUMERATION_CAP;
    use crate::families::BridgeSetup;
    use crate::policy::{GeneratorPolicy, TablePolicy};

    fn instance() -> BridgeInstance<f64> {
        BridgeSetup::new(2, vec![1, 2], 2, [1, 2], 1.0, 0.5, 0.7)
            .unwrap()
            .instance(vec![2, 1], 1)
            .unwrap()
    }

    #[test]
    fn standard_scale_normalizer() {
        let inst = instance();
        let g = gibbs_policy(&inst);
        let q0 = inst.setup().q0();
        assert!((g.normalizer() - (5.0 - q0)).abs() < 1e-12);
        let enumerated = gibbs_normalizer_by_enumeration(&inst, ENUMERATION_CAP).unwrap();
        assert!((g.normalizer() - enumerated).abs() < 1e-12);
        assert!((g.target_mass() - 4.0 / (5.0 - q0)).abs() < 1e-12);
        let table = TablePolicy::from_policy(&g).unwrap();
        assert!((table.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_reward_gives_base() {
        let setup = BridgeSetup::new(2, vec![1, 2], 2, [1, 2], 1.0, 0.5, 0.7).unwrap().with_reward(0.0).unwrap();
        let inst = setup.instance(vec![2, 1], 0).unwrap();
        let g = gibbs_policy(&inst);
        let base = GeneratorPolicy::new(inst.hard_model());
        for y in setup.vocab().completions() {
            let (a, b): (f64, f64) = (g.prob(&y), base.prob(&y));
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_matches_target_mass() {
        let inst = instance();
        let g = gibbs_policy(&inst);
        let mut rng = crate::rng::seeded(3);
        let n = 20_000;
        let hits = (0..n).filter(|_| g.sample(&mut rng) == *g.target()).count();
        let p = g.target_mass();
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() <= 3.0 * sigma);
    }
}
