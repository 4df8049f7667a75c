use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{BridgeInstance, PromptId};
use crate::generator::trajectory_prob;
use crate::policy::{CompletionPolicy, TablePolicy};
use crate::scalar::Scalar;
use crate::vocab::VocabSpec;

use super::check_cap;
use super::gibbs::gibbs_policy;

/// Exact value of the KL-regularised objective over the two-prompt space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Objective<F> {
    /// `η·hard + (1−η)·easy`
    pub value: F,
    pub hard_value: F,
    pub easy_value: F,
    pub support_violation: bool,
}

/// `E_π r − β·KL(π‖Q)` at the hard prompt, by enumeration.
/// Returns `(value, support_violation)`; a violation yields `−inf`.
pub fn hard_prompt_objective<F: Scalar>(
    instance: &BridgeInstance<F>,
    policy: &dyn CompletionPolicy<F>,
    cap: u128,
) -> Result<(F, bool)> {
    let setup = instance.setup();
    check_cap(&setup.vocab(), cap)?;
    let base = instance.hard_model();
    let beta = setup.beta();
    let mut value = F::zero();
    for y in setup.vocab().completions() {
        let p = policy.prob(&y);
        if !(p > F::zero()) {
            continue;
        }
        let q: F = trajectory_prob(&base, &y)?;
        if !(q > F::zero()) {
            return Ok((F::neg_infinity(), true));
        }
        value = value + p * (instance.reward(PromptId::Hard, &y) - beta * (p / q).ln());
    }
    Ok((value, false))
}

/// Easy-prompt term `−β·KL(π‖U)`; the reward is identically zero there.
fn easy_prompt_objective<F: Scalar>(
    instance: &BridgeInstance<F>,
    policy: &dyn CompletionPolicy<F>,
    cap: u128,
) -> Result<F> {
    let vocab = instance.setup().vocab();
    check_cap(&vocab, cap)?;
    let log_u = -(F::from_count(vocab.k()).ln() * F::from_count(vocab.horizon()));
    let kl: F = vocab
        .completions()
        .map(|y| policy.prob(&y))
        .filter(|&p| p > F::zero())
        .map(|p| p * (p.ln() - log_u))
        .sum();
    Ok(-instance.setup().beta() * kl)
}

/// `J_β(π)`. An `easy` of `None` means the policy keeps the base generator at
/// the easy prompt, whose term is then exactly zero.
pub fn evaluate_objective<F: Scalar>(
    instance: &BridgeInstance<F>,
    hard: &dyn CompletionPolicy<F>,
    easy: Option<&dyn CompletionPolicy<F>>,
    cap: u128,
) -> Result<Objective<F>> {
    let eta = instance.setup().eta();
    let (hard_value, support_violation) = hard_prompt_objective(instance, hard, cap)?;
    let easy_value = match easy {
        Some(p) => easy_prompt_objective(instance, p, cap)?,
        None => F::zero(),
    };
    Ok(Objective {
        value: eta * hard_value + (F::one() - eta) * easy_value,
        hard_value,
        easy_value,
        support_violation,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegretCheck<F> {
    /// `π(z_{s,b} | hard prompt)`
    pub target_mass: F,
    /// `J_β(π*) − J_β(π)` with the base generator kept at the easy prompt.
    pub gap: F,
    /// Mass at most 1/4 together with a gap at most `ηβ/4`.
    pub threshold_violated: bool,
}

/// Compares a hard-prompt policy against the Gibbs optimiser. Requires the
/// standard reward scale `R = β·log(4/q0)`.
pub fn regret_gap_check<F: Scalar>(
    instance: &BridgeInstance<F>,
    policy: &dyn CompletionPolicy<F>,
    cap: u128,
) -> Result<RegretCheck<F>> {
    let setup = instance.setup();
    let scale = setup.standard_reward_scale();
    if (setup.reward() - scale).abs() > F::lit(1e-9) * scale.abs().max(F::one()) {
        return Err(Error::Precondition(format!(
            "regret check needs the standard reward scale {scale}, got {}",
            setup.reward()
        )));
    }
    let optimum = gibbs_policy(instance).optimal_value();
    let value = evaluate_objective(instance, policy, None, cap)?.value;
    let target_mass = policy.prob(&instance.target());
    let gap = optimum - value;
    let quarter = F::lit(0.25);
    let threshold_violated = target_mass <= quarter && gap <= setup.eta() * setup.beta() * quarter;
    Ok(RegretCheck { target_mass, gap, threshold_violated })
}

/// Random table policy with flat-Dirichlet weights over all completions.
pub fn random_table_policy<F: Scalar, R: Rng + ?Sized>(vocab: VocabSpec, rng: &mut R) -> Result<TablePolicy<F>> {
    check_cap(&vocab, super::ENUMERATION_CAP)?;
    let n = vocab.num_completions() as usize;
    let weights: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = weights.iter().sum();
    TablePolicy::new(vocab, weights.iter().map(|w| F::lit(w / total)).collect())
}
