//! Enumeration-based certification runs: transcript-law TV of hidden-path
//! twins and the closed forms of the Gibbs optimiser.

use rand::Rng;

use crate::analysis::{
    gibbs_normalizer_by_enumeration, gibbs_policy, hard_prompt_objective, pathfull_law, policy_kl,
    random_table_policy, reachability, regret_gap_check, tv_distance, PrefixSet, ENUMERATION_CAP,
};
use crate::error::Result;
use crate::families::{BridgeSetup, HiddenPathModel};
use crate::policy::{completion_index, TablePolicy};
use crate::rng::stream;
use crate::vocab::{Prefix, Token, VocabSpec};

use super::config::ExperimentConfig;
use super::report::ExperimentReport;
use super::{run_cell, Outcome};

const TV_SLACK: f64 = 1e-10;

/// Every twin pair `(z, z')` with `z'` differing from `z` only in the last
/// token, one trial per ordered pair.
pub fn run_tv_certification(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(config.experiment.name(), config.seed);
    let mut index = 0;
    for &lambda in &config.lambda {
        for &h in &config.h {
            let vocab = VocabSpec::new(config.k, h)?;
            crate::analysis::check_cap(&vocab, ENUMERATION_CAP)?;
            let pairs: Vec<(Vec<Token>, Token)> = vocab
                .completions()
                .flat_map(|z| {
                    let last = z[h - 1];
                    vocab.tokens().filter(move |&t| t != last).map(move |t| (z.to_vec(), t))
                })
                .collect();
            let p_plus = HiddenPathModel::<f64>::new(vocab, lambda, vec![1; h])?.p_plus();
            let bound = p_plus.powi(h as i32 - 1);
            let cell = format!("H={h};lambda={lambda}");
            let records = run_cell(config, &cell, index, pairs.len(), |i, _| {
                let (z, last) = &pairs[i];
                let first = HiddenPathModel::<f64>::new(vocab, lambda, z.clone())?;
                let second = first.twin(*last)?;
                let tv = tv_distance(&pathfull_law(&first, ENUMERATION_CAP)?, &pathfull_law(&second, ENUMERATION_CAP)?);
                let tip = PrefixSet::new(&vocab, [Prefix::new(z[..h - 1].to_vec())])?;
                let reach: f64 = reachability(&first, &tip);
                Ok(Outcome {
                    success: tv <= reach + TV_SLACK && tv <= bound + TV_SLACK,
                    metric: Some(tv),
                    ..Outcome::default()
                })
            })?;
            index += 1;
            let worst = records.iter().filter_map(|r| r.metric).fold(0.0, f64::max);
            let summary = report.push_cell(&cell, records, Some(bound)).clone();
            report.check(
                format!("{cell}: TV <= p_plus^(H-1) for every twin pair"),
                summary.successes == summary.trials,
                format!("pairs={} worst_tv={worst} bound={bound}", summary.trials),
            );
        }
    }
    Ok(report)
}

const IDENTITY_TOL: f64 = 1e-10;
const CLOSED_FORM_TOL: f64 = 1e-12;

/// Random table policies against the Gibbs optimiser of one random bridge
/// instance per horizon. Odd trials mix in a point mass on the target so that
/// the target mass sweeps the whole unit interval.
pub fn run_gibbs_checks(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(config.experiment.name(), config.seed);
    let mut index = 0;
    for &lambda in &config.lambda {
        for &h in &config.h {
            let (d, l) = config.split(h)?;
            let mut rng = stream(config.seed, u64::MAX - index as u64);
            let scaffold = (0..d).map(|_| rng.random_range(1..=config.k as Token)).collect();
            let setup = BridgeSetup::<f64>::new(config.k, scaffold, l, [1, 2], lambda, config.eta, config.beta)?;
            let instance = setup.random_instance(&mut rng)?;
            let gibbs = gibbs_policy(&instance);
            let q0 = setup.q0();
            let beta = setup.beta();
            let log_z = gibbs.normalizer().ln();
            let target = completion_index(&setup.vocab(), &instance.target());
            let cell = format!("H={h};lambda={lambda};D={d};L={l}");
            let records = run_cell(config, &cell, index, config.trials, |i, rng| {
                let mut table = random_table_policy::<f64, _>(setup.vocab(), rng)?;
                if i % 2 == 1 {
                    let w: f64 = rng.random();
                    let mut probs: Vec<f64> = table.probs().iter().map(|p| (1.0 - w) * p).collect();
                    probs[target] += w;
                    table = TablePolicy::new(setup.vocab(), probs)?;
                }
                let (hard, _) = hard_prompt_objective(&instance, &table, ENUMERATION_CAP)?;
                let kl = policy_kl(&table, &gibbs, ENUMERATION_CAP)?.value;
                let identity_error = (hard - (beta * log_z - beta * kl)).abs();
                let regret = regret_gap_check(&instance, &table, ENUMERATION_CAP)?;
                Ok(Outcome {
                    success: identity_error <= IDENTITY_TOL && !regret.threshold_violated && regret.gap >= -IDENTITY_TOL,
                    metric: Some(regret.target_mass),
                    ..Outcome::default()
                })
            })?;
            index += 1;
            let low_mass = records
                .iter()
                .filter(|r| r.metric.is_some_and(|m| m <= 0.25))
                .count();
            let summary = report.push_cell(&cell, records, Some(config.eta * beta * (5.0 - q0).ln())).clone();
            let enumerated = gibbs_normalizer_by_enumeration(&instance, ENUMERATION_CAP)?;
            report.check(
                format!("{cell}: Z == 5 - q0"),
                (gibbs.normalizer() - (5.0 - q0)).abs() <= CLOSED_FORM_TOL
                    && (enumerated - (5.0 - q0)).abs() <= CLOSED_FORM_TOL,
                format!("closed={} enumerated={enumerated} 5-q0={}", gibbs.normalizer(), 5.0 - q0),
            );
            report.check(
                format!("{cell}: target mass == 4/(5-q0)"),
                (gibbs.target_mass() - 4.0 / (5.0 - q0)).abs() <= CLOSED_FORM_TOL,
                format!("mass={}", gibbs.target_mass()),
            );
            report.check(
                format!("{cell}: decomposition, optimality and regret threshold"),
                summary.successes == summary.trials,
                format!("{}/{} policies, {low_mass} with target mass <= 1/4", summary.successes, summary.trials),
            );
        }
    }
    Ok(report)
}
