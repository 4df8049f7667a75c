//! Leader-trie access matrix: top-token, logit and sampling interfaces on
//! random tries.

use rand::Rng;

use crate::algorithms::{leader_trie_sample_size, recover_leader_trie_logit, recover_leader_trie_sample};
use crate::error::Result;
use crate::families::{LeaderTrie, LeaderTrieConstants, LeaderTrieModel, LEADER};
use crate::generator::Generator;
use crate::oracles::{NoisePolicy, OracleSession, TopReply};
use crate::rng::StreamRng;
use crate::vocab::VocabSpec;

use super::config::{ExperimentConfig, NoiseMode, TrieInterface};
use super::report::{object_hash, ExperimentReport};
use super::stats::margin3;
use super::{run_cell, Outcome};

/// Queries the top token at every prefix shallower than `H` (shortest first)
/// and guesses the world whose predicted replies match; a coin flip when both
/// match. Returns the guess and the number of non-leader replies seen.
fn prefix_top_guess(
    first: &LeaderTrieModel<f64>,
    second: &LeaderTrieModel<f64>,
    world: &LeaderTrieModel<f64>,
    rng: &mut StreamRng,
) -> Result<(bool, usize, usize)> {
    let vocab = world.vocab();
    let mut session = OracleSession::new(world).strict(true);
    let (mut fits_first, mut fits_second) = (true, true);
    let mut off_leader = 0;
    for p in vocab.query_prefixes() {
        let reply = session.query_prefix_top(&p)?;
        if reply != TopReply::Token(LEADER) {
            off_leader += 1;
        }
        let predict = |m: &LeaderTrieModel<f64>| m.conditional(&p).unique_argmax().map_or(TopReply::Bottom, TopReply::Token);
        fits_first &= predict(first) == reply;
        fits_second &= predict(second) == reply;
    }
    let guess_second = match (fits_first, fits_second) {
        (true, false) => false,
        (false, true) => true,
        _ => rng.random_bool(0.5),
    };
    Ok((guess_second, off_leader, session.ledger().total()))
}

fn noise_for(config: &ExperimentConfig, constants: &LeaderTrieConstants<f64>) -> NoisePolicy<f64> {
    if config.xi == 0.0 {
        return NoisePolicy::Exact;
    }
    match config.noise {
        NoiseMode::Uniform => NoisePolicy::Uniform { xi: config.xi },
        NoiseMode::Adversarial => NoisePolicy::TowardThreshold { xi: config.xi, threshold: constants.logit_threshold() },
    }
}

pub fn run_leader_trie_matrix(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(config.experiment.name(), config.seed);
    let constants = LeaderTrieConstants::<f64>::new(config.k);
    let mut index = 0;
    for &h in &config.h {
        let vocab = VocabSpec::new(config.k, h)?;
        let full = (1usize << h) - 1;
        for &interface in &config.interfaces {
            let cell = format!("H={h};interface={interface}");
            match interface {
                TrieInterface::PrefixTop => {
                    let records = run_cell(config, &cell, index, config.trials, |_, rng| {
                        let first = LeaderTrie::random(vocab, rng)?;
                        let second = loop {
                            let t = LeaderTrie::random(vocab, rng)?;
                            if t != first {
                                break t;
                            }
                        };
                        let (first, second) = (LeaderTrieModel::new(first), LeaderTrieModel::new(second));
                        let secret_second = rng.random_bool(0.5);
                        let world = if secret_second { &second } else { &first };
                        let (guess_second, off_leader, queries) = prefix_top_guess(&first, &second, world, rng)?;
                        Ok(Outcome {
                            success: guess_second == secret_second,
                            generator_queries: queries,
                            metric: Some(off_leader as f64),
                            ..Outcome::default()
                        })
                    })?;
                    let all_leader = records.iter().all(|r| r.metric == Some(0.0));
                    let summary = report.push_cell(&cell, records, Some(0.5)).clone();
                    let band = margin3(0.5, summary.trials);
                    report.check(
                        format!("{cell}: success within 3sigma of 1/2"),
                        (summary.success_rate - 0.5).abs() <= band,
                        format!("rate={} band={band}", summary.success_rate),
                    );
                    report.check(format!("{cell}: every reply is the leader"), all_leader, "all prefixes of depth < H");
                }
                TrieInterface::Logit => {
                    let noise = noise_for(config, &constants);
                    let records = run_cell(config, &cell, index, config.trials, |_, rng| {
                        let model = LeaderTrieModel::<f64>::new(LeaderTrie::random(vocab, rng)?);
                        let mut session = OracleSession::new(&model).strict(true).with_noise(noise);
                        let run = recover_leader_trie_logit(&mut session, rng)?;
                        Ok(Outcome {
                            success: run.recovered.as_ref() == Some(model.trie()),
                            generator_queries: run.queries_used,
                            recovered_hash: run.recovered.as_ref().map_or(0, object_hash),
                            ..Outcome::default()
                        })
                    })?;
                    let exact_budget = records.iter().all(|r| r.generator_queries == full);
                    let summary = report.push_cell(&cell, records, Some(1.0)).clone();
                    report.check(
                        format!("{cell}: every trie recovered exactly"),
                        summary.successes == summary.trials,
                        format!("{}/{} with xi={} ({})", summary.successes, summary.trials, config.xi, config.noise),
                    );
                    report.check(format!("{cell}: queries == |I(T)|"), exact_budget, format!("|I(T)|={full}"));
                }
                TrieInterface::Sample => {
                    let budget = config.budget.unwrap_or(full);
                    let m = leader_trie_sample_size(config.k, budget, config.delta)?;
                    let records = run_cell(config, &cell, index, config.trials, |_, rng| {
                        let model = LeaderTrieModel::<f64>::new(LeaderTrie::random(vocab, rng)?);
                        let mut session = OracleSession::new(&model).strict(true);
                        let run = recover_leader_trie_sample(&mut session, budget, config.delta, rng)?;
                        Ok(Outcome {
                            success: run.recovered.as_ref() == Some(model.trie()),
                            generator_queries: run.queries_used,
                            recovered_hash: run.recovered.as_ref().map_or(0, object_hash),
                            ..Outcome::default()
                        })
                    })?;
                    let within = records.iter().all(|r| r.generator_queries <= budget * m);
                    let target = 1.0 - config.delta;
                    let summary = report.push_cell(&cell, records, Some(target)).clone();
                    let floor = target - margin3(target, summary.trials);
                    report.check(
                        format!("{cell}: success >= 1-delta-3sigma"),
                        summary.success_rate >= floor,
                        format!("rate={} floor={floor}", summary.success_rate),
                    );
                    report.check(format!("{cell}: queries <= S*m"), within, format!("S={budget} m={m}"));
                }
            }
            index += 1;
        }
    }
    Ok(report)
}
