//! Sampling-based recovery experiments: hidden-path scaling, the no-reset
//! baseline, sequence-score recovery and the bridge separation.

use rand::Rng;

use crate::algorithms::{
    bridge_posttrain, distinguish_no_reset_baseline, hidden_path_sample_size, recover_hidden_path,
    recover_hidden_path_seqscore_with, Guess,
};
use crate::analysis::{
    evaluate_objective, lower_bound_certificate, no_reset_success_ceiling, CertificateParams, ENUMERATION_CAP,
};
use crate::error::{Error, Result};
use crate::families::{BridgeSetup, HiddenPathModel};
use crate::oracles::{audit_discipline, OracleSession, RewardOracle};
use crate::vocab::{Token, VocabSpec};

use super::config::{ExperimentConfig, PaddingRule};
use super::report::{object_hash, ExperimentReport, Table};
use super::stats::margin3;
use super::{run_cell, Outcome};

fn cell_name(h: usize, lambda: f64) -> String {
    format!("H={h};lambda={lambda}")
}

pub fn run_hidden_path_scaling(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(config.experiment.name(), config.seed);
    let target = 1.0 - config.delta;
    let mut index = 0;
    let mut totals: Vec<(f64, usize, usize)> = Vec::new();
    for &lambda in &config.lambda {
        for &h in &config.h {
            let vocab = VocabSpec::new(config.k, h)?;
            let probe = HiddenPathModel::<f64>::new(vocab, lambda, vec![1; h])?;
            let m = hidden_path_sample_size(probe.gap(), h, config.k, config.delta)?;
            let cell = cell_name(h, lambda);
            let records = run_cell(config, &cell, index, config.trials, |_, rng| {
                let model = HiddenPathModel::<f64>::random(vocab, lambda, rng)?;
                let mut session = OracleSession::new(&model).strict(true);
                let run = recover_hidden_path(&mut session, model.gap(), config.delta, rng)?;
                if let Some(index) = audit_discipline(&run.trail).offending_index {
                    return Err(Error::DisciplineViolation { index });
                }
                Ok(Outcome {
                    success: run.recovered.as_ref() == Some(model.hidden_path()),
                    generator_queries: run.queries_used,
                    recovered_hash: run.recovered.as_ref().map_or(0, object_hash),
                    ..Outcome::default()
                })
            })?;
            index += 1;
            let exact_budget = records.iter().all(|r| r.generator_queries == h * m);
            let summary = report.push_cell(&cell, records, Some(target)).clone();
            let floor = target - margin3(target, summary.trials);
            report.check(
                format!("{cell}: queries == H*m"),
                exact_budget,
                format!("m={m}, H*m={}", h * m),
            );
            report.check(
                format!("{cell}: success >= 1-delta-3sigma"),
                summary.success_rate >= floor,
                format!("rate={} floor={floor}", summary.success_rate),
            );
            report.check(format!("{cell}: local-reset discipline"), true, "strict sessions, every trail audited");
            totals.push((lambda, h, h * m));
        }
    }
    for &(lambda, h, q) in &totals {
        if h < 10 {
            continue;
        }
        if let Some(&(_, _, q2)) = totals.iter().find(|t| t.0 == lambda && t.1 == 2 * h) {
            let ratio = q2 as f64 / q as f64;
            report.check(
                format!("lambda={lambda}: queries(H={})/queries(H={h}) <= 2.5", 2 * h),
                ratio <= 2.5,
                format!("ratio={ratio}"),
            );
        }
    }
    Ok(report)
}

/// Twin of `model` differing only in the last hidden token.
fn twin_of(model: &HiddenPathModel<f64>, k: usize) -> Result<HiddenPathModel<f64>> {
    let last = *model.hidden_path().last().expect("H >= 1");
    model.twin(last % k as Token + 1)
}

pub fn run_no_reset_hardness(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(config.experiment.name(), config.seed);
    let mut index = 0;
    for &lambda in &config.lambda {
        for &h in &config.h {
            let vocab = VocabSpec::new(config.k, h)?;
            for &q in &config.q {
                let cell = format!("{};q={q}", cell_name(h, lambda));
                let records = run_cell(config, &cell, index, config.trials, |_, rng| {
                    let first = HiddenPathModel::<f64>::random(vocab, lambda, rng)?;
                    let second = twin_of(&first, config.k)?;
                    let secret_second = rng.random_bool(0.5);
                    let world = if secret_second { &second } else { &first };
                    let mut session = OracleSession::new(world);
                    let guess = distinguish_no_reset_baseline(&first, &second, &mut session, q, rng)?;
                    Ok(Outcome {
                        success: (guess == Guess::Second) == secret_second,
                        generator_queries: session.ledger().total(),
                        ..Outcome::default()
                    })
                })?;
                index += 1;
                let p_plus = HiddenPathModel::<f64>::new(vocab, lambda, vec![1; h])?.p_plus();
                let ceiling = no_reset_success_ceiling(p_plus, h, q);
                let within_budget = records.iter().all(|r| r.generator_queries <= q);
                let summary = report.push_cell(&cell, records, Some(ceiling)).clone();
                let bound = ceiling + margin3(ceiling.min(1.0), summary.trials);
                report.check(
                    format!("{cell}: success <= ceiling+3sigma"),
                    summary.success_rate <= bound,
                    format!("rate={} ceiling={ceiling} bound={bound}", summary.success_rate),
                );
                report.check(format!("{cell}: at most q rollouts per trial"), within_budget, format!("q={q}"));
            }
        }
    }
    Ok(report)
}

fn padding(rule: PaddingRule, k: usize) -> impl FnMut(usize, usize) -> Vec<Token> {
    move |stage, len| {
        (0..len)
            .map(|j| match rule {
                PaddingRule::AllOnes => 1,
                PaddingRule::AllLast => k as Token,
                PaddingRule::Cyclic => ((stage + j) % k) as Token + 1,
                PaddingRule::Alternating => {
                    if j % 2 == 0 {
                        1
                    } else {
                        k as Token
                    }
                }
                PaddingRule::Hashed => (object_hash(&(stage, j)) % k as u64) as Token + 1,
            })
            .collect()
    }
}

pub fn run_seqscore_recovery(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(config.experiment.name(), config.seed);
    let mut index = 0;
    for &lambda in &config.lambda {
        for &h in &config.h {
            let vocab = VocabSpec::new(config.k, h)?;
            for &rule in &config.paddings {
                let cell = format!("{};padding={rule}", cell_name(h, lambda));
                let records = run_cell(config, &cell, index, config.trials, |_, rng| {
                    let model = HiddenPathModel::<f64>::random(vocab, lambda, rng)?;
                    let mut session = OracleSession::new(&model);
                    let run = recover_hidden_path_seqscore_with(&mut session, &mut padding(rule, config.k), rng)?;
                    Ok(Outcome {
                        success: run.recovered.as_ref() == Some(model.hidden_path()),
                        generator_queries: run.queries_used,
                        recovered_hash: run.recovered.as_ref().map_or(0, object_hash),
                        ..Outcome::default()
                    })
                })?;
                index += 1;
                let exact_budget = records.iter().all(|r| r.generator_queries == h * config.k);
                let summary = report.push_cell(&cell, records, Some(1.0)).clone();
                report.check(
                    format!("{cell}: every trial exact"),
                    summary.successes == summary.trials,
                    format!("{}/{}", summary.successes, summary.trials),
                );
                report.check(format!("{cell}: queries == H*K"), exact_budget, format!("H*K={}", h * config.k));
            }
        }
    }
    Ok(report)
}

pub fn run_bridge_separation(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(config.experiment.name(), config.seed);
    let target = 1.0 - config.delta;
    let mut index = 0;
    for &lambda in &config.lambda {
        for &h in &config.h {
            let (d, l) = config.split(h)?;
            let setup = BridgeSetup::<f64>::new(config.k, vec![1; d], l, [1, 2], lambda, config.eta, config.beta)?;
            let m = hidden_path_sample_size(setup.gap(), l, config.k, config.delta)?;
            let budget = (d + 1) + l * m;
            let optimum = config.eta * config.beta * (5.0 - setup.q0()).ln();
            let enumerable = setup.vocab().num_completions() <= ENUMERATION_CAP;
            let cell = format!("{};D={d};L={l}", cell_name(h, lambda));
            let records = run_cell(config, &cell, index, config.trials, |_, rng| {
                let instance = setup.random_instance(rng)?;
                let model = instance.hard_model();
                let mut session = OracleSession::new(&model).strict(true);
                let mut oracle = RewardOracle::new(&instance);
                let out = bridge_posttrain(&setup, &mut session, &mut oracle, config.delta, rng)?;
                if let Some(index) = audit_discipline(&out.trail).offending_index {
                    return Err(Error::DisciplineViolation { index });
                }
                let success = out.suffix == instance.suffix() && out.bit == instance.bit();
                let metric = if success && enumerable {
                    Some(evaluate_objective(&instance, &out.policy, None, ENUMERATION_CAP)?.value)
                } else {
                    None
                };
                Ok(Outcome {
                    success,
                    generator_queries: out.generator_queries,
                    reward_queries: out.reward_queries,
                    recovered_hash: object_hash(&(&out.suffix, out.bit)),
                    metric,
                })
            })?;
            index += 1;
            let exact_budget = records.iter().all(|r| r.generator_queries == budget);
            let one_reward = records.iter().all(|r| r.reward_queries == 1);
            let worst_value_error = records
                .iter()
                .filter_map(|r| r.metric)
                .map(|j| (j - optimum).abs())
                .fold(0.0, f64::max);
            let summary = report.push_cell(&cell, records, Some(target)).clone();
            let floor = target - margin3(target, summary.trials);
            report.check(
                format!("{cell}: success >= 1-delta-3sigma"),
                summary.success_rate >= floor,
                format!("rate={} floor={floor}", summary.success_rate),
            );
            report.check(
                format!("{cell}: generator queries == (D+1)+L*m"),
                exact_budget,
                format!("m={m}, budget={budget}"),
            );
            report.check(format!("{cell}: one reward query"), one_reward, "per trial");
            if enumerable {
                report.check(
                    format!("{cell}: returned objective == eta*beta*log(5-q0)"),
                    worst_value_error <= 1e-9,
                    format!("optimum={optimum} worst_error={worst_value_error}"),
                );
            }
        }
    }

    let q_r = config.reward_queries as f64;
    let mut table = Table {
        name: "certificate".into(),
        header: ["H", "D", "L", "lambda", "q_g", "q_r", "certificate"].map(String::from).to_vec(),
        rows: Vec::new(),
    };
    for &lambda in &config.lambda {
        for &h in &config.certificate_h {
            let params = CertificateParams::balanced(config.k, lambda, h)?;
            for power in 1..=3 {
                let q_g = (h as f64).powi(power);
                let value = lower_bound_certificate(&params, q_g, q_r)?;
                table.rows.push(
                    [
                        h.to_string(),
                        params.d.to_string(),
                        params.l.to_string(),
                        lambda.to_string(),
                        q_g.to_string(),
                        q_r.to_string(),
                        value.to_string(),
                    ]
                    .to_vec(),
                );
            }
        }
        for &h in &config.certificate_check_h {
            let params = CertificateParams::balanced(config.k, lambda, h)?;
            let q_g = (h as f64).powi(3);
            let value = lower_bound_certificate(&params, q_g, q_r)?;
            report.check(
                format!("certificate(H={h}, q_g=H^3, q_r={q_r}, lambda={lambda}) < 1/3"),
                value < 1.0 / 3.0,
                format!("value={value}"),
            );
        }
    }
    report.tables.push(table);
    Ok(report)
}
