//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Tolerances and seeds are pinned below.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use prefix_oracle::algorithms::recover_leader_trie_logit;
use prefix_oracle::experiments::{
    emit_report, run_experiment, ExperimentConfig, ExperimentName, ExperimentReport, NoiseMode, PaddingRule,
    TrieInterface,
};
use prefix_oracle::families::{LeaderTrie, LeaderTrieConstants, LeaderTrieModel, LEADER};
use prefix_oracle::oracles::{NoisePolicy, OracleSession, TopReply};
use prefix_oracle::rng::seeded;
use prefix_oracle::VocabSpec;

const MASTER_SEED: u64 = 20_240_601;

const TV_RUNTIME: Duration = Duration::from_secs(1);
const SHORT_RUNTIME: Duration = Duration::from_secs(5);
const MEDIUM_RUNTIME: Duration = Duration::from_secs(10);
const LONG_RUNTIME: Duration = Duration::from_secs(30);

type Criterion = (usize, &'static str, Box<dyn FnOnce() -> Verdict>);

struct Verdict {
    passed: bool,
    detail: String,
}

fn config(name: ExperimentName, edit: impl FnOnce(&mut ExperimentConfig)) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(name);
    c.seed = MASTER_SEED;
    edit(&mut c);
    c.validate().expect("acceptance config is valid");
    c
}

fn gamma_lead() -> f64 {
    LeaderTrieConstants::<f64>::new(3).log_margin()
}

/// Experiment configs behind each criterion, in criterion order.
fn criterion_configs(n: usize) -> Vec<ExperimentConfig> {
    use ExperimentName::*;
    match n {
        1 => vec![config(TvCertification, |c| {
            c.k = 2;
            c.h = vec![2, 3, 4];
            c.lambda = vec![0.5, 1.0, 2.0];
        })],
        2 => vec![config(HiddenPathScaling, |c| {
            c.k = 2;
            c.h = vec![10];
            c.lambda = vec![1.0];
            c.delta = 0.1;
            c.trials = 500;
        })],
        3 => vec![config(LeaderTrieMatrix, |c| {
            c.k = 3;
            c.h = vec![4];
            c.interfaces = vec![TrieInterface::PrefixTop];
            c.trials = 1000;
        })],
        4 => [0.0, 0.99 * gamma_lead()]
            .into_iter()
            .map(|xi| {
                config(LeaderTrieMatrix, |c| {
                    c.k = 3;
                    c.h = vec![4];
                    c.interfaces = vec![TrieInterface::Logit];
                    c.xi = xi;
                    c.noise = NoiseMode::Adversarial;
                    c.trials = 100;
                })
            })
            .collect(),
        5 => vec![config(LeaderTrieMatrix, |c| {
            c.k = 3;
            c.h = vec![3];
            c.interfaces = vec![TrieInterface::Sample];
            c.delta = 0.1;
            c.budget = None;
            c.trials = 200;
        })],
        6 => vec![config(SeqscoreRecovery, |c| {
            c.k = 3;
            c.h = vec![5];
            c.trials = 50;
            c.paddings = vec![
                PaddingRule::AllOnes,
                PaddingRule::AllLast,
                PaddingRule::Cyclic,
                PaddingRule::Alternating,
                PaddingRule::Hashed,
            ];
        })],
        7 => vec![config(GibbsChecks, |c| {
            c.k = 2;
            c.h = vec![3];
            c.d = Some(1);
            c.l = Some(1);
            c.lambda = vec![1.0];
            c.eta = 0.5;
            c.beta = 1.0;
            c.trials = 1000;
        })],
        8 => vec![config(BridgeSeparation, |c| {
            c.k = 2;
            c.h = vec![8];
            c.d = Some(3);
            c.l = Some(4);
            c.lambda = vec![1.0];
            c.delta = 0.1;
            c.eta = 0.5;
            c.beta = 1.0;
            c.trials = 300;
            c.certificate_h = vec![];
            c.certificate_check_h = vec![];
        })],
        9 => vec![config(BridgeSeparation, |c| {
            c.k = 2;
            c.h = vec![9];
            c.lambda = vec![1.0];
            c.delta = 0.1;
            c.trials = 300;
            c.reward_queries = 1;
            c.certificate_h = vec![21];
            c.certificate_check_h = vec![21];
        })],
        _ => Vec::new(),
    }
}

fn run_all(configs: &[ExperimentConfig]) -> Vec<ExperimentReport> {
    configs.iter().map(|c| run_experiment(c).expect("experiment runs")).collect()
}

fn summarize(reports: &[ExperimentReport]) -> (bool, String) {
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| r.checks.iter())
        .filter(|c| !c.passed)
        .map(|c| format!("{} [{}]", c.name, c.detail))
        .collect();
    let total: usize = reports.iter().map(|r| r.checks.len()).sum();
    if failed.is_empty() {
        (true, format!("{total} checks pass"))
    } else {
        (false, format!("{} of {total} checks fail: {}", failed.len(), failed.join("; ")))
    }
}

fn with_runtime(limit: Duration, f: impl FnOnce() -> Verdict) -> Verdict {
    let start = Instant::now();
    let mut v = f();
    let elapsed = start.elapsed();
    if elapsed >= limit {
        v.passed = false;
    }
    v.detail = format!("{}; {:.2?} (limit {:?})", v.detail, elapsed, limit);
    v
}

fn experiment_criterion(n: usize) -> Verdict {
    let (passed, detail) = summarize(&run_all(&criterion_configs(n)));
    Verdict { passed, detail }
}

/// Criterion 3 adds an exhaustive look at every reply of 20 random tries.
fn criterion_3() -> Verdict {
    let (mut passed, mut detail) = summarize(&run_all(&criterion_configs(3)));
    let vocab = VocabSpec::new(3, 4).unwrap();
    let mut rng = seeded(MASTER_SEED);
    let mut replies = 0;
    for _ in 0..20 {
        let model = LeaderTrieModel::<f64>::new(LeaderTrie::random(vocab, &mut rng).unwrap());
        let mut session = OracleSession::new(&model).strict(true);
        for p in vocab.query_prefixes() {
            replies += 1;
            passed &= session.query_prefix_top(&p).unwrap() == TopReply::Token(LEADER);
        }
    }
    detail.push_str(&format!("; {replies} top replies over 20 tries all leader: {passed}"));
    Verdict { passed, detail }
}

/// Criterion 4 adds a constructed failure above the noise threshold.
fn criterion_4() -> Verdict {
    let (mut passed, mut detail) = summarize(&run_all(&criterion_configs(4)));
    let vocab = VocabSpec::new(3, 4).unwrap();
    let constants = LeaderTrieConstants::<f64>::new(3);
    let noise = NoisePolicy::TowardThreshold { xi: 1.5 * gamma_lead(), threshold: constants.logit_threshold() };
    let mut rng = seeded(MASTER_SEED);
    let failures = (0..10)
        .filter(|_| {
            let model = LeaderTrieModel::<f64>::new(LeaderTrie::random(vocab, &mut rng).unwrap());
            let mut session = OracleSession::new(&model).strict(true).with_noise(noise);
            let run = recover_leader_trie_logit(&mut session, &mut rng).unwrap();
            run.recovered.as_ref() != Some(model.trie())
        })
        .count();
    passed &= failures >= 1;
    detail.push_str(&format!("; xi=1.5*gamma_lead adversarial: {failures}/10 constructed instances fail"));
    Verdict { passed, detail }
}

/// Every experiment config, run twice and written to disk, gives identical bytes.
fn criterion_10() -> Verdict {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut files = 0;
    let mut mismatched = Vec::new();
    for n in 1..=9 {
        for (i, c) in criterion_configs(n).iter().enumerate() {
            let paths = [dir.path().join(format!("{n}_{i}_a.csv")), dir.path().join(format!("{n}_{i}_b.csv"))];
            for p in &paths {
                emit_report(&run_experiment(c).expect("experiment runs"), p).expect("write report");
            }
            files += 1;
            if std::fs::read(&paths[0]).unwrap() != std::fs::read(&paths[1]).unwrap() {
                mismatched.push(format!("criterion {n} config {i}"));
            }
        }
    }
    Verdict {
        passed: mismatched.is_empty(),
        detail: format!("{files} reports re-run; mismatched: {mismatched:?}"),
    }
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (1, "exact TV certification of twin pairs", Box::new(|| with_runtime(TV_RUNTIME, || experiment_criterion(1)))),
        (2, "chosen-prefix hidden-path recovery", Box::new(|| with_runtime(MEDIUM_RUNTIME, || experiment_criterion(2)))),
        (3, "top-token access cannot separate leader tries", Box::new(|| with_runtime(MEDIUM_RUNTIME, criterion_3))),
        (4, "logit trie recovery exactness and noise threshold", Box::new(|| with_runtime(MEDIUM_RUNTIME, criterion_4))),
        (5, "sampled trie recovery budget and success", Box::new(|| with_runtime(LONG_RUNTIME, || experiment_criterion(5)))),
        (6, "sequence-score recovery", Box::new(|| with_runtime(SHORT_RUNTIME, || experiment_criterion(6)))),
        (7, "Gibbs closed forms, decomposition and regret sweep", Box::new(|| with_runtime(MEDIUM_RUNTIME, || experiment_criterion(7)))),
        (8, "local-reset post-training end to end", Box::new(|| with_runtime(LONG_RUNTIME, || experiment_criterion(8)))),
        (9, "no-reset certificate separation", Box::new(|| with_runtime(LONG_RUNTIME, || experiment_criterion(9)))),
        (10, "byte-identical reports on re-run", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (n, name, run) in criteria {
        let v = run();
        if !v.passed {
            failed += 1;
        }
        println!("criterion {n:>2} {}: {name}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} of 10 criteria pass", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
