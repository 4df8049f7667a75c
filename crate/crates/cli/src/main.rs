//! `prefix-oracle`: run recovery procedures, exact analyses and experiments
//! from the command line. Results go to stdout as JSON, diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 failed assertion or unsuccessful recovery,
//! 2 usage or parameter error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use prefix_oracle::algorithms::{
    bridge_posttrain, recover_hidden_path, recover_hidden_path_seqscore_with, recover_leader_trie_logit,
    recover_leader_trie_sample, leader_trie_sample_size,
};
use prefix_oracle::analysis::{
    evaluate_objective, gibbs_normalizer_by_enumeration, gibbs_policy, lower_bound_certificate, pathfull_law,
    reachability, regret_gap_check, tv_distance, CertificateParams, PrefixSet, ENUMERATION_CAP,
};
use prefix_oracle::experiments::config::parse_real;
use prefix_oracle::experiments::{emit_report, run_experiment, ExperimentConfig, ExperimentName};
use prefix_oracle::families::{BridgeSetup, HiddenPathModel, LeaderTrie, LeaderTrieConstants, LeaderTrieModel};
use prefix_oracle::oracles::{audit_discipline, NoisePolicy, OracleSession, QueryLedger, RewardOracle};
use prefix_oracle::policy::GeneratorPolicy;
use prefix_oracle::rng::seeded;
use prefix_oracle::{Error, Prefix, Token, VocabSpec};

#[derive(Parser)]
#[command(name = "prefix-oracle", version, about = "Generator-access laboratory over prefix trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover a random hidden path from chosen-prefix samples.
    RecoverHiddenPath(HiddenPathArgs),
    /// Recover a random leader trie from (approximate) prefix logits.
    RecoverTrieLogit(TrieLogitArgs),
    /// Recover a random leader trie from chosen-prefix samples.
    RecoverTrieSample(TrieSampleArgs),
    /// Recover a random hidden path from exact sequence scores.
    RecoverSeqscore(SeqscoreArgs),
    /// Run the local-reset post-training procedure on a random bridge instance.
    Bridge(BridgeArgs),
    /// Exact enumeration-based quantities.
    Analyze {
        #[command(subcommand)]
        what: Analysis,
    },
    /// Run a named experiment.
    Experiment(ExperimentArgs),
}

fn real(s: &str) -> Result<f64, String> {
    parse_real(s)
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long = "K", default_value_t = 2)]
    k: usize,
    #[arg(long = "H", default_value_t = 10)]
    h: usize,
    /// Signal strength; `log:x` means ln x.
    #[arg(long, default_value = "1", value_parser = real)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the query ledger as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HiddenPathArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "0.1", value_parser = real)]
    delta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    Uniform,
    Adversarial,
}

#[derive(Args)]
struct TrieLogitArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "0", value_parser = real)]
    xi: f64,
    #[arg(long, value_enum, default_value_t = Noise::Uniform)]
    noise: Noise,
}

#[derive(Args)]
struct TrieSampleArgs {
    #[command(flatten)]
    common: Common,
    /// Node budget; defaults to |I(T)| = 2^H − 1.
    #[arg(long = "S")]
    s: Option<usize>,
    #[arg(long, default_value = "0.1", value_parser = real)]
    delta: f64,
}

#[derive(Args)]
struct SeqscoreArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct BridgeShape {
    #[arg(long = "K", default_value_t = 2)]
    k: usize,
    #[arg(long = "D", default_value_t = 3)]
    d: usize,
    #[arg(long = "L", default_value_t = 4)]
    l: usize,
    #[arg(long, default_value = "1", value_parser = real)]
    lambda: f64,
    #[arg(long, default_value = "0.5", value_parser = real)]
    eta: f64,
    #[arg(long, default_value = "1", value_parser = real)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BridgeArgs {
    #[command(flatten)]
    shape: BridgeShape,
    #[arg(long, default_value = "0.1", value_parser = real)]
    delta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    HiddenPath,
    LeaderTrie,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyChoice {
    Base,
    Gibbs,
}

#[derive(Subcommand)]
enum Analysis {
    /// Exact TV between the PathFull laws of a random hidden-path twin pair.
    Tv {
        #[command(flatten)]
        common: Common,
    },
    /// Reachability of a prefix set.
    Reach {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Family::HiddenPath)]
        family: Family,
        /// `tip` (the depth H−1 prefix of the hidden path) or a comma-separated
        /// list of dot-separated prefixes.
        #[arg(long = "U", default_value = "tip")]
        u: String,
    },
    /// Gibbs optimiser closed forms against enumeration.
    Gibbs {
        #[command(flatten)]
        shape: BridgeShape,
    },
    /// Objective value and regret check of a named policy.
    Objective {
        #[command(flatten)]
        shape: BridgeShape,
        #[arg(long, value_enum, default_value_t = PolicyChoice::Base)]
        policy: PolicyChoice,
    },
    /// No-reset lower-bound certificate.
    Certificate {
        #[arg(long = "K", default_value_t = 2)]
        k: usize,
        /// Horizon; D and L default to the balanced split.
        #[arg(long = "H", default_value_t = 21)]
        h: usize,
        #[arg(long = "D")]
        d: Option<usize>,
        #[arg(long = "L")]
        l: Option<usize>,
        #[arg(long, default_value = "1", value_parser = real)]
        lambda: f64,
        #[arg(long = "q-g", value_parser = real)]
        q_g: f64,
        #[arg(long = "q-r", default_value = "1", value_parser = real)]
        q_r: f64,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// One of: hidden-path-scaling, no-reset-hardness, leader-trie-matrix,
    /// bridge-separation, tv-certification, seqscore-recovery, gibbs-checks.
    name: String,
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set H=5,10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure modes mapped onto exit codes.
enum Failure {
    Usage(String),
    Assertion(Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<Value, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(record) => {
            println!("{}", serde_json::to_string_pretty(&record).expect("json"));
            ExitCode::SUCCESS
        }
        Err(Failure::Assertion(record)) => {
            println!("{}", serde_json::to_string_pretty(&record).expect("json"));
            eprintln!("assertion failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::RecoverHiddenPath(a) => recover_path(a),
        Command::RecoverTrieLogit(a) => trie_logit(a),
        Command::RecoverTrieSample(a) => trie_sample(a),
        Command::RecoverSeqscore(a) => seqscore(a),
        Command::Bridge(a) => bridge(a),
        Command::Analyze { what } => analyze(what),
        Command::Experiment(a) => experiment(a),
    }
}

fn write_ledger(out: &Option<PathBuf>, ledger: &QueryLedger) -> Result<(), Failure> {
    if let Some(path) = out {
        std::fs::write(path, ledger.to_csv()).map_err(|source| Error::Io { path: path.clone(), source })?;
    }
    Ok(())
}

fn verdict(ok: bool, record: Value) -> Outcome {
    if ok {
        Ok(record)
    } else {
        Err(Failure::Assertion(record))
    }
}

fn tokens(t: &[Token]) -> String {
    t.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(".")
}

fn trie_lines(t: &LeaderTrie) -> Vec<String> {
    t.branch().iter().map(|(p, b)| format!("{p}:{b}")).collect()
}

fn recover_path(a: HiddenPathArgs) -> Outcome {
    let c = &a.common;
    let mut rng = seeded(c.seed);
    let model = HiddenPathModel::<f64>::random(VocabSpec::new(c.k, c.h)?, c.lambda, &mut rng)?;
    let mut session = OracleSession::new(&model).strict(true);
    let run = recover_hidden_path(&mut session, model.gap(), a.delta, &mut rng)?;
    let ok = run.recovered.as_ref() == Some(model.hidden_path());
    write_ledger(&c.out, session.ledger())?;
    verdict(
        ok,
        json!({
            "command": "recover-hidden-path",
            "hidden_path": tokens(model.hidden_path()),
            "recovered": run.recovered.as_ref().map(|y| tokens(y)),
            "success": ok,
            "queries": run.queries_used,
            "discipline_ok": audit_discipline(&run.trail).is_ok(),
        }),
    )
}

fn trie_logit(a: TrieLogitArgs) -> Outcome {
    let c = &a.common;
    let mut rng = seeded(c.seed);
    let model = LeaderTrieModel::<f64>::new(LeaderTrie::random(VocabSpec::new(c.k, c.h)?, &mut rng)?);
    let noise = match (a.xi, a.noise) {
        (0.0, _) => NoisePolicy::Exact,
        (xi, Noise::Uniform) => NoisePolicy::Uniform { xi },
        (xi, Noise::Adversarial) => {
            NoisePolicy::TowardThreshold { xi, threshold: LeaderTrieConstants::<f64>::new(c.k).logit_threshold() }
        }
    };
    let mut session = OracleSession::new(&model).strict(true).with_noise(noise);
    let run = recover_leader_trie_logit(&mut session, &mut rng)?;
    let ok = run.recovered.as_ref() == Some(model.trie());
    write_ledger(&c.out, session.ledger())?;
    verdict(
        ok,
        json!({
            "command": "recover-trie-logit",
            "trie": trie_lines(model.trie()),
            "recovered": run.recovered.as_ref().map(trie_lines),
            "success": ok,
            "queries": run.queries_used,
            "internal_nodes": model.trie().num_internal(),
            "anomalies": run.anomalies.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        }),
    )
}

fn trie_sample(a: TrieSampleArgs) -> Outcome {
    let c = &a.common;
    let mut rng = seeded(c.seed);
    let model = LeaderTrieModel::<f64>::new(LeaderTrie::random(VocabSpec::new(c.k, c.h)?, &mut rng)?);
    let budget = a.s.unwrap_or(model.trie().num_internal());
    let m = leader_trie_sample_size(c.k, budget, a.delta)?;
    let mut session = OracleSession::new(&model).strict(true);
    let run = recover_leader_trie_sample(&mut session, budget, a.delta, &mut rng)?;
    let ok = run.recovered.as_ref() == Some(model.trie());
    write_ledger(&c.out, session.ledger())?;
    verdict(
        ok,
        json!({
            "command": "recover-trie-sample",
            "trie": trie_lines(model.trie()),
            "recovered": run.recovered.as_ref().map(trie_lines),
            "success": ok,
            "queries": run.queries_used,
            "budget": budget,
            "m": m,
        }),
    )
}

fn seqscore(a: SeqscoreArgs) -> Outcome {
    let c = &a.common;
    let mut rng = seeded(c.seed);
    let model = HiddenPathModel::<f64>::random(VocabSpec::new(c.k, c.h)?, c.lambda, &mut rng)?;
    let mut session = OracleSession::new(&model);
    let run = recover_hidden_path_seqscore_with(&mut session, &mut |_, len| vec![1; len], &mut rng)?;
    let ok = run.recovered.as_ref() == Some(model.hidden_path());
    write_ledger(&c.out, session.ledger())?;
    verdict(
        ok,
        json!({
            "command": "recover-seqscore",
            "hidden_path": tokens(model.hidden_path()),
            "recovered": run.recovered.as_ref().map(|y| tokens(y)),
            "success": ok,
            "queries": run.queries_used,
        }),
    )
}

fn bridge_setup(s: &BridgeShape) -> Result<BridgeSetup<f64>, Failure> {
    Ok(BridgeSetup::new(s.k, vec![1; s.d], s.l, [1, 2], s.lambda, s.eta, s.beta)?)
}

fn bridge(a: BridgeArgs) -> Outcome {
    let setup = bridge_setup(&a.shape)?;
    let mut rng = seeded(a.shape.seed);
    let instance = setup.random_instance(&mut rng)?;
    let model = instance.hard_model();
    let mut session = OracleSession::new(&model).strict(true);
    let mut oracle = RewardOracle::new(&instance);
    let out = bridge_posttrain(&setup, &mut session, &mut oracle, a.delta, &mut rng)?;
    let ok = out.suffix == instance.suffix() && out.bit == instance.bit();
    write_ledger(&a.out, session.ledger())?;
    let objective = if setup.vocab().num_completions() <= ENUMERATION_CAP {
        Some(evaluate_objective(&instance, &out.policy, None, ENUMERATION_CAP)?.value)
    } else {
        None
    };
    verdict(
        ok,
        json!({
            "command": "bridge",
            "suffix": tokens(instance.suffix()),
            "bit": instance.bit(),
            "recovered_suffix": tokens(&out.suffix),
            "recovered_bit": out.bit,
            "success": ok,
            "generator_queries": out.generator_queries,
            "reward_queries": out.reward_queries,
            "objective": objective,
            "optimal_objective": setup.eta() * setup.beta() * (5.0 - setup.q0()).ln(),
        }),
    )
}

fn parse_set(vocab: &VocabSpec, u: &str) -> Result<PrefixSet, Failure> {
    let members = u
        .split(',')
        .map(|s| s.trim().parse::<Prefix>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PrefixSet::new(vocab, members)?)
}

fn analyze(what: Analysis) -> Outcome {
    match what {
        Analysis::Tv { common: c } => {
            let mut rng = seeded(c.seed);
            let vocab = VocabSpec::new(c.k, c.h)?;
            let first = HiddenPathModel::<f64>::random(vocab, c.lambda, &mut rng)?;
            let last = *first.hidden_path().last().expect("H >= 1");
            let second = first.twin(last % c.k as Token + 1)?;
            let tv = tv_distance(&pathfull_law(&first, ENUMERATION_CAP)?, &pathfull_law(&second, ENUMERATION_CAP)?);
            let bound = first.p_plus().powi(c.h as i32 - 1);
            verdict(
                tv <= bound + 1e-10,
                json!({"analysis": "tv", "first": tokens(first.hidden_path()), "second": tokens(second.hidden_path()), "tv": tv, "bound": bound}),
            )
        }
        Analysis::Reach { common: c, family, u } => {
            let mut rng = seeded(c.seed);
            let vocab = VocabSpec::new(c.k, c.h)?;
            let (value, set) = match family {
                Family::HiddenPath => {
                    let model = HiddenPathModel::<f64>::random(vocab, c.lambda, &mut rng)?;
                    let set = if u == "tip" {
                        PrefixSet::new(&vocab, [Prefix::new(model.hidden_path()[..c.h - 1].to_vec())])?
                    } else {
                        parse_set(&vocab, &u)?
                    };
                    (reachability(&model, &set), set)
                }
                Family::LeaderTrie => {
                    if u == "tip" {
                        return Err(Failure::Usage("`--U tip` is defined for the hidden-path family only".into()));
                    }
                    let model = LeaderTrieModel::<f64>::new(LeaderTrie::random(vocab, &mut rng)?);
                    let set = parse_set(&vocab, &u)?;
                    (reachability(&model, &set), set)
                }
            };
            Ok(json!({
                "analysis": "reach",
                "U": set.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                "reach": value,
            }))
        }
        Analysis::Gibbs { shape } => {
            let setup = bridge_setup(&shape)?;
            let instance = setup.random_instance(&mut seeded(shape.seed))?;
            let g = gibbs_policy(&instance);
            let enumerated = gibbs_normalizer_by_enumeration(&instance, ENUMERATION_CAP)?;
            let q0 = setup.q0();
            let ok = (g.normalizer() - (5.0 - q0)).abs() <= 1e-12 && (enumerated - g.normalizer()).abs() <= 1e-12;
            verdict(
                ok,
                json!({
                    "analysis": "gibbs",
                    "q0": q0,
                    "reward": setup.reward(),
                    "normalizer": g.normalizer(),
                    "normalizer_enumerated": enumerated,
                    "target_mass": g.target_mass(),
                    "optimal_objective": g.optimal_value(),
                }),
            )
        }
        Analysis::Objective { shape, policy } => {
            let setup = bridge_setup(&shape)?;
            let instance = setup.random_instance(&mut seeded(shape.seed))?;
            let (j, regret) = match policy {
                PolicyChoice::Base => {
                    let p = GeneratorPolicy::new(instance.hard_model());
                    (evaluate_objective(&instance, &p, None, ENUMERATION_CAP)?, regret_gap_check(&instance, &p, ENUMERATION_CAP)?)
                }
                PolicyChoice::Gibbs => {
                    let p = gibbs_policy(&instance);
                    (evaluate_objective(&instance, &p, None, ENUMERATION_CAP)?, regret_gap_check(&instance, &p, ENUMERATION_CAP)?)
                }
            };
            verdict(
                !regret.threshold_violated,
                json!({"analysis": "objective", "objective": j, "regret": regret}),
            )
        }
        Analysis::Certificate { k, h, d, l, lambda, q_g, q_r } => {
            let params = match (d, l) {
                (None, None) => CertificateParams::balanced(k, lambda, h)?,
                (Some(d), Some(l)) => CertificateParams { k, lambda, d, l },
                _ => return Err(Failure::Usage("give both --D and --L, or neither".into())),
            };
            let value = lower_bound_certificate(&params, q_g, q_r)?;
            Ok(json!({
                "analysis": "certificate",
                "K": k, "H": params.horizon(), "D": params.d, "L": params.l, "lambda": lambda,
                "q_g": q_g, "q_r": q_r, "certificate": value, "below_one_third": value < 1.0 / 3.0,
            }))
        }
    }
}

fn load_config(a: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    let name: ExperimentName = a.name.parse()?;
    let mut config = match &a.config {
        Some(path) => ExperimentConfig::load(Path::new(path))?,
        None => ExperimentConfig::defaults(name),
    };
    config.apply_env()?;
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        config.set(k.trim(), v.trim())?;
    }
    if config.experiment != name {
        return Err(Failure::Usage(format!("configuration is for `{}`, not `{name}`", config.experiment)));
    }
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(trials) = a.trials {
        config.trials = trials;
    }
    if a.out.is_some() {
        config.out = a.out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn experiment(a: ExperimentArgs) -> Outcome {
    let config = load_config(&a)?;
    let report = run_experiment(&config)?;
    if let Some(out) = &config.out {
        emit_report(&report, out)?;
    }
    let record = json!({
        "experiment": report.experiment,
        "seed": report.seed,
        "cells": report.cells,
        "tables": report.tables,
        "checks": report.checks,
        "passed": report.passed(),
    });
    verdict(report.passed(), record)
}
