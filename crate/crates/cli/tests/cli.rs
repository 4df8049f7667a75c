use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prefix-oracle"))
        .args(args)
        .env_remove("PREFIX_ORACLE_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn no_arguments_is_a_usage_error() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["recover-hidden-path", "--bogus"]).status.code(), Some(2));
}

#[test]
fn reach_of_tip_is_p_plus_to_the_h_minus_one() {
    let out = run(&["analyze", "reach", "--family", "hidden-path", "--K", "2", "--H", "5", "--lambda", "1", "--U", "tip"]);
    assert_eq!(out.status.code(), Some(0));
    let p = 1f64.exp() / (1f64.exp() + 1.0);
    let reach = json(&out)["reach"].as_f64().unwrap();
    assert!((reach - p.powi(4)).abs() < 1e-12);
}

#[test]
fn reach_accepts_prefix_lists_and_log_lambda() {
    let out = run(&["analyze", "reach", "--K", "2", "--H", "3", "--lambda", "log:1", "--U", "1,2"]);
    assert_eq!(out.status.code(), Some(0));
    // lambda = ln 1 = 0 is uniform; the two depth-one prefixes cover everything
    assert!((json(&out)["reach"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn trie_logit_uses_one_query_per_internal_node() {
    let out = run(&["recover-trie-logit", "--K", "3", "--H", "3", "--xi", "0", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["success"], Value::Bool(true));
    assert_eq!(v["queries"].as_u64(), Some(7));
    assert_eq!(v["internal_nodes"].as_u64(), Some(7));
}

#[test]
fn seed_determines_output() {
    let a = run(&["recover-hidden-path", "--H", "6", "--seed", "11"]);
    let b = run(&["recover-hidden-path", "--H", "6", "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    // m = ceil((2/gap^2)·ln(6/0.1)) = 39 at K=2, lambda=1
    assert_eq!(v["queries"].as_u64(), Some(6 * 39));
}

#[test]
fn recovery_commands_write_ledgers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ledger.csv");
    let out = run(&["recover-seqscore", "--K", "3", "--H", "4", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("query_index,kind,prefix_or_completion,reply_summary"));
    assert_eq!(csv.lines().count(), 1 + 12);
    for cmd in [
        vec!["recover-trie-sample", "--K", "3", "--H", "3", "--seed", "1"],
        vec!["bridge", "--D", "2", "--L", "2", "--delta", "1e-6", "--seed", "1"],
        vec!["analyze", "tv", "--H", "3"],
        vec!["analyze", "gibbs", "--D", "1", "--L", "1"],
        vec!["analyze", "objective", "--D", "3", "--L", "2", "--policy", "gibbs"],
    ] {
        assert_eq!(run(&cmd).status.code(), Some(0), "{cmd:?}");
    }
}

#[test]
fn certificate_reports_its_value() {
    let out = run(&["analyze", "certificate", "--K", "2", "--D", "5", "--L", "3", "--q-g", "10", "--q-r", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let p = 1f64.exp() / (1f64.exp() + 1.0);
    let expected = 10.0 * p.powi(5) + 1.0 / 16.0 + 4.0 / 15.0;
    assert!((json(&out)["certificate"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert_eq!(run(&["analyze", "certificate", "--D", "5", "--q-g", "1"]).status.code(), Some(2));
}

#[test]
fn experiment_from_config_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gibbs.cfg");
    std::fs::write(&cfg, "experiment = gibbs-checks\ntrials = 30\nseed = 4\n").unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let from_file = run(&["experiment", "gibbs-checks", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    let from_flags = run(&["experiment", "gibbs-checks", "--trials", "30", "--seed", "4", "--out", b.to_str().unwrap()]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, from_flags.stdout);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(json(&from_file)["passed"], Value::Bool(true));
}

#[test]
fn env_seed_applies_and_flag_wins() {
    let base = ["experiment", "gibbs-checks", "--trials", "5"];
    let with_env = |seed: &str, extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_prefix-oracle"))
            .args(base)
            .args(extra)
            .env("PREFIX_ORACLE_SEED", seed)
            .output()
            .unwrap()
    };
    assert_eq!(json(&with_env("9", &[]))["seed"].as_u64(), Some(9));
    assert_eq!(json(&with_env("9", &["--seed", "2"]))["seed"].as_u64(), Some(2));
}

#[test]
fn failing_assertions_exit_one() {
    let out = run(&["experiment", "bridge-separation", "--trials", "5", "--set", "certificate_H=21"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["passed"], Value::Bool(false));
    let mismatched = run(&["experiment", "gibbs-checks", "--set", "experiment=tv-certification"]);
    assert_eq!(mismatched.status.code(), Some(2));
}
