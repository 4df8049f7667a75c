//! Reproducible Monte Carlo experiments. Every report is a pure function of
//! the config and its master seed: trial `i` of cell `c` draws from its own
//! stream, trials run in parallel and are collected in index order.

pub mod config;
mod exact;
mod recovery;
pub mod report;
pub mod stats;
mod trie;

use std::time::Instant;

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::{seeded, stream_seed, StreamRng};

pub use config::{ExperimentConfig, ExperimentName, NoiseMode, PaddingRule, TrieInterface, SEED_ENV};
pub use exact::{run_gibbs_checks, run_tv_certification};
pub use recovery::{run_bridge_separation, run_hidden_path_scaling, run_no_reset_hardness, run_seqscore_recovery};
pub use report::{emit_report, object_hash, CellSummary, Check, ExperimentReport, Table, TrialRecord, CSV_HEADER};
pub use stats::{margin3, wilson95};
pub use trie::run_leader_trie_matrix;

/// Runs the experiment named in `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    match config.experiment {
        ExperimentName::HiddenPathScaling => run_hidden_path_scaling(config),
        ExperimentName::NoResetHardness => run_no_reset_hardness(config),
        ExperimentName::LeaderTrieMatrix => run_leader_trie_matrix(config),
        ExperimentName::BridgeSeparation => run_bridge_separation(config),
        ExperimentName::TvCertification => run_tv_certification(config),
        ExperimentName::SeqscoreRecovery => run_seqscore_recovery(config),
        ExperimentName::GibbsChecks => run_gibbs_checks(config),
    }
}

/// What a single trial reports back.
#[derive(Clone, Debug, Default)]
pub(crate) struct Outcome {
    pub success: bool,
    pub generator_queries: usize,
    pub reward_queries: usize,
    pub recovered_hash: u64,
    pub metric: Option<f64>,
}

/// Runs `n` trials of one cell in parallel on independent streams.
pub(crate) fn run_cell<T>(
    config: &ExperimentConfig,
    cell: &str,
    cell_index: usize,
    n: usize,
    trial: T,
) -> Result<Vec<TrialRecord>>
where
    T: Fn(usize, &mut StreamRng) -> Result<Outcome> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let seed = stream_seed(config.seed, ((cell_index as u64) << 32) | i as u64);
            let mut rng = seeded(seed);
            let start = config.timing.then(Instant::now);
            let o = trial(i, &mut rng)?;
            Ok(TrialRecord {
                cell: cell.to_string(),
                trial: i,
                seed,
                success: o.success,
                generator_queries: o.generator_queries,
                reward_queries: o.reward_queries,
                recovered_hash: o.recovered_hash,
                metric: o.metric,
                wallclock_ns: start.map_or(0, |s| s.elapsed().as_nanos() as u64),
            })
        })
        .collect()
}
