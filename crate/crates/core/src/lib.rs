//! Simulation laboratory for generator-access models over autoregressive
//! prefix trees.
//!
//! The crate is organised bottom-up:
//!
//! * [`vocab`], [`dist`], [`generator`] and [`families`]: prefix-tree
//!   addressing and the hidden-path, leader-trie and bridge generator families.
//! * [`oracles`]: no-reset and chosen-prefix access interfaces with query
//!   ledgers and a local-reset auditor.
//! * [`algorithms`]: recovery and post-training procedures that consume only
//!   their permitted oracle.
//! * [`analysis`]: exact enumeration of reachability, transcript laws, total
//!   variation, KL divergences and Gibbs optimizers.
//! * [`experiments`]: seeded Monte Carlo harness with CSV reports.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`, which is what every stated tolerance assumes.

// Negated float comparisons are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod scalar;
pub mod vocab;
pub mod dist;
pub mod generator;
pub mod families;
pub mod policy;
pub mod rng;
pub mod text;
pub mod oracles;
pub mod algorithms;
pub mod analysis;
pub mod experiments;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use vocab::{Completion, Prefix, Token, VocabSpec};
pub use generator::{sample_trajectory, trajectory_log_prob, trajectory_prob, Generator, TabularModel, UniformModel};
pub use families::PromptId;

pub type Dist = dist::NextTokenDist<f64>;
pub type HiddenPath = families::HiddenPathModel<f64>;
pub type LeaderTrieGen = families::LeaderTrieModel<f64>;
pub type BridgeSetup = families::BridgeSetup<f64>;
pub type Bridge = families::BridgeInstance<f64>;
pub type HiddenPath32 = families::HiddenPathModel<f32>;
pub type LeaderTrieGen32 = families::LeaderTrieModel<f32>;
