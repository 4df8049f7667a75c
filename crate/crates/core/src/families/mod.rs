//! The three witness generator families.

pub mod bridge;
pub mod hidden_path;
pub mod leader_trie;

pub use bridge::{BridgeInstance, BridgeSetup, HardPromptModel, PromptId};
pub use hidden_path::{signal_probs, HiddenPathModel};
pub use leader_trie::{LeaderTrie, LeaderTrieConstants, LeaderTrieModel, LEADER};
