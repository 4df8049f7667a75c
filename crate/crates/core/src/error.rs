use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("prefix of length {len} is not a valid query prefix for horizon {horizon}")]
    InvalidPrefix { len: usize, horizon: usize },

    #[error("completion has length {len}, expected exactly {horizon}")]
    InvalidCompletion { len: usize, horizon: usize },

    #[error("token {token} outside vocabulary 1..={k}")]
    InvalidToken { token: u32, k: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid leader trie: {0}")]
    InvalidTrie(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enumeration of {size} trajectories exceeds cap {cap}")]
    EnumerationCap { size: u128, cap: u128 },

    #[error("local-reset discipline violated at query {index}")]
    DisciplineViolation { index: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
