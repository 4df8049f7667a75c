use rand::Rng;

use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::oracles::OracleSession;
use crate::scalar::Scalar;
use crate::vocab::{Completion, Token};

use super::{RecoveryResult, RunMark};

/// Padding rule `s^(t)`: all-ones suffix of the requested length.
pub fn all_ones_padding(_stage: usize, len: usize) -> Vec<Token> {
    vec![1; len]
}

/// Hidden-path recovery from exact sequence scores with the all-ones padding.
pub fn recover_hidden_path_seqscore<F, G, R>(
    session: &mut OracleSession<'_, F, G>,
    rng: &mut R,
) -> Result<RecoveryResult<Completion>>
where
    F: Scalar,
    G: Generator<F> + ?Sized,
    R: Rng + ?Sized,
{
    recover_hidden_path_seqscore_with(session, &mut all_ones_padding, rng)
}

/// At stage `t` scores the `K` completions `ẑ_{<t}·a·s^(t)` and keeps the
/// best token (smallest index on exact ties). Exactly `H·K` queries.
///
/// `padding(t, len)` supplies the suffix for 1-based stage `t`.
pub fn recover_hidden_path_seqscore_with<F, G, R>(
    session: &mut OracleSession<'_, F, G>,
    padding: &mut dyn FnMut(usize, usize) -> Vec<Token>,
    rng: &mut R,
) -> Result<RecoveryResult<Completion>>
where
    F: Scalar,
    G: Generator<F> + ?Sized,
    R: Rng + ?Sized,
{
    if session.noise().xi() != F::zero() {
        return Err(Error::Precondition("sequence-score recovery needs exact scores (xi = 0)".into()));
    }
    let vocab = session.vocab();
    let h = vocab.horizon();
    let mark = RunMark::start(session);
    let mut prefix: Vec<Token> = Vec::with_capacity(h);
    for t in 1..=h {
        let suffix = padding(t, h - t);
        if suffix.len() != h - t {
            return Err(Error::InvalidParameter(format!(
                "padding for stage {t} has length {}, expected {}",
                suffix.len(),
                h - t
            )));
        }
        let mut best: Option<(Token, F)> = None;
        for a in vocab.tokens() {
            let mut tokens = prefix.clone();
            tokens.push(a);
            tokens.extend_from_slice(&suffix);
            let y = Completion::new(&vocab, tokens)?;
            let score = session.query_seqscore(&y, rng)?;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((a, score));
            }
        }
        prefix.push(best.expect("K >= 2").0);
    }
    Ok(mark.finish(session, Some(Completion::from_raw(prefix)), Vec::new()))
}
