use rand::Rng;

use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::oracles::OracleSession;
use crate::scalar::Scalar;
use crate::vocab::{Completion, Prefix, Token};

use super::{RecoveryResult, RunMark};

pub(crate) fn check_delta<F: Scalar>(delta: F) -> Result<()> {
    if !(delta > F::zero() && delta < F::one()) {
        return Err(Error::InvalidParameter(format!("failure probability delta={delta} must lie in (0,1)")));
    }
    Ok(())
}

/// Per-stage sample count `m = ceil((2/Δ²)·log(stages·(K−1)/δ))`.
pub fn hidden_path_sample_size<F: Scalar>(gap: F, stages: usize, k: usize, delta: F) -> Result<usize> {
    check_delta(delta)?;
    if !(gap > F::zero()) {
        return Err(Error::InvalidParameter(format!("signal gap {gap} must be > 0")));
    }
    if stages == 0 || k < 2 {
        return Err(Error::InvalidParameter("need at least one stage and K >= 2".into()));
    }
    let arg = F::from_count(stages) * F::from_count(k - 1) / delta;
    let m = (F::lit(2.0) / (gap * gap) * arg.ln()).ceil();
    m.to_usize()
        .filter(|&m| m >= 1)
        .ok_or_else(|| Error::InvalidParameter(format!("sample size {m} not representable")))
}

/// Most frequent token; the smallest index wins ties.
pub(crate) fn majority_token(counts: &[usize]) -> Token {
    let best = counts
        .iter()
        .enumerate()
        .fold(0, |best, (i, &c)| if c > counts[best] { i } else { best });
    best as Token + 1
}

/// Majority walk: `stages` rounds of `m` chosen-prefix samples starting at
/// `start`, extending by the most frequent token (smallest index on ties).
pub(crate) fn majority_walk<F, G, R>(
    session: &mut OracleSession<'_, F, G>,
    start: Prefix,
    stages: usize,
    m: usize,
    rng: &mut R,
) -> Result<Vec<Token>>
where
    F: Scalar,
    G: Generator<F> + ?Sized,
    R: Rng + ?Sized,
{
    let k = session.vocab().k();
    let mut current = start;
    let mut recovered = Vec::with_capacity(stages);
    let mut counts = vec![0usize; k];
    for _ in 0..stages {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..m {
            let a = session.query_prefix_sample(&current, rng)?;
            counts[a as usize - 1] += 1;
        }
        let token = majority_token(&counts);
        recovered.push(token);
        current = current.child(token);
    }
    Ok(recovered)
}

/// Hidden-path recovery from chosen-prefix samples with `H` stages of `m`
/// samples each; uses exactly `H·m` queries.
pub fn recover_hidden_path<F, G, R>(
    session: &mut OracleSession<'_, F, G>,
    gap: F,
    delta: F,
    rng: &mut R,
) -> Result<RecoveryResult<Completion>>
where
    F: Scalar,
    G: Generator<F> + ?Sized,
    R: Rng + ?Sized,
{
    let v = session.vocab();
    let m = hidden_path_sample_size(gap, v.horizon(), v.k(), delta)?;
    recover_hidden_path_from(session, Prefix::root(), v.horizon(), m, rng)
        .map(|r| RecoveryResult {
            recovered: r.recovered.map(Completion::from_raw),
            queries_used: r.queries_used,
            trail: r.trail,
            anomalies: r.anomalies,
        })
}

/// The same walk below an arbitrary starting prefix, with an explicit `m`.
pub fn recover_hidden_path_from<F, G, R>(
    session: &mut OracleSession<'_, F, G>,
    start: Prefix,
    stages: usize,
    m: usize,
    rng: &mut R,
) -> Result<RecoveryResult<Vec<Token>>>
where
    F: Scalar,
    G: Generator<F> + ?Sized,
    R: Rng + ?Sized,
{
    let mark = RunMark::start(session);
    let tokens = majority_walk(session, start, stages, m, rng)?;
    Ok(mark.finish(session, Some(tokens), Vec::new()))
}
