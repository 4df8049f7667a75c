use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::HiddenPathModel;
use crate::generator::Generator;
use crate::oracles::OracleSession;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Guess {
    First,
    Second,
}

/// Concrete no-reset tester for a hidden-path twin pair.
///
/// Makes `q` PathFull queries against `session`. A rollout that reaches the
/// depth-`H−1` prefix where the twins differ reveals the visited distribution
/// there, which has likelihood zero under one of the two models; the tester
/// answers with the other. Without such a rollout it flips a fair coin.
pub fn distinguish_no_reset_baseline<F, G, R>(
    first: &HiddenPathModel<F>,
    second: &HiddenPathModel<F>,
    session: &mut OracleSession<'_, F, G>,
    queries: usize,
    rng: &mut R,
) -> Result<Guess>
where
    F: Scalar,
    G: Generator<F> + ?Sized,
    R: Rng + ?Sized,
{
    let v = first.vocab();
    let h = v.horizon();
    let (za, zb) = (first.hidden_path(), second.hidden_path());
    let twins = v == second.vocab()
        && first.lambda() == second.lambda()
        && za[..h - 1] == zb[..h - 1]
        && za[h - 1] != zb[h - 1];
    if !twins {
        return Err(Error::Precondition(
            "models must share K, H, lambda and the first H-1 hidden tokens, and differ in the last".into(),
        ));
    }
    if session.vocab() != v {
        return Err(Error::Precondition("session vocabulary differs from the candidate models".into()));
    }
    let fork = &za[..h - 1];
    let under_first = first.conditional(fork);
    let under_second = second.conditional(fork);
    for _ in 0..queries {
        let reply = session.query_pathfull(rng);
        if reply.y[..h - 1] == *fork {
            let seen = &reply.mus[h - 1];
            if *seen == under_first {
                return Ok(Guess::First);
            }
            if *seen == under_second {
                return Ok(Guess::Second);
            }
        }
    }
    Ok(if rng.random_bool(0.5) { Guess::First } else { Guess::Second })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::vocab::VocabSpec;

    #[test]
    fn rejects_non_twins() {
        let v = VocabSpec::new(2, 3).unwrap();
        let a = HiddenPathModel::<f64>::new(v, 1.0, vec![1, 1, 1]).unwrap();
        let b = HiddenPathModel::<f64>::new(v, 1.0, vec![2, 1, 2]).unwrap();
        let mut s = OracleSession::new(&a);
        assert!(distinguish_no_reset_baseline(&a, &b, &mut s, 1, &mut seeded(0)).is_err());
        assert!(distinguish_no_reset_baseline(&a, &a, &mut s, 1, &mut seeded(0)).is_err());
    }

    #[test]
    fn root_fork_is_always_detected() {
        let v = VocabSpec::new(2, 1).unwrap();
        let a = HiddenPathModel::<f64>::new(v, 1.0, vec![1]).unwrap();
        let b = a.twin(2).unwrap();
        let mut rng = seeded(0);
        for _ in 0..50 {
            let mut s = OracleSession::new(&b);
            assert_eq!(distinguish_no_reset_baseline(&a, &b, &mut s, 1, &mut rng).unwrap(), Guess::Second);
            assert_eq!(s.ledger().rollouts(), 1);
        }
    }

    #[test]
    fn zero_budget_is_a_coin_flip() {
        let v = VocabSpec::new(2, 4).unwrap();
        let a = HiddenPathModel::<f64>::new(v, 1.0, vec![1, 2, 1, 1]).unwrap();
        let b = a.twin(2).unwrap();
        let mut rng = seeded(3);
        let n = 4000;
        let wins = (0..n)
            .filter(|_| {
                let mut s = OracleSession::new(&a);
                distinguish_no_reset_baseline(&a, &b, &mut s, 0, &mut rng).unwrap() == Guess::First
            })
            .count();
        let sigma = (0.25f64 / n as f64).sqrt();
        assert!((wins as f64 / n as f64 - 0.5).abs() <= 3.0 * sigma);
    }
}
