use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::scalar::Scalar;
use crate::vocab::{Prefix, Token, VocabSpec};

use super::check_cap;

/// A set of query prefixes (all of length `< H`).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrefixSet {
    members: BTreeSet<Prefix>,
}

impl PrefixSet {
    pub fn new(vocab: &VocabSpec, members: impl IntoIterator<Item = Prefix>) -> Result<Self> {
        let members: BTreeSet<Prefix> = members.into_iter().collect();
        for p in &members {
            vocab.check_query_prefix(p)?;
        }
        Ok(Self { members })
    }

    pub fn contains(&self, p: &[Token]) -> bool {
        self.members.contains(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Prefix> {
        self.members.iter()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Some member strictly extends `p`.
    fn extends_beyond(&self, p: &[Token]) -> bool {
        self.members.iter().any(|u| u.len() > p.len() && u[..p.len()] == *p)
    }
}

/// Probability that a root-start rollout visits `U`, summed over first-entry
/// events: each `p ∈ U` contributes the mass of reaching `p` without passing
/// through an earlier member of `U`. Subtrees containing no member are pruned.
pub fn reachability<F: Scalar, G: Generator<F> + ?Sized>(g: &G, set: &PrefixSet) -> F {
    fn walk<F: Scalar, G: Generator<F> + ?Sized>(
        g: &G,
        set: &PrefixSet,
        prefix: &mut Vec<Token>,
        log_weight: F,
    ) -> F {
        if set.contains(prefix) {
            return log_weight.exp();
        }
        if !set.extends_beyond(prefix) {
            return F::zero();
        }
        let dist = g.conditional(prefix);
        let mut total = F::zero();
        for a in g.vocab().tokens() {
            let p = dist.prob(a);
            if p > F::zero() {
                prefix.push(a);
                total = total + walk(g, set, prefix, log_weight + p.ln());
                prefix.pop();
            }
        }
        total
    }
    walk(g, set, &mut Vec::new(), F::zero())
}

/// Independent route: `1 − Σ` over full trajectories whose visited prefixes
/// all avoid `U`.
pub fn reachability_by_complement<F: Scalar, G: Generator<F> + ?Sized>(
    g: &G,
    set: &PrefixSet,
    cap: u128,
) -> Result<F> {
    let vocab = g.vocab();
    check_cap(&vocab, cap)?;
    fn walk<F: Scalar, G: Generator<F> + ?Sized>(
        g: &G,
        set: &PrefixSet,
        prefix: &mut Vec<Token>,
        log_weight: F,
        h: usize,
    ) -> F {
        if prefix.len() == h {
            return log_weight.exp();
        }
        if set.contains(prefix) {
            return F::zero();
        }
        let dist = g.conditional(prefix);
        let mut total = F::zero();
        for a in g.vocab().tokens() {
            let p = dist.prob(a);
            if p > F::zero() {
                prefix.push(a);
                total = total + walk(g, set, prefix, log_weight + p.ln(), h);
                prefix.pop();
            }
        }
        total
    }
    let avoiding = walk(g, set, &mut Vec::new(), F::zero(), vocab.horizon());
    Ok(F::one() - avoiding)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReachComparison<F> {
    pub first: F,
    pub second: F,
    /// `|first − second| <= 1e-12`.
    pub equal: bool,
}

/// Reachability of `U` under two models that agree outside `U`.
///
/// Agreement is verified on every query prefix outside `U` (entrywise within
/// `1e-12`); disagreement is a precondition error.
pub fn reachability_equal_outside_agreement<F, A, B>(
    first: &A,
    second: &B,
    set: &PrefixSet,
    cap: u128,
) -> Result<ReachComparison<F>>
where
    F: Scalar,
    A: Generator<F> + ?Sized,
    B: Generator<F> + ?Sized,
{
    let vocab = first.vocab();
    if vocab != second.vocab() {
        return Err(Error::Precondition("models have different vocabularies".into()));
    }
    check_cap(&vocab, cap)?;
    let tol = F::lit(1e-12);
    for p in vocab.query_prefixes() {
        if set.contains(&p) {
            continue;
        }
        let (da, db) = (first.conditional(&p), second.conditional(&p));
        if da.probs().iter().zip(db.probs()).any(|(a, b)| (*a - *b).abs() > tol) {
            return Err(Error::Precondition(format!("models disagree at prefix {p} outside U")));
        }
    }
    let a = reachability(first, set);
    let b = reachability(second, set);
    Ok(ReachComparison { first: a, second: b, equal: (a - b).abs() <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ENUMERATION_CAP;
    use crate::families::{BridgeSetup, HiddenPathModel};
    use crate::generator::UniformModel;

    fn set(v: &VocabSpec, items: &[&str]) -> PrefixSet {
        PrefixSet::new(v, items.iter().map(|s| s.parse().unwrap())).unwrap()
    }

    #[test]
    fn root_is_always_reached() {
        let v = VocabSpec::new(3, 4).unwrap();
        let g = UniformModel::new(v);
        let r: f64 = reachability(&g, &set(&v, &[""]));
        assert_eq!(r, 1.0);
        let r: f64 = reachability(&g, &PrefixSet::default());
        assert_eq!(r, 0.0);
    }

    #[test]
    fn tip_of_hidden_path() {
        let v = VocabSpec::new(2, 5).unwrap();
        let m = HiddenPathModel::<f64>::new(v, 1.0, vec![1, 2, 2, 1, 2]).unwrap();
        let u = set(&v, &["1.2.2.1"]);
        let r = reachability(&m, &u);
        assert!((r - m.p_plus().powi(4)).abs() < 1e-15);
        let c = reachability_by_complement(&m, &u, ENUMERATION_CAP).unwrap();
        assert!((r - c).abs() < 1e-12);
        let twin = m.twin(1).unwrap();
        let cmp = reachability_equal_outside_agreement(&m, &twin, &u, ENUMERATION_CAP).unwrap();
        assert!(cmp.equal);
        assert!((cmp.second - m.p_plus().powi(4)).abs() < 1e-15);
    }

    #[test]
    fn scaffold_hit_probability() {
        let setup = BridgeSetup::<f64>::new(2, vec![2, 1, 1, 2], 30, [1, 2], 1.0, 0.5, 1.0).unwrap();
        let inst = setup.instance(vec![1; 30], 0).unwrap();
        let v = setup.vocab();
        let u = PrefixSet::new(&v, [crate::vocab::Prefix::new(vec![2, 1, 1, 2])]).unwrap();
        let r = reachability(&inst.hard_model(), &u);
        assert!((r - setup.p_plus().powi(4)).abs() < 1e-15);
    }

    #[test]
    fn nested_members_count_first_entry_once() {
        let v = VocabSpec::new(2, 4).unwrap();
        let m = HiddenPathModel::<f64>::new(v, 0.7, vec![2, 2, 1, 1]).unwrap();
        let u = set(&v, &["2", "2.2", "1.1.1"]);
        let r = reachability(&m, &u);
        let c = reachability_by_complement(&m, &u, ENUMERATION_CAP).unwrap();
        assert!((r - c).abs() < 1e-12);
        let p1 = m.p_plus();
        let expect = p1 + (1.0 - p1) * 0.25;
        assert!((r - expect).abs() < 1e-15);
    }

    #[test]
    fn disagreement_outside_u_is_rejected() {
        let v = VocabSpec::new(2, 3).unwrap();
        let a = HiddenPathModel::<f64>::new(v, 1.0, vec![1, 1, 1]).unwrap();
        let b = a.twin(2).unwrap();
        let err = reachability_equal_outside_agreement(&a, &b, &set(&v, &["2"]), ENUMERATION_CAP);
        assert!(matches!(err, Err(Error::Precondition(_))));
        let g = UniformModel::new(VocabSpec::new(2, 30).unwrap());
        let big = PrefixSet::default();
        assert!(reachability_by_complement::<f64, _>(&g, &big, ENUMERATION_CAP).is_err());
    }
}
