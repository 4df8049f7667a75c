use std::collections::BTreeMap;

use crate::error::Result;
use crate::generator::Generator;
use crate::scalar::Scalar;
use crate::vocab::Token;

use super::check_cap;

/// Canonical key of a PathFull reply: the trajectory plus every visited
/// distribution quantized on a `1e-12` grid, so replies that coincide across
/// two models merge into one key.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReplyKey {
    pub y: Vec<Token>,
    pub mus: Vec<Vec<i64>>,
}

/// Exact law of one PathFull reply.
#[derive(Clone, Debug, PartialEq)]
pub struct TranscriptLaw<F> {
    probs: BTreeMap<ReplyKey, F>,
}

impl<F: Scalar> TranscriptLaw<F> {
    pub fn from_map(probs: BTreeMap<ReplyKey, F>) -> Self {
        Self { probs }
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    pub fn total(&self) -> F {
        self.probs.values().copied().sum()
    }

    pub fn prob(&self, key: &ReplyKey) -> F {
        self.probs.get(key).copied().unwrap_or(F::zero())
    }

    /// Mass on replies whose trajectory equals `y`.
    pub fn trajectory_mass(&self, y: &[Token]) -> F {
        self.probs.iter().filter(|(k, _)| k.y == y).map(|(_, &p)| p).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ReplyKey, &F)> {
        self.probs.iter()
    }
}

/// Full enumeration of the PathFull reply law; zero-probability
/// trajectories are left out of the support.
pub fn pathfull_law<F: Scalar, G: Generator<F> + ?Sized>(g: &G, cap: u128) -> Result<TranscriptLaw<F>> {
    let vocab = g.vocab();
    check_cap(&vocab, cap)?;
    let mut probs = BTreeMap::new();
    let mut y = Vec::with_capacity(vocab.horizon());
    let mut mus = Vec::with_capacity(vocab.horizon());
    fn walk<F: Scalar, G: Generator<F> + ?Sized>(
        g: &G,
        y: &mut Vec<Token>,
        mus: &mut Vec<Vec<i64>>,
        log_weight: F,
        out: &mut BTreeMap<ReplyKey, F>,
    ) {
        if y.len() == g.vocab().horizon() {
            out.insert(ReplyKey { y: y.clone(), mus: mus.clone() }, log_weight.exp());
            return;
        }
        let dist = g.conditional(y);
        mus.push(dist.quantized());
        for a in g.vocab().tokens() {
            let p = dist.prob(a);
            if p > F::zero() {
                y.push(a);
                walk(g, y, mus, log_weight + p.ln(), out);
                y.pop();
            }
        }
        mus.pop();
    }
    walk(g, &mut y, &mut mus, F::zero(), &mut probs);
    Ok(TranscriptLaw { probs })
}

/// `½·Σ|p − q|` over the union of supports.
pub fn tv_distance<F: Scalar>(a: &TranscriptLaw<F>, b: &TranscriptLaw<F>) -> F {
    let mut total = F::zero();
    for (k, &p) in &a.probs {
        total = total + (p - b.prob(k)).abs();
    }
    for (k, &q) in &b.probs {
        if !a.probs.contains_key(k) {
            total = total + q;
        }
    }
    total / F::lit(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{reachability, PrefixSet, ENUMERATION_CAP};
    use crate::dist::NextTokenDist;
    use crate::families::HiddenPathModel;
    use crate::generator::{trajectory_prob, TabularModel};
    use crate::vocab::{Prefix, VocabSpec};

    #[test]
    fn single_step_law_matches_root() {
        let v = VocabSpec::new(2, 1).unwrap();
        let m = HiddenPathModel::<f64>::new(v, 1.0, vec![2]).unwrap();
        let law = pathfull_law(&m, ENUMERATION_CAP).unwrap();
        assert_eq!(law.support_size(), 2);
        assert!((law.trajectory_mass(&[2]) - m.p_plus()).abs() < 1e-15);
        assert!((law.trajectory_mass(&[1]) - m.p_minus()).abs() < 1e-15);
    }

    #[test]
    fn law_matches_trajectory_probabilities() {
        let v = VocabSpec::new(2, 2).unwrap();
        let m = HiddenPathModel::<f64>::new(v, 0.9, vec![1, 2]).unwrap();
        let law = pathfull_law(&m, ENUMERATION_CAP).unwrap();
        assert!((law.total() - 1.0).abs() < 1e-10);
        for y in v.completions() {
            let p: f64 = trajectory_prob(&m, &y).unwrap();
            assert!((law.trajectory_mass(&y) - p).abs() < 1e-15);
        }
        assert!((law.trajectory_mass(&[1, 2]) - m.p_plus().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn tv_edge_cases() {
        let v = VocabSpec::new(2, 2).unwrap();
        let m = HiddenPathModel::<f64>::new(v, 0.9, vec![1, 2]).unwrap();
        let law = pathfull_law(&m, ENUMERATION_CAP).unwrap();
        assert_eq!(tv_distance(&law, &law), 0.0);

        let a = TabularModel::new(v, NextTokenDist::<f64>::point_mass(2, 1)).unwrap();
        let b = TabularModel::new(v, NextTokenDist::<f64>::point_mass(2, 2)).unwrap();
        let la = pathfull_law(&a, ENUMERATION_CAP).unwrap();
        let lb = pathfull_law(&b, ENUMERATION_CAP).unwrap();
        assert_eq!(tv_distance(&la, &lb), 1.0);
    }

    #[test]
    fn twin_tv_bounded_by_tip_reachability() {
        let v = VocabSpec::new(2, 3).unwrap();
        for z in v.completions() {
            let m = HiddenPathModel::<f64>::new(v, 1.0, z.to_vec()).unwrap();
            let other = if z[2] == 1 { 2 } else { 1 };
            let t = m.twin(other).unwrap();
            let tv = tv_distance(&pathfull_law(&m, ENUMERATION_CAP).unwrap(), &pathfull_law(&t, ENUMERATION_CAP).unwrap());
            let u = PrefixSet::new(&v, [z.prefix(2)]).unwrap();
            let reach = reachability(&m, &u);
            assert!(tv <= reach + 1e-10);
            assert!((reach - m.p_plus().powi(2)).abs() < 1e-15);
            let _ = Prefix::root();
        }
    }
}
