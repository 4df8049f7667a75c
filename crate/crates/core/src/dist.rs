use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vocab::Token;

/// Relative tolerance under which two entries count as tied for the maximum.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// A next-token distribution over `{1, ..., K}`; entry `i` holds token `i + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NextTokenDist<F> {
    probs: Vec<F>,
}

impl<F: Scalar> NextTokenDist<F> {
    /// Validates nonnegativity and normalisation within [`Scalar::sum_tolerance`].
    pub fn new(probs: Vec<F>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "distribution over {} tokens; need at least 2",
                probs.len()
            )));
        }
        if let Some(bad) = probs.iter().find(|p| !(**p >= F::zero()) || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid probability {bad}")));
        }
        let total: F = probs.iter().copied().sum();
        if (total - F::one()).abs() > F::sum_tolerance() {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    pub(crate) fn from_raw(probs: Vec<F>) -> Self {
        Self { probs }
    }

    pub fn uniform(k: usize) -> Self {
        Self { probs: vec![F::one() / F::from_count(k); k] }
    }

    pub fn point_mass(k: usize, token: Token) -> Self {
        let mut probs = vec![F::zero(); k];
        probs[token as usize - 1] = F::one();
        Self { probs }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn prob(&self, token: Token) -> F {
        self.probs[token as usize - 1]
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    /// Natural-log probabilities; zero entries map to `-inf`.
    pub fn log_probs(&self) -> Vec<F> {
        self.probs.iter().map(|p| p.ln()).collect()
    }

    pub fn total(&self) -> F {
        self.probs.iter().copied().sum()
    }

    /// The unique most likely token, or `None` when the maximum is tied.
    ///
    /// Entries within `TIE_TOLERANCE * max` of the maximum count as tied.
    pub fn unique_argmax(&self) -> Option<Token> {
        let (best, max) = self
            .probs
            .iter()
            .enumerate()
            .fold((0, F::neg_infinity()), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
        let tol = F::lit(TIE_TOLERANCE) * max.abs();
        let ties = self.probs.iter().filter(|&&p| (max - p).abs() <= tol).count();
        (ties == 1).then_some(best as Token + 1)
    }

    /// Tokens ordered by decreasing probability, ties broken by token index.
    pub fn ranked(&self) -> Vec<Token> {
        let mut order: Vec<Token> = (1..=self.probs.len() as Token).collect();
        order.sort_by(|&a, &b| {
            self.prob(b)
                .partial_cmp(&self.prob(a))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        order
    }

    /// Inverse-CDF draw from one uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Token {
        let u = F::lit(rng.random::<f64>());
        let mut acc = F::zero();
        let mut last_positive = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > F::zero() {
                last_positive = i;
            }
            acc = acc + p;
            if u < acc {
                return i as Token + 1;
            }
        }
        last_positive as Token + 1
    }

    /// Entries quantized on a `1e-12` grid, used as an exact map key.
    pub fn quantized(&self) -> Vec<i64> {
        self.probs.iter().map(|p| (p.as_f64() * 1e12).round() as i64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_unnormalised_and_negative() {
        assert!(NextTokenDist::new(vec![0.5, 0.4]).is_err());
        assert!(NextTokenDist::new(vec![1.5, -0.5]).is_err());
        assert!(NextTokenDist::new(vec![f64::NAN, 1.0]).is_err());
        assert!(NextTokenDist::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn argmax_ties() {
        assert_eq!(NextTokenDist::<f64>::uniform(3).unique_argmax(), None);
        let d = NextTokenDist::new(vec![0.2, 0.5, 0.3]).unwrap();
        assert_eq!(d.unique_argmax(), Some(2));
        assert_eq!(d.ranked(), vec![2, 3, 1]);
    }

    #[test]
    fn point_mass_samples_its_token() {
        let d = NextTokenDist::<f64>::point_mass(4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| d.sample(&mut rng) == 3));
        assert_eq!(d.log_probs()[0], f64::NEG_INFINITY);
    }
}
