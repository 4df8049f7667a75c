use serde::Serialize;

use crate::error::{Error, Result};
use crate::policy::CompletionPolicy;
use crate::scalar::Scalar;

use super::check_cap;

/// A KL value; `support_violation` marks `P` putting mass where `Q` has none,
/// in which case `value` is `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Divergence<F> {
    pub value: F,
    pub support_violation: bool,
}

/// `Σ p·log(p/q)` with `0·log(0/q) = 0`.
pub fn kl_divergence<F: Scalar>(p: &[F], q: &[F]) -> Result<Divergence<F>> {
    if p.len() != q.len() {
        return Err(Error::InvalidParameter(format!(
            "distributions over {} and {} outcomes",
            p.len(),
            q.len()
        )));
    }
    let mut value = F::zero();
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > F::zero() {
            if !(qi > F::zero()) {
                return Ok(Divergence { value: F::infinity(), support_violation: true });
            }
            value = value + pi * (pi / qi).ln();
        }
    }
    // rounding can leave tiny negatives for equal inputs
    Ok(Divergence { value: value.max(F::zero()), support_violation: false })
}

/// Binary divergence `kl(m‖q) = m·log(m/q) + (1−m)·log((1−m)/(1−q))`.
pub fn binary_kl<F: Scalar>(m: F, q: F) -> Result<Divergence<F>> {
    kl_divergence(&[m, F::one() - m], &[q, F::one() - q])
}

/// KL between two completion policies by enumeration of `Σ^H`.
pub fn policy_kl<F: Scalar>(
    p: &dyn CompletionPolicy<F>,
    q: &dyn CompletionPolicy<F>,
    cap: u128,
) -> Result<Divergence<F>> {
    let vocab = p.vocab();
    if vocab != q.vocab() {
        return Err(Error::InvalidParameter("policies over different vocabularies".into()));
    }
    check_cap(&vocab, cap)?;
    let (ps, qs): (Vec<F>, Vec<F>) = vocab.completions().map(|y| (p.prob(&y), q.prob(&y))).unzip();
    kl_divergence(&ps, &qs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_inputs_give_zero() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl_divergence(&p, &p).unwrap().value, 0.0);
    }

    #[test]
    fn support_violation_is_infinite() {
        let d = kl_divergence::<f64>(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!(d.support_violation);
        assert!(d.value.is_infinite());
        let d = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!(!d.support_violation);
        assert!((d.value - 2f64.ln()).abs() < 1e-15);
        assert!(kl_divergence(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn binary_two_term_formula() {
        let (m, q): (f64, f64) = (0.2, 0.01);
        let direct = m * (m / q).ln() + (1.0 - m) * ((1.0 - m) / (1.0 - q)).ln();
        assert!((binary_kl(m, q).unwrap().value - direct).abs() < 1e-15);
    }
}
