use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{signal_probs, BridgeSetup};
use crate::scalar::Scalar;

/// Shape of a bridge family, enough to evaluate the no-reset certificate
/// without materialising an instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CertificateParams<F> {
    pub k: usize,
    pub lambda: F,
    /// Scaffold length `D`.
    pub d: usize,
    /// Suffix length `L`.
    pub l: usize,
}

impl<F: Scalar> CertificateParams<F> {
    /// Balanced split of a horizon: `D = floor((H−1)/2)`, `L = H−D−1`.
    pub fn balanced(k: usize, lambda: F, h: usize) -> Result<Self> {
        if h < 3 {
            return Err(Error::InvalidParameter(format!("horizon {h} too short for a scaffold and suffix")));
        }
        let d = (h - 1) / 2;
        Ok(Self { k, lambda, d, l: h - d - 1 })
    }

    pub fn from_setup(setup: &BridgeSetup<F>) -> Self {
        Self { k: setup.vocab().k(), lambda: setup.lambda(), d: setup.scaffold_len(), l: setup.suffix_len() }
    }

    pub fn horizon(&self) -> usize {
        self.d + self.l + 1
    }

    /// `N = 2·K^L`, as a float so that long suffixes do not overflow.
    pub fn num_targets(&self) -> F {
        F::lit(2.0) * F::from_count(self.k).powi(self.l as i32)
    }
}

/// `q_g·p_plus^D + q_r/N + 4/(N − q_r)`: a ceiling on the success probability
/// of any no-reset procedure with `q_g` generator and `q_r` reward queries.
pub fn lower_bound_certificate<F: Scalar>(params: &CertificateParams<F>, q_g: F, q_r: F) -> Result<F> {
    if params.k < 2 {
        return Err(Error::InvalidParameter(format!("vocabulary size {} < 2", params.k)));
    }
    if !(q_g >= F::zero() && q_r >= F::zero()) {
        return Err(Error::InvalidParameter("query budgets must be nonnegative".into()));
    }
    let n = params.num_targets();
    if q_r >= n {
        return Err(Error::InvalidParameter(format!("reward budget {q_r} must be below N = {n}")));
    }
    let (p_plus, _) = signal_probs::<F>(params.k, params.lambda);
    Ok(q_g * p_plus.powi(params.d as i32) + q_r / n + F::lit(4.0) / (n - q_r))
}

/// `1/2 + q·p_plus^(H−1)/2` for distinguishing hidden-path twins with `q`
/// rollouts.
pub fn no_reset_success_ceiling<F: Scalar>(p_plus: F, horizon: usize, queries: usize) -> F {
    let half = F::lit(0.5);
    half + F::from_count(queries) * p_plus.powi(horizon as i32 - 1) * half
}

/// Rollouts needed before the success ceiling can reach 2/3:
/// `1/(3·p_plus^(H−1))`.
pub fn no_reset_query_lower_bound<F: Scalar>(p_plus: F, horizon: usize) -> F {
    F::one() / (F::lit(3.0) * p_plus.powi(horizon as i32 - 1))
}
