use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// How an approximate oracle perturbs exact log-values within radius `xi`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum NoisePolicy<F> {
    #[default]
    Exact,
    /// i.i.d. uniform on `[-xi, xi]` per coordinate per call.
    Uniform { xi: F },
    /// Every coordinate moved by `xi` toward `threshold`.
    TowardThreshold { xi: F, threshold: F },
}

impl<F: Scalar> NoisePolicy<F> {
    pub fn xi(&self) -> F {
        match *self {
            NoisePolicy::Exact => F::zero(),
            NoisePolicy::Uniform { xi } | NoisePolicy::TowardThreshold { xi, .. } => xi,
        }
    }

    /// Perturbs one exact value. Infinite values (log 0) pass through.
    pub fn perturb<R: Rng + ?Sized>(&self, exact: F, rng: &mut R) -> F {
        if !exact.is_finite() {
            return exact;
        }
        match *self {
            NoisePolicy::Exact => exact,
            NoisePolicy::Uniform { xi } => {
                let u = F::lit(rng.random::<f64>());
                exact + xi * (F::lit(2.0) * u - F::one())
            }
            NoisePolicy::TowardThreshold { xi, threshold } => {
                if exact > threshold {
                    exact - xi
                } else if exact < threshold {
                    exact + xi
                } else {
                    exact
                }
            }
        }
    }
}

