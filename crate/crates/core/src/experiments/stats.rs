//! Binomial summaries.

/// Three standard errors of a Bernoulli mean: `3·sqrt(p(1−p)/n)`.
pub fn margin3(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let p = p.clamp(0.0, 1.0);
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Wilson score interval at 95% coverage.
pub fn wilson95(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n_f)) / (1.0 + z2 / n_f);
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / (1.0 + z2 / n_f);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}
