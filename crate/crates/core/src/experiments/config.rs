//! Flat `key = value` experiment configuration.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Environment variable that overrides the master seed.
pub const SEED_ENV: &str = "PREFIX_ORACLE_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    HiddenPathScaling,
    NoResetHardness,
    LeaderTrieMatrix,
    BridgeSeparation,
    TvCertification,
    SeqscoreRecovery,
    GibbsChecks,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 7] = [
        ExperimentName::HiddenPathScaling,
        ExperimentName::NoResetHardness,
        ExperimentName::LeaderTrieMatrix,
        ExperimentName::BridgeSeparation,
        ExperimentName::TvCertification,
        ExperimentName::SeqscoreRecovery,
        ExperimentName::GibbsChecks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentName::HiddenPathScaling => "hidden-path-scaling",
            ExperimentName::NoResetHardness => "no-reset-hardness",
            ExperimentName::LeaderTrieMatrix => "leader-trie-matrix",
            ExperimentName::BridgeSeparation => "bridge-separation",
            ExperimentName::TvCertification => "tv-certification",
            ExperimentName::SeqscoreRecovery => "seqscore-recovery",
            ExperimentName::GibbsChecks => "gibbs-checks",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown experiment `{s}`")))
    }
}

/// Perturbation applied by approximate logit oracles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    Uniform,
    /// Every coordinate pushed toward the decision threshold.
    Adversarial,
}

/// Leader-trie access interfaces compared by the matrix experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrieInterface {
    PrefixTop,
    Logit,
    Sample,
}

/// Padding rules for sequence-score recovery.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaddingRule {
    AllOnes,
    AllLast,
    Cyclic,
    Alternating,
    Hashed,
}

macro_rules! keyword_enum {
    ($ty:ty, $($variant:ident => $text:literal),+ $(,)?) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $(<$ty>::$variant => $text),+ }
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok(<$ty>::$variant),)+
                    _ => Err(Error::Parse(format!("unknown {} `{s}`", stringify!($ty)))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

keyword_enum!(NoiseMode, Uniform => "uniform", Adversarial => "adversarial");
keyword_enum!(TrieInterface, PrefixTop => "prefix-top", Logit => "logit", Sample => "sample");
keyword_enum!(
    PaddingRule,
    AllOnes => "all-ones",
    AllLast => "all-last",
    Cyclic => "cyclic",
    Alternating => "alternating",
    Hashed => "hashed",
);

/// Every parameter an experiment reads. Lists drive sweeps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    pub k: usize,
    pub h: Vec<usize>,
    /// Scaffold length; defaults to `floor((H−1)/2)`.
    pub d: Option<usize>,
    /// Suffix length; defaults to `H − D − 1`.
    pub l: Option<usize>,
    pub lambda: Vec<f64>,
    pub eta: f64,
    pub beta: f64,
    pub delta: f64,
    pub xi: f64,
    pub noise: NoiseMode,
    /// Node budget for sampled trie recovery; defaults to `|I(T)|`.
    pub budget: Option<usize>,
    /// Rollout counts for the no-reset distinguisher.
    pub q: Vec<usize>,
    pub interfaces: Vec<TrieInterface>,
    pub paddings: Vec<PaddingRule>,
    /// Horizons tabulated on the certificate side of the bridge experiment.
    pub certificate_h: Vec<usize>,
    /// Horizons at which the cubic-budget certificate is asserted below 1/3.
    pub certificate_check_h: Vec<usize>,
    pub reward_queries: usize,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Record wall-clock time per trial (makes CSVs non-reproducible).
    pub timing: bool,
}

impl ExperimentConfig {
    /// Defaults for one experiment.
    pub fn defaults(experiment: ExperimentName) -> Self {
        let base = Self {
            experiment,
            k: 2,
            h: vec![10],
            d: None,
            l: None,
            lambda: vec![1.0],
            eta: 0.5,
            beta: 1.0,
            delta: 0.1,
            xi: 0.0,
            noise: NoiseMode::Uniform,
            budget: None,
            q: vec![0, 4],
            interfaces: vec![TrieInterface::PrefixTop, TrieInterface::Logit, TrieInterface::Sample],
            paddings: vec![
                PaddingRule::AllOnes,
                PaddingRule::AllLast,
                PaddingRule::Cyclic,
                PaddingRule::Alternating,
                PaddingRule::Hashed,
            ],
            certificate_h: vec![9, 21, 41, 61, 81, 101],
            certificate_check_h: vec![21],
            reward_queries: 1,
            trials: 200,
            seed: 0,
            out: None,
            timing: false,
        };
        match experiment {
            ExperimentName::HiddenPathScaling => Self { h: vec![5, 10, 20, 40], ..base },
            ExperimentName::NoResetHardness => Self { h: vec![8], trials: 10_000, ..base },
            ExperimentName::LeaderTrieMatrix => Self { k: 3, h: vec![4], trials: 1000, ..base },
            ExperimentName::BridgeSeparation => Self { h: vec![9], trials: 300, ..base },
            ExperimentName::TvCertification => Self { h: vec![2, 3, 4], lambda: vec![0.5, 1.0, 2.0], ..base },
            ExperimentName::SeqscoreRecovery => Self { k: 3, h: vec![5], trials: 50, ..base },
            ExperimentName::GibbsChecks => Self { h: vec![3], d: Some(1), l: Some(1), trials: 1000, ..base },
        }
    }

    /// Parses a config file. The `experiment` key selects the defaults that
    /// the remaining keys override.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }
        let name = pairs
            .iter()
            .find(|(k, _)| k == "experiment")
            .ok_or_else(|| Error::Parse("missing `experiment` key".into()))?
            .1
            .parse()?;
        let mut config = Self::defaults(name);
        for (key, value) in &pairs {
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    /// Sets one key; the same names serve config files and CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: String| Error::Parse(format!("{key} = {value}: {e}"));
        match key {
            "experiment" => self.experiment = value.parse()?,
            "K" | "k" => self.k = value.parse().map_err(|e| bad(format!("{e}")))?,
            "H" | "h" => self.h = parse_list(value, parse_usize).map_err(bad)?,
            "D" | "d" => self.d = Some(parse_usize(value).map_err(bad)?),
            "L" | "l" => self.l = Some(parse_usize(value).map_err(bad)?),
            "lambda" => self.lambda = parse_list(value, parse_real).map_err(bad)?,
            "eta" => self.eta = parse_real(value).map_err(bad)?,
            "beta" => self.beta = parse_real(value).map_err(bad)?,
            "delta" => self.delta = parse_real(value).map_err(bad)?,
            "xi" => self.xi = parse_real(value).map_err(bad)?,
            "noise" => self.noise = value.parse()?,
            "S" | "budget" => self.budget = Some(parse_usize(value).map_err(bad)?),
            "q" => self.q = parse_list(value, parse_usize).map_err(bad)?,
            "interfaces" => self.interfaces = parse_list(value, |s| s.parse().map_err(|e: Error| e.to_string())).map_err(bad)?,
            "paddings" => self.paddings = parse_list(value, |s| s.parse().map_err(|e: Error| e.to_string())).map_err(bad)?,
            "certificate_H" | "certificate_h" => self.certificate_h = parse_list(value, parse_usize).map_err(bad)?,
            "certificate_check_H" | "certificate_check_h" => {
                self.certificate_check_h = parse_list(value, parse_usize).map_err(bad)?
            }
            "reward_queries" => self.reward_queries = parse_usize(value).map_err(bad)?,
            "trials" => self.trials = parse_usize(value).map_err(bad)?,
            "seed" => self.seed = value.parse().map_err(|e| bad(format!("{e}")))?,
            "out" => self.out = Some(PathBuf::from(value)),
            "timing" => self.timing = value.parse().map_err(|e| bad(format!("{e}")))?,
            _ => return Err(Error::Parse(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies the `PREFIX_ORACLE_SEED` override when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v.trim().parse().map_err(|e| Error::Parse(format!("{SEED_ENV}={v}: {e}")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidParameter(m));
        if self.k < 2 {
            return fail(format!("K={} must be >= 2", self.k));
        }
        if self.h.is_empty() || self.h.contains(&0) {
            return fail("H must be a nonempty list of positive horizons".into());
        }
        if self.lambda.is_empty() || self.lambda.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return fail("lambda must be a nonempty list of finite values >= 0".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta={} must lie in (0,1)", self.delta));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) || !(self.beta > 0.0) {
            return fail("need eta in (0,1] and beta > 0".into());
        }
        if !(self.xi >= 0.0) || !self.xi.is_finite() {
            return fail(format!("xi={} must be finite and >= 0", self.xi));
        }
        if self.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        Ok(())
    }

    /// Canonical config text; parsing it gives back the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |v: &[String]| v.join(",");
        let nums = |v: &[usize]| join(&v.iter().map(|x| x.to_string()).collect::<Vec<_>>());
        let _ = writeln!(s, "experiment = {}", self.experiment);
        let _ = writeln!(s, "K = {}", self.k);
        let _ = writeln!(s, "H = {}", nums(&self.h));
        if let Some(d) = self.d {
            let _ = writeln!(s, "D = {d}");
        }
        if let Some(l) = self.l {
            let _ = writeln!(s, "L = {l}");
        }
        let _ = writeln!(s, "lambda = {}", join(&self.lambda.iter().map(|x| x.to_string()).collect::<Vec<_>>()));
        let _ = writeln!(s, "eta = {}", self.eta);
        let _ = writeln!(s, "beta = {}", self.beta);
        let _ = writeln!(s, "delta = {}", self.delta);
        let _ = writeln!(s, "xi = {}", self.xi);
        let _ = writeln!(s, "noise = {}", self.noise);
        if let Some(b) = self.budget {
            let _ = writeln!(s, "S = {b}");
        }
        let _ = writeln!(s, "q = {}", nums(&self.q));
        let _ = writeln!(s, "interfaces = {}", join(&self.interfaces.iter().map(|x| x.to_string()).collect::<Vec<_>>()));
        let _ = writeln!(s, "paddings = {}", join(&self.paddings.iter().map(|x| x.to_string()).collect::<Vec<_>>()));
        let _ = writeln!(s, "certificate_H = {}", nums(&self.certificate_h));
        let _ = writeln!(s, "certificate_check_H = {}", nums(&self.certificate_check_h));
        let _ = writeln!(s, "reward_queries = {}", self.reward_queries);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out = {}", out.display());
        }
        let _ = writeln!(s, "timing = {}", self.timing);
        s
    }

    /// `(D, L)` for horizon `h`.
    pub fn split(&self, h: usize) -> Result<(usize, usize)> {
        let d = self.d.unwrap_or(h.saturating_sub(1) / 2);
        let l = self.l.unwrap_or(h.saturating_sub(d + 1));
        if d + l + 1 != h || d == 0 || l == 0 {
            return Err(Error::InvalidParameter(format!("cannot split H={h} into D={d}, L={l} with D+L+1=H")));
        }
        Ok((d, l))
    }
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    value.split(',').map(|s| item(s.trim())).collect()
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.parse().map_err(|e| format!("{e}"))
}

/// A decimal, or `log:x` meaning `ln x`.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    match s.strip_prefix("log:") {
        Some(rest) => {
            let x: f64 = rest.trim().parse().map_err(|e| format!("{e}"))?;
            if !(x > 0.0) {
                return Err(format!("log argument {x} must be > 0"));
            }
            Ok(x.ln())
        }
        None => s.parse().map_err(|e| format!("{e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_overrides_defaults() {
        let c = ExperimentConfig::parse(
            "# scaling\nexperiment = hidden-path-scaling\nH = 5, 10\nlambda = log:3\ntrials=7 # few\n",
        )
        .unwrap();
        assert_eq!(c.h, vec![5, 10]);
        assert!((c.lambda[0] - 3f64.ln()).abs() < 1e-15);
        assert_eq!(c.trials, 7);
        assert_eq!(c.delta, 0.1);
    }

    #[test]
    fn text_round_trip() {
        for name in ExperimentName::ALL {
            let mut c = ExperimentConfig::defaults(name);
            c.out = Some("x.csv".into());
            c.budget = Some(5);
            assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("K = 2").is_err());
        assert!(ExperimentConfig::parse("experiment = nope").is_err());
        assert!(ExperimentConfig::parse("experiment = gibbs-checks\ncolour = red").is_err());
        assert!(ExperimentConfig::parse("experiment = gibbs-checks\ntrials = 0").is_err());
        assert!(ExperimentConfig::parse("experiment = gibbs-checks\ndelta = 1").is_err());
        assert!(ExperimentConfig::parse("experiment = gibbs-checks\nlambda = log:-1").is_err());
    }

    #[test]
    fn balanced_split() {
        let c = ExperimentConfig::defaults(ExperimentName::BridgeSeparation);
        assert_eq!(c.split(9).unwrap(), (4, 4));
        assert_eq!(c.split(21).unwrap(), (10, 10));
        assert!(c.split(2).is_err());
    }
}
