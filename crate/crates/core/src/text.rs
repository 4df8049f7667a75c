//! Line-oriented text format for models.
//!
//! ```text
//! K H family
//! <payload>
//! ```
//!
//! Payloads:
//! * `hidden-path`: `lambda <real>` and `z <t1> ... <tH>`.
//! * `leader-trie`: one `prefix:token` line per internal node, prefixes
//!   written as dot-separated tokens with the root as the empty string.
//! * `bridge`: `D`, `L`, `lambda`, `eta`, `beta`, `reward`, `scaffold`,
//!   `suffix`, `bit` and `terminals` lines, each `key value...`.
//!
//! Blank lines and lines starting with `#` are ignored. Reals are written with
//! the shortest representation that parses back to the same value.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::families::{BridgeInstance, BridgeSetup, HiddenPathModel, LeaderTrie};
use crate::scalar::Scalar;
use crate::vocab::{Prefix, Token, VocabSpec};

#[derive(Clone, Debug, PartialEq)]
pub enum ModelText<F> {
    HiddenPath(HiddenPathModel<F>),
    LeaderTrie(LeaderTrie),
    Bridge(BridgeInstance<F>),
}

fn join(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_real<F: Scalar>(s: &str) -> Result<F> {
    s.parse::<f64>()
        .map(F::lit)
        .map_err(|_| Error::Parse(format!("bad real `{s}`")))
}

fn parse_int<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("bad integer `{s}`")))
}

fn parse_token_list(s: &str) -> Result<Vec<Token>> {
    s.split_whitespace().map(parse_int::<Token>).collect()
}

impl<F: Scalar> ModelText<F> {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            ModelText::HiddenPath(m) => {
                let v = crate::generator::Generator::<F>::vocab(m);
                let _ = writeln!(out, "{} {} hidden-path", v.k(), v.horizon());
                let _ = writeln!(out, "lambda {}", m.lambda());
                let _ = writeln!(out, "z {}", join(m.hidden_path()));
            }
            ModelText::LeaderTrie(t) => {
                let v = t.vocab();
                let _ = writeln!(out, "{} {} leader-trie", v.k(), v.horizon());
                for (p, b) in t.branch() {
                    let key = if p.is_root() { String::new() } else { p.to_string() };
                    let _ = writeln!(out, "{key}:{b}");
                }
            }
            ModelText::Bridge(inst) => {
                let s = inst.setup();
                let v = s.vocab();
                let _ = writeln!(out, "{} {} bridge", v.k(), v.horizon());
                let _ = writeln!(out, "D {}", s.scaffold_len());
                let _ = writeln!(out, "L {}", s.suffix_len());
                let _ = writeln!(out, "lambda {}", s.lambda());
                let _ = writeln!(out, "eta {}", s.eta());
                let _ = writeln!(out, "beta {}", s.beta());
                let _ = writeln!(out, "reward {}", s.reward());
                let _ = writeln!(out, "scaffold {}", join(s.scaffold()));
                let _ = writeln!(out, "suffix {}", join(inst.suffix()));
                let _ = writeln!(out, "bit {}", inst.bit());
                let _ = writeln!(out, "terminals {}", join(&s.terminals()));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty model text".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [k, h, family] = fields[..] else {
            return Err(Error::Parse(format!("bad header `{header}`, expected `K H family`")));
        };
        let vocab = VocabSpec::new(parse_int(k)?, parse_int(h)?)?;
        match family {
            "hidden-path" => {
                let kv = key_values(lines)?;
                let lambda = parse_real(get(&kv, "lambda")?)?;
                let z = parse_token_list(get(&kv, "z")?)?;
                Ok(ModelText::HiddenPath(HiddenPathModel::new(vocab, lambda, z)?))
            }
            "leader-trie" => {
                let mut branch = BTreeMap::new();
                for line in lines {
                    let (p, b) = line
                        .rsplit_once(':')
                        .ok_or_else(|| Error::Parse(format!("bad trie line `{line}`")))?;
                    let prefix: Prefix = p.parse()?;
                    if branch.insert(prefix, parse_int(b.trim())?).is_some() {
                        return Err(Error::Parse(format!("duplicate trie node `{p}`")));
                    }
                }
                Ok(ModelText::LeaderTrie(LeaderTrie::new(vocab, branch)?))
            }
            "bridge" => {
                let kv = key_values(lines)?;
                let d: usize = parse_int(get(&kv, "D")?)?;
                let l: usize = parse_int(get(&kv, "L")?)?;
                let scaffold = parse_token_list(get(&kv, "scaffold")?)?;
                let terminals = parse_token_list(get(&kv, "terminals")?)?;
                let [t0, t1] = terminals[..] else {
                    return Err(Error::Parse("`terminals` needs exactly two tokens".into()));
                };
                if scaffold.len() != d || d + l + 1 != vocab.horizon() {
                    return Err(Error::Parse(format!(
                        "inconsistent bridge sizes: D={d}, L={l}, scaffold length {}, H={}",
                        scaffold.len(),
                        vocab.horizon()
                    )));
                }
                let setup = BridgeSetup::new(
                    vocab.k(),
                    scaffold,
                    l,
                    [t0, t1],
                    parse_real(get(&kv, "lambda")?)?,
                    parse_real(get(&kv, "eta")?)?,
                    parse_real(get(&kv, "beta")?)?,
                )?
                .with_reward(parse_real(get(&kv, "reward")?)?)?;
                let inst = setup.instance(parse_token_list(get(&kv, "suffix")?)?, parse_int(get(&kv, "bit")?)?)?;
                Ok(ModelText::Bridge(inst))
            }
            other => Err(Error::Parse(format!("unknown family `{other}`"))),
        }
    }
}

fn key_values<'a>(lines: impl Iterator<Item = &'a str>) -> Result<HashMap<&'a str, &'a str>> {
    let mut kv = HashMap::new();
    for line in lines {
        let (k, v) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        if kv.insert(k, v.trim()).is_some() {
            return Err(Error::Parse(format!("duplicate key `{k}`")));
        }
    }
    Ok(kv)
}

fn get<'a>(kv: &HashMap<&str, &'a str>, key: &str) -> Result<&'a str> {
    kv.get(key).copied().ok_or_else(|| Error::Parse(format!("missing key `{key}`")))
}
