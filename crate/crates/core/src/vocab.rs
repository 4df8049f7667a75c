//! Vocabulary, prefix-tree addresses and completions.
//!
//! Tokens are 1-indexed everywhere in the public interface: the vocabulary of
//! size `K` is `{1, ..., K}`.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Token = u32;

/// Vocabulary size `K` and horizon `H`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VocabSpec {
    k: usize,
    h: usize,
}

impl VocabSpec {
    pub fn new(k: usize, h: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("vocabulary size K={k} must be >= 2")));
        }
        if h < 1 {
            return Err(Error::InvalidParameter(format!("horizon H={h} must be >= 1")));
        }
        if k > Token::MAX as usize {
            return Err(Error::InvalidParameter(format!("vocabulary size K={k} too large")));
        }
        Ok(Self { k, h })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn horizon(&self) -> usize {
        self.h
    }

    pub fn tokens(&self) -> impl Iterator<Item = Token> + Clone {
        1..=self.k as Token
    }

    /// `K^H`, saturating at `u128::MAX`.
    pub fn num_completions(&self) -> u128 {
        (self.k as u128)
            .checked_pow(self.h as u32)
            .unwrap_or(u128::MAX)
    }

    pub fn check_token(&self, token: Token) -> Result<()> {
        if token == 0 || token as usize > self.k {
            return Err(Error::InvalidToken { token, k: self.k });
        }
        Ok(())
    }

    fn check_tokens(&self, tokens: &[Token]) -> Result<()> {
        tokens.iter().try_for_each(|&t| self.check_token(t))
    }

    /// A query prefix has length `< H`.
    pub fn check_query_prefix(&self, p: &[Token]) -> Result<()> {
        if p.len() >= self.h {
            return Err(Error::InvalidPrefix { len: p.len(), horizon: self.h });
        }
        self.check_tokens(p)
    }

    pub fn check_completion(&self, y: &[Token]) -> Result<()> {
        if y.len() != self.h {
            return Err(Error::InvalidCompletion { len: y.len(), horizon: self.h });
        }
        self.check_tokens(y)
    }

    /// Every completion in lexicographic order. Callers bound the size first.
    pub fn completions(&self) -> CompletionIter {
        CompletionIter { k: self.k as Token, next: Some(vec![1; self.h]) }
    }

    /// Every query prefix (length `< H`), shortest first.
    pub fn query_prefixes(&self) -> Vec<Prefix> {
        let mut out = vec![Prefix::root()];
        let mut frontier = vec![Prefix::root()];
        for _ in 1..self.h {
            let mut next = Vec::with_capacity(frontier.len() * self.k);
            for p in &frontier {
                for a in self.tokens() {
                    next.push(p.child(a));
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }
}

pub struct CompletionIter {
    k: Token,
    next: Option<Vec<Token>>,
}

impl Iterator for CompletionIter {
    type Item = Completion;

    fn next(&mut self) -> Option<Completion> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if succ[i] < self.k {
                succ[i] += 1;
                self.next = Some(succ);
                break;
            }
            succ[i] = 1;
        }
        Some(Completion(current))
    }
}

fn fmt_tokens(tokens: &[Token], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            f.write_str(".")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

fn parse_tokens(s: &str) -> Result<Vec<Token>> {
    let s = s.trim();
    if s.is_empty() || s == "∅" || s.eq_ignore_ascii_case("root") {
        return Ok(Vec::new());
    }
    s.split(['.', ' '])
        .filter(|part| !part.is_empty())
        .map(|part| {
            part.parse::<Token>()
                .map_err(|_| Error::Parse(format!("bad token `{part}` in `{s}`")))
        })
        .collect()
}

/// A node of the prefix tree; the empty prefix is the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Prefix(Vec<Token>);

impl Prefix {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn new(tokens: Vec<Token>) -> Self {
        Self(tokens)
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, token: Token) -> Prefix {
        let mut tokens = Vec::with_capacity(self.0.len() + 1);
        tokens.extend_from_slice(&self.0);
        tokens.push(token);
        Prefix(tokens)
    }

    pub fn parent(&self) -> Option<Prefix> {
        if self.0.is_empty() {
            None
        } else {
            Some(Prefix(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// Whether `self` is a (not necessarily proper) prefix of `tokens`.
    pub fn is_prefix_of(&self, tokens: &[Token]) -> bool {
        tokens.len() >= self.0.len() && tokens[..self.0.len()] == self.0[..]
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.0
    }
}

impl Deref for Prefix {
    type Target = [Token];
    fn deref(&self) -> &[Token] {
        &self.0
    }
}

impl std::borrow::Borrow<[Token]> for Prefix {
    fn borrow(&self) -> &[Token] {
        &self.0
    }
}

impl From<&[Token]> for Prefix {
    fn from(tokens: &[Token]) -> Self {
        Prefix(tokens.to_vec())
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("∅");
        }
        fmt_tokens(&self.0, f)
    }
}

impl FromStr for Prefix {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_tokens(s).map(Prefix)
    }
}

/// A full response of exactly `H` tokens.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Completion(Vec<Token>);

impl Completion {
    pub fn new(vocab: &VocabSpec, tokens: Vec<Token>) -> Result<Self> {
        vocab.check_completion(&tokens)?;
        Ok(Self(tokens))
    }

    /// Builds a completion without range checks; used by enumerators.
    pub(crate) fn from_raw(tokens: Vec<Token>) -> Self {
        Self(tokens)
    }

    /// The prefix `y_{<t}` of the first `t` tokens (clamped to the length).
    pub fn prefix(&self, t: usize) -> Prefix {
        Prefix(self.0[..t.min(self.0.len())].to_vec())
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.0
    }
}

impl Deref for Completion {
    type Target = [Token];
    fn deref(&self) -> &[Token] {
        &self.0
    }
}

impl fmt::Display for Completion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_tokens(&self.0, f)
    }
}

impl FromStr for Completion {
    type Err = Error;
    /// Parses tokens without a horizon check; validate with [`VocabSpec::check_completion`].
    fn from_str(s: &str) -> Result<Self> {
        parse_tokens(s).map(Completion)
    }
}
