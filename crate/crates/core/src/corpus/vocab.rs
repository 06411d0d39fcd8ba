use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::seq2seq::{NUM_SPECIAL, UNK};

/// Printed forms of PAD, GO, EOS and UNK (ids 0-3).
pub const SPECIAL_TOKENS: [&str; NUM_SPECIAL] = ["_PAD", "_GO", "_EOS", "_UNK"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds from the full id-ordered token list, specials first.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < NUM_SPECIAL || tokens[..NUM_SPECIAL].iter().zip(SPECIAL_TOKENS).any(|(a, b)| a != b) {
            return Err(Error::arg("vocabulary must start with _PAD, _GO, _EOS, _UNK"));
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::arg(format!("bad vocabulary entry {i}: `{t}`")));
            }
            if ids.insert(t.clone(), i).is_some() {
                return Err(Error::arg(format!("duplicate vocabulary entry `{t}`")));
            }
        }
        Ok(Self { tokens, ids })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> usize {
        self.ids.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> &str {
        self.tokens.get(id).map_or(SPECIAL_TOKENS[UNK], String::as_str)
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_string()).collect()
    }

    /// One token per line in id order.
    pub fn to_text(&self) -> String {
        let mut s = self.tokens.join("\n");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_tokens(text.lines().map(str::to_string).collect())
    }
}

/// Specials plus the `max_size - 4` most frequent tokens; equal counts are
/// ordered lexicographically.
pub fn build_vocab<'a, I, S>(streams: I, max_size: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a [S]>,
    S: AsRef<str> + 'a,
{
    if max_size <= NUM_SPECIAL {
        return Err(Error::arg(format!("vocabulary size must exceed {NUM_SPECIAL}")));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for stream in streams {
        for t in stream {
            *counts.entry(t.as_ref()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|(t, _)| !SPECIAL_TOKENS.contains(t))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let tokens = SPECIAL_TOKENS
        .iter()
        .map(|s| s.to_string())
        .chain(ranked.into_iter().take(max_size - NUM_SPECIAL).map(|(t, _)| t.to_string()))
        .collect();
    Vocabulary::from_tokens(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(words: &[&str], max: usize) -> Vocabulary {
        let stream: Vec<String> = words.iter().map(|s| s.to_string()).collect();
        build_vocab([stream.as_slice()], max).unwrap()
    }

    #[test]
    fn frequency_then_lexicographic() {
        let voc = v(&["c", "b", "a", "b", "a", "a"], 6);
        assert_eq!(voc.tokens(), ["_PAD", "_GO", "_EOS", "_UNK", "a", "b"]);
        let tie = v(&["z", "y", "x"], 6);
        assert_eq!(&tie.tokens()[4..], ["x", "y"]);
    }

    #[test]
    fn encode_decode() {
        let voc = v(&["the", "cat", "the"], 10);
        let ids = voc.encode(&["the", "cat"]);
        assert_eq!(voc.decode(&ids), ["the", "cat"]);
        assert_eq!(voc.encode(&["dog"]), vec![UNK]);
        assert_eq!(Vocabulary::from_text(&voc.to_text()).unwrap(), voc);
    }

    #[test]
    fn rejects_small_or_malformed() {
        assert!(build_vocab::<_, String>(std::iter::empty(), 4).is_err());
        assert!(Vocabulary::from_text("a\nb\n").is_err());
        assert!(Vocabulary::from_text("_PAD\n_GO\n_EOS\n_UNK\nx\nx\n").is_err());
    }
}
