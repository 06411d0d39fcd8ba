use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::LazyLock;

use super::text::{is_placeholder, is_punctuation_token};
use crate::error::{Error, Result};

static STOPWORDS: LazyLock<HashSet<&'static str>> =
    LazyLock::new(|| include_str!("stopwords.txt").lines().map(str::trim).filter(|l| !l.is_empty()).collect());

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(token)
}

/// Tokens that carry salience: not stopwords, placeholders or punctuation.
pub fn is_content_token(token: &str) -> bool {
    !is_stopword(token) && !is_placeholder(token) && !is_punctuation_token(token)
}

/// Document frequencies over some unit of text (paragraphs by default).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub document_frequency: BTreeMap<String, usize>,
    pub document_count: usize,
}

impl CorpusStats {
    /// Each item is one document's tokens.
    pub fn from_documents<'a, I, S>(documents: I) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut stats = CorpusStats::default();
        for doc in documents {
            stats.document_count += 1;
            let unique: HashSet<&str> = doc.iter().map(AsRef::as_ref).collect();
            for t in unique {
                *stats.document_frequency.entry(t.to_string()).or_default() += 1;
            }
        }
        stats
    }

    pub fn df(&self, token: &str) -> usize {
        self.document_frequency.get(token).copied().unwrap_or(0)
    }

    /// `ln(N / max(df, 1))`.
    pub fn idf(&self, token: &str) -> f64 {
        (self.document_count as f64 / self.df(token).max(1) as f64).ln()
    }

    /// `# documents=N` then `token<TAB>df` lines sorted by token.
    pub fn to_text(&self) -> String {
        let mut s = format!("# documents={}\n", self.document_count);
        for (t, df) in &self.document_frequency {
            s.push_str(t);
            s.push('\t');
            s.push_str(&df.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let document_count = lines
            .next()
            .and_then(|l| l.strip_prefix("# documents="))
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| Error::arg("stats file must start with `# documents=N`"))?;
        let mut document_frequency = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let (t, df) = line
                .split_once('\t')
                .and_then(|(t, d)| Some((t, d.parse::<usize>().ok()?)))
                .ok_or_else(|| Error::arg(format!("bad stats line {}: `{line}`", i + 2)))?;
            document_frequency.insert(t.to_string(), df);
        }
        Ok(Self {
            document_frequency,
            document_count,
        })
    }
}

/// Picks the most salient sentence of a paragraph given as tokenized
/// sentences. A sentence scores the mean, over its content-token
/// occurrences, of `tf · idf` with `tf = count in paragraph / paragraph
/// length`; a sentence with no content tokens scores 0. Returns the index
/// and score of the best sentence, the earliest on ties.
pub fn tfidf_salient<S: AsRef<str>>(sentences: &[Vec<S>], stats: &CorpusStats) -> Result<(usize, f64)> {
    if sentences.is_empty() {
        return Err(Error::arg("paragraph has no sentences"));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut length = 0usize;
    for t in sentences.iter().flatten() {
        *counts.entry(t.as_ref()).or_default() += 1;
        length += 1;
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, sentence) in sentences.iter().enumerate() {
        let mut sum = 0.0;
        let mut n = 0usize;
        for t in sentence.iter().map(AsRef::as_ref).filter(|t| is_content_token(t)) {
            let tf = counts[t] as f64 / length as f64;
            sum += tf * stats.idf(t);
            n += 1;
        }
        let score = if n == 0 { 0.0 } else { sum / n as f64 };
        if score > best.1 {
            best = (i, score);
        }
    }
    Ok(best)
}
