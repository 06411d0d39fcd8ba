//! ROUGE-N and ROUGE-L against a single reference.

use std::collections::HashMap;

use crate::corpus::tokenize;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RougeScore {
    pub recall: f64,
    pub precision: f64,
    pub f_score: f64,
}

impl RougeScore {
    /// F with β = 1; zero when recall and precision are both zero.
    pub fn new(recall: f64, precision: f64) -> Self {
        Self::with_beta(recall, precision, 1.0)
    }

    pub fn with_beta(recall: f64, precision: f64, beta: f64) -> Self {
        let b2 = beta * beta;
        let denom = recall + b2 * precision;
        let f_score = if recall + precision == 0.0 || denom == 0.0 {
            0.0
        } else {
            (1.0 + b2) * recall * precision / denom
        };
        Self {
            recall,
            precision,
            f_score,
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_default() += 1;
        }
    }
    counts
}

/// Clipped n-gram overlap. `n` must be at least 1.
pub fn rouge_n<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> RougeScore {
    assert!(n >= 1, "rouge_n needs n >= 1");
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let overlap: usize = cand
        .iter()
        .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    let cand_total = candidate.len().saturating_sub(n - 1);
    let ref_total = reference.len().saturating_sub(n - 1);
    RougeScore::new(ratio(overlap, ref_total), ratio(overlap, cand_total))
}

/// Length of the longest common subsequence.
pub fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Sequence-level LCS score.
pub fn rouge_l<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> RougeScore {
    let l = lcs_len(candidate, reference);
    RougeScore::new(ratio(l, reference.len()), ratio(l, candidate.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RougeReport {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    pub rouge_l: RougeScore,
}

impl RougeReport {
    pub const METRICS: [&'static str; 3] = ["rouge1", "rouge2", "rougeL"];

    pub fn scores(&self) -> [RougeScore; 3] {
        [self.rouge1, self.rouge2, self.rouge_l]
    }

    pub fn from_tokens<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> Self {
        Self {
            rouge1: rouge_n(candidate, reference, 1),
            rouge2: rouge_n(candidate, reference, 2),
            rouge_l: rouge_l(candidate, reference),
        }
    }
}

/// Joins paragraph summaries in order and scores them against the abstract,
/// both sides tokenized with the corpus tokenizer.
pub fn evaluate_article<S: AsRef<str>>(summaries: &[S], abstract_text: &str) -> Result<RougeReport> {
    if abstract_text.trim().is_empty() {
        return Err(Error::arg("empty gold abstract"));
    }
    let joined = summaries.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
    Ok(RougeReport::from_tokens(&tokenize(&joined), &tokenize(abstract_text)))
}

/// Per-metric arithmetic mean of recall, precision and F.
pub fn macro_mean(reports: &[RougeReport]) -> RougeReport {
    if reports.is_empty() {
        return RougeReport::default();
    }
    let n = reports.len() as f64;
    let mean = |pick: fn(&RougeReport) -> RougeScore| {
        let (r, p, f) = reports.iter().map(pick).fold((0.0, 0.0, 0.0), |(r, p, f), s| {
            (r + s.recall, p + s.precision, f + s.f_score)
        });
        RougeScore {
            recall: r / n,
            precision: p / n,
            f_score: f / n,
        }
    };
    RougeReport {
        rouge1: mean(|r| r.rouge1),
        rouge2: mean(|r| r.rouge2),
        rouge_l: mean(|r| r.rouge_l),
    }
}

/// CSV with `doc_id,metric,recall,precision,f_score` rows for every
/// article, followed by `MEAN` rows.
pub fn report_csv(articles: &[(String, RougeReport)]) -> String {
    let mut s = String::from("doc_id,metric,recall,precision,f_score\n");
    let mut push = |id: &str, r: &RougeReport| {
        for (name, sc) in RougeReport::METRICS.iter().zip(r.scores()) {
            s.push_str(&format!("{id},{name},{:.5},{:.5},{:.5}\n", sc.recall, sc.precision, sc.f_score));
        }
    };
    for (id, r) in articles {
        push(id, r);
    }
    let reports: Vec<RougeReport> = articles.iter().map(|(_, r)| *r).collect();
    push("MEAN", &macro_mean(&reports));
    s
}
