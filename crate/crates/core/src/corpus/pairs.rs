use std::path::Path;

use super::latex::DocumentRecord;
use super::text::{split_sentences, tokenize};
use super::tfidf::{tfidf_salient, CorpusStats};
use crate::error::{Error, Result};
use crate::seq2seq::{assign_bucket, Bucket};

/// A paragraph and its most salient sentence, tokenized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub doc_id: String,
    pub paragraph_index: usize,
    pub source_tokens: Vec<String>,
    pub target_tokens: Vec<String>,
}

/// Unit over which document frequencies are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DfUnit {
    #[default]
    Paragraph,
    Article,
}

/// A paragraph split into tokenized sentences; the paragraph's tokens are
/// their concatenation.
pub fn tokenize_paragraph(paragraph: &str) -> Vec<Vec<String>> {
    split_sentences(paragraph).iter().map(|s| tokenize(s)).collect()
}

pub fn corpus_stats(documents: &[DocumentRecord], unit: DfUnit) -> CorpusStats {
    let units: Vec<Vec<String>> = match unit {
        DfUnit::Paragraph => documents
            .iter()
            .flat_map(|d| d.intro_paragraphs.iter().map(|p| tokenize(p)))
            .collect(),
        DfUnit::Article => documents
            .iter()
            .map(|d| d.intro_paragraphs.iter().flat_map(|p| tokenize(p)).collect())
            .collect(),
    };
    CorpusStats::from_documents(units.iter().map(Vec::as_slice))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairSet {
    pub pairs: Vec<TrainingPair>,
    /// Paragraphs dropped because they fit no bucket.
    pub overflow: usize,
}

/// One pair per paragraph, targeting its TF-IDF salient sentence. Pairs
/// whose token lengths fit no bucket are dropped and counted.
pub fn make_pairs(documents: &[DocumentRecord], stats: &CorpusStats, buckets: &[Bucket]) -> PairSet {
    let mut set = PairSet::default();
    for doc in documents {
        for (k, paragraph) in doc.intro_paragraphs.iter().enumerate() {
            let sentences = tokenize_paragraph(paragraph);
            let source: Vec<String> = sentences.concat();
            let Ok((best, _)) = tfidf_salient(&sentences, stats) else {
                set.overflow += 1;
                continue;
            };
            let target = sentences[best].clone();
            if source.is_empty() || assign_bucket(source.len(), target.len(), buckets).is_none() {
                set.overflow += 1;
                continue;
            }
            set.pairs.push(TrainingPair {
                doc_id: doc.doc_id.clone(),
                paragraph_index: k,
                source_tokens: source,
                target_tokens: target,
            });
        }
    }
    set
}

/// `doc_id<TAB>paragraph_index<TAB>source<TAB>target`, one pair per line.
pub fn pairs_to_tsv(pairs: &[TrainingPair]) -> String {
    let mut s = String::new();
    for p in pairs {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            p.doc_id,
            p.paragraph_index,
            p.source_tokens.join(" "),
            p.target_tokens.join(" ")
        ));
    }
    s
}

pub fn pairs_from_tsv(text: &str, path: &Path) -> Result<Vec<TrainingPair>> {
    let bad = |line: usize, message: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(bad(i + 1, "expected 4 tab-separated fields"));
        }
        let paragraph_index = fields[1].parse().map_err(|_| bad(i + 1, "bad paragraph index"))?;
        let split = |f: &str| f.split_whitespace().map(String::from).collect::<Vec<_>>();
        out.push(TrainingPair {
            doc_id: fields[0].to_string(),
            paragraph_index,
            source_tokens: split(fields[2]),
            target_tokens: split(fields[3]),
        });
    }
    Ok(out)
}

/// Document ids in processing order; blank lines and `#` comments are
/// skipped.
pub fn parse_manifest(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

/// Seeded FNV-1a hash of the doc id mapped to 80/10/10 train/dev/test.
pub fn split_of(doc_id: &str, seed: u64) -> Split {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(doc_id.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    match h % 10 {
        0..=7 => Split::Train,
        8 => Split::Dev,
        _ => Split::Test,
    }
}
