//! LaTeX ingestion, segmentation, tokenization, vocabulary and TF-IDF
//! target selection.

mod latex;
mod pairs;
mod text;
mod tfidf;
mod vocab;

pub use latex::{extract_introduction, extract_sections, latex_to_text, strip_comments, DocumentRecord};
pub use pairs::{
    corpus_stats, make_pairs, pairs_from_tsv, pairs_to_tsv, parse_manifest, split_of, tokenize_paragraph, DfUnit,
    PairSet, Split, TrainingPair,
};
pub use text::{is_placeholder, is_punctuation_token, split_paragraphs, split_sentences, tokenize, PLACEHOLDERS};
pub use tfidf::{is_content_token, is_stopword, tfidf_salient, CorpusStats};
pub use vocab::{build_vocab, Vocabulary, SPECIAL_TOKENS};
