use std::path::PathBuf;

use clap::{Args, ValueEnum};

use super::{create_dir, read, write};
use crate::corpus::{
    build_vocab, corpus_stats, extract_sections, make_pairs, pairs_to_tsv, parse_manifest, DfUnit, DocumentRecord,
};
use crate::error::{Error, Result};
use crate::seq2seq::{parse_buckets, DEFAULT_BUCKETS};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DfUnitArg {
    Paragraph,
    Article,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Directory holding `<doc_id>.tex` files.
    #[arg(long)]
    pub input: PathBuf,
    /// Document ids, one per line, in processing order.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub vocab_size: usize,
    /// Pairs that fit none of these `source:target` buckets are dropped.
    #[arg(long)]
    pub buckets: Option<String>,
    #[arg(long, value_enum, default_value_t = DfUnitArg::Paragraph)]
    pub df_unit: DfUnitArg,
}

pub fn run(a: &PrepareArgs) -> Result<()> {
    let buckets = match &a.buckets {
        Some(s) => parse_buckets(s)?,
        None => DEFAULT_BUCKETS.to_vec(),
    };
    if a.vocab_size <= 4 {
        return Err(Error::Config("vocab_size must exceed 4".into()));
    }
    let ids = parse_manifest(&read(&a.manifest)?);
    if ids.is_empty() {
        return Err(Error::arg(format!("manifest {} lists no documents", a.manifest.display())));
    }

    let mut docs: Vec<DocumentRecord> = Vec::new();
    let mut failures = 0;
    for id in &ids {
        let path = a.input.join(format!("{id}.tex"));
        match read(&path).and_then(|src| extract_sections(id, &src)) {
            Ok(d) => docs.push(d),
            Err(e) => {
                eprintln!("skipping {id}: {e}");
                failures += 1;
            }
        }
    }
    if docs.is_empty() {
        return Err(Error::arg("no document could be extracted"));
    }

    let unit = match a.df_unit {
        DfUnitArg::Paragraph => DfUnit::Paragraph,
        DfUnitArg::Article => DfUnit::Article,
    };
    let stats = corpus_stats(&docs, unit);
    let set = make_pairs(&docs, &stats, &buckets);
    let streams: Vec<&[String]> = set
        .pairs
        .iter()
        .flat_map(|p| [p.source_tokens.as_slice(), p.target_tokens.as_slice()])
        .collect();
    let vocab = build_vocab(streams, a.vocab_size)?;

    create_dir(&a.out.join("abstracts"))?;
    write(&a.out.join("pairs.tsv"), &pairs_to_tsv(&set.pairs))?;
    write(&a.out.join("stats.tsv"), &stats.to_text())?;
    write(&a.out.join("vocab.txt"), &vocab.to_text())?;
    for d in &docs {
        write(&a.out.join("abstracts").join(format!("{}.txt", d.doc_id)), &format!("{}\n", d.abstract_text))?;
    }
    let paragraphs: usize = docs.iter().map(|d| d.intro_paragraphs.len()).sum();
    println!("documents: {}", docs.len());
    println!("paragraphs: {paragraphs}");
    println!("pairs: {}", set.pairs.len());
    println!("overflows: {}", set.overflow);
    println!("extraction failures: {failures}");
    println!("vocabulary: {}", vocab.len());
    Ok(())
}
