use std::path::PathBuf;

use clap::Args;

use super::{read, write};
use crate::corpus::{extract_introduction, tokenize_paragraph, Vocabulary};
use crate::error::Result;
use crate::seq2seq::Checkpoint;

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub article: PathBuf,
    /// TSV of `paragraph_index, truncated, summary`, closed by an `all` row
    /// holding the concatenated summary.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(a: &SummarizeArgs) -> Result<()> {
    let ck = Checkpoint::load(&a.ckpt)?;
    let vocab = Vocabulary::from_tokens(ck.vocab.clone())?;
    let paragraphs = extract_introduction(&read(&a.article)?)?;
    let max_source = ck.buckets.iter().map(|b| b.max_source_len).max().unwrap_or(1);
    let max_target = ck.buckets.iter().map(|b| b.max_target_len).max().unwrap_or(1);

    let mut out = String::from("paragraph_index\ttruncated\tsummary\n");
    let mut all = Vec::new();
    let mut any_truncated = false;
    for (i, p) in paragraphs.iter().enumerate() {
        let mut tokens: Vec<String> = tokenize_paragraph(p).concat();
        let truncated = tokens.len() > max_source;
        tokens.truncate(max_source);
        any_truncated |= truncated;
        let ids = vocab.encode(&tokens);
        let summary = if ids.is_empty() {
            String::new()
        } else {
            vocab.decode(&ck.model.generate(&ids, max_target)?).join(" ")
        };
        out.push_str(&format!("{i}\t{truncated}\t{summary}\n"));
        if !summary.is_empty() {
            all.push(summary);
        }
    }
    let joined = all.join(" ");
    out.push_str(&format!("all\t{any_truncated}\t{joined}\n"));
    write(&a.out, &out)?;
    println!("{} paragraphs summarized{}", paragraphs.len(), if any_truncated { " (some truncated)" } else { "" });
    println!("{joined}");
    Ok(())
}
