use std::path::{Path, PathBuf};

use clap::Args;

use super::{read, write};
use crate::error::{Error, Result};
use crate::rouge::{evaluate_article, macro_mean, report_csv, RougeReport};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Summaries named `<doc_id>.tsv` (from `summarize`) or raw text.
    #[arg(long)]
    pub generated: PathBuf,
    /// Gold abstracts named `<doc_id>.txt`.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Paragraph summaries in index order from a `summarize` TSV; the header
/// and `all` rows are ignored.
pub fn summaries_from_tsv(text: &str) -> Vec<String> {
    let mut rows: Vec<(usize, String)> = text
        .lines()
        .filter_map(|l| {
            let mut f = l.splitn(3, '\t');
            let idx = f.next()?.parse().ok()?;
            let _truncated = f.next()?;
            Some((idx, f.next().unwrap_or("").to_string()))
        })
        .collect();
    rows.sort_by_key(|r| r.0);
    rows.into_iter().map(|r| r.1).collect()
}

fn list_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(format!("listing {}", dir.display()), e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(format!("listing {}", dir.display()), e))?.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn run(a: &EvaluateArgs) -> Result<()> {
    let mut results: Vec<(String, RougeReport)> = Vec::new();
    let mut unmatched = Vec::new();
    for path in list_files(&a.generated)? {
        let Some(doc_id) = path.file_stem().and_then(|s| s.to_str()).map(String::from) else {
            continue;
        };
        let gold_path = a.gold.join(format!("{doc_id}.txt"));
        if !gold_path.is_file() {
            unmatched.push(doc_id);
            continue;
        }
        let text = read(&path)?;
        let summaries = if path.extension().is_some_and(|e| e == "tsv") {
            summaries_from_tsv(&text)
        } else {
            vec![text]
        };
        match evaluate_article(&summaries, &read(&gold_path)?) {
            Ok(r) => results.push((doc_id, r)),
            Err(e) => {
                eprintln!("skipping {doc_id}: {e}");
                unmatched.push(doc_id);
            }
        }
    }
    for id in &unmatched {
        eprintln!("no usable gold abstract for {id}; skipped");
    }
    if results.is_empty() {
        return Err(Error::arg("no generated summary matched a gold abstract"));
    }
    write(&a.out, &report_csv(&results))?;
    let reports: Vec<RougeReport> = results.iter().map(|(_, r)| *r).collect();
    let mean = macro_mean(&reports);
    println!("articles: {} (skipped {})", results.len(), unmatched.len());
    for (name, s) in RougeReport::METRICS.iter().zip(mean.scores()) {
        println!("{name:<7} R {:.5}  P {:.5}  F {:.5}", s.recall, s.precision, s.f_score);
    }
    Ok(())
}
