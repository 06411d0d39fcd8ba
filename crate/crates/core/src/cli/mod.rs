//! Command-line front end.

mod evaluate;
mod gradcheck;
mod prepare;
mod summarize;
mod toy;
mod train;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};

pub use gradcheck::Fault;

#[derive(Debug, Parser)]
#[command(name = "mtgru", version, about = "Multiple-timescale GRU summarization toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract articles, build TF-IDF pairs, stats and vocabulary.
    Prepare(prepare::PrepareArgs),
    /// Check analytic gradients against finite differences.
    Gradcheck(gradcheck::GradcheckArgs),
    /// Train an encoder-decoder on a pair file.
    Train(train::TrainArgs),
    /// Train the mtgru-1, mtgru-2 and mtgru-3 schedules on identical data.
    CompareTau(train::CompareArgs),
    /// Summarize an article paragraph by paragraph.
    Summarize(summarize::SummarizeArgs),
    /// ROUGE-1/2/L of generated summaries against gold abstracts.
    Evaluate(evaluate::EvaluateArgs),
    /// Train on the synthetic copy or reversal task.
    Toy(toy::ToyArgs),
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(a) => prepare::run(&a),
        Command::Gradcheck(a) => gradcheck::run(&a),
        Command::Train(a) => train::run(&a),
        Command::CompareTau(a) => train::run_compare(&a),
        Command::Summarize(a) => summarize::run(&a),
        Command::Evaluate(a) => evaluate::run(&a),
        Command::Toy(a) => toy::run(&a),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

/// `<out>.csv` beside a checkpoint path.
pub fn log_path(ckpt: &Path) -> PathBuf {
    ckpt.with_extension("csv")
}
