use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;

use super::{create_dir, log_path, read};
use crate::config::RunConfig;
use crate::corpus::{pairs_from_tsv, split_of, Split, Vocabulary};
use crate::error::{Error, Result};
use crate::numkit::Rng;
use crate::seq2seq::{
    fit, BucketedData, Checkpoint, Example, LogRow, Seq2SeqModel, TrainState, PRESETS,
};

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub pairs: PathBuf,
    /// Checkpoint path; the training log goes beside it as `.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// `gru`, `mtgru-1`, `mtgru-2`, `mtgru-3` or a τ list such as `1,1.5`.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Override a config key, e.g. `--set max_steps=500`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Config file, then `--set` overrides, then `MTGRU_SEED`.
pub(super) fn resolve_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{o}` is not KEY=VALUE")))?;
        cfg.set(k.trim(), v)?;
    }
    cfg.apply_env()?;
    Ok(cfg)
}

struct Data {
    vocab: Vocabulary,
    train: BucketedData,
    dev: Vec<Example>,
    dev_is_train: bool,
}

fn load_data(cfg: &RunConfig, pairs_path: &Path) -> Result<Data> {
    let vocab = Vocabulary::from_text(&read(&cfg.vocab_path(pairs_path))?)?;
    let pairs = pairs_from_tsv(&read(pairs_path)?, pairs_path)?;
    let mut train = Vec::new();
    let mut dev = Vec::new();
    for p in &pairs {
        let e = Example {
            source: vocab.encode(&p.source_tokens),
            target: vocab.encode(&p.target_tokens),
        };
        match split_of(&p.doc_id, cfg.seed) {
            Split::Train => train.push(e),
            Split::Dev => dev.push(e),
            Split::Test => {}
        }
    }
    let train = BucketedData::new(train, &cfg.buckets)?;
    if train.is_empty() {
        return Err(Error::arg("the train split has no pairs that fit the buckets"));
    }
    let buckets = &cfg.buckets;
    dev.retain(|e| {
        !e.source.is_empty() && crate::seq2seq::assign_bucket(e.source.len(), e.target.len(), buckets).is_some()
    });
    let dev_is_train = dev.is_empty();
    if dev_is_train {
        dev = train.examples().cloned().collect();
    }
    Ok(Data {
        vocab,
        train,
        dev,
        dev_is_train,
    })
}

struct Outcome {
    best_step: u64,
    best_dev_ppl: f64,
    last: Option<LogRow>,
    stopped_early: bool,
}

fn train_one(cfg: &RunConfig, data: &Data, out: &Path) -> Result<Outcome> {
    let tc = cfg.train_config()?;
    let dims = cfg.dims(data.vocab.len())?;
    let mut root = Rng::new(cfg.seed);
    let mut model = Seq2SeqModel::new(dims, cfg.schedule()?, &mut root.fork())?;
    model.reverse_source = cfg.reverse_source;
    let mut state = TrainState::new(&model, &tc, root.next_u64())?;

    let snapshot = |model: &Seq2SeqModel, state: &TrainState| Checkpoint {
        model: model.clone(),
        state: state.clone(),
        vocab: data.vocab.tokens().to_vec(),
        buckets: cfg.buckets.clone(),
    };
    snapshot(&model, &state).save(out)?;

    let log = log_path(out);
    let mut log_file = std::fs::File::create(&log).map_err(|e| Error::io(format!("creating {}", log.display()), e))?;
    writeln!(log_file, "{}", LogRow::HEADER).map_err(|e| Error::io("writing log", e))?;

    let start = Instant::now();
    let wall = cfg.wall_clock;
    let mut best = f64::INFINITY;
    let report = fit(
        &mut model,
        &mut state,
        &data.train,
        &data.dev,
        &tc,
        || if wall { start.elapsed().as_secs_f64() } else { 0.0 },
        |row, m, st| {
            writeln!(log_file, "{}", row.to_csv()).map_err(|e| Error::io("writing log", e))?;
            println!(
                "step {:>6}  train_loss {:.4}  dev_ppl {:.3}",
                row.step, row.train_loss, row.dev_ppl
            );
            if row.dev_ppl < best {
                best = row.dev_ppl;
                snapshot(m, st).save(out)?;
            }
            Ok(true)
        },
    );
    let report = match report {
        Ok(r) => r,
        Err(e @ Error::NonFinite { .. }) => {
            eprintln!("training aborted; last good checkpoint kept at {}", out.display());
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    Ok(Outcome {
        best_step: report.best_step,
        best_dev_ppl: report.best_dev_ppl,
        last: report.rows.last().copied(),
        stopped_early: report.stopped_early,
    })
}

fn describe(data: &Data) {
    println!(
        "train pairs: {} (overflow {}), dev pairs: {}{}",
        data.train.len(),
        data.train.overflow,
        data.dev.len(),
        if data.dev_is_train {
            " (dev split empty; using train pairs for dev perplexity)"
        } else {
            ""
        }
    );
}

pub fn run(a: &TrainArgs) -> Result<()> {
    let mut cfg = resolve_config(a.config.as_deref(), &a.overrides)?;
    if let Some(s) = &a.schedule {
        cfg.schedule = s.clone();
    }
    cfg.validate()?;
    let data = load_data(&cfg, &a.pairs)?;
    describe(&data);
    let o = train_one(&cfg, &data, &a.out)?;
    println!(
        "best dev perplexity {:.4} at step {}{}",
        o.best_dev_ppl,
        o.best_step,
        if o.stopped_early { " (early stop)" } else { "" }
    );
    println!("checkpoint: {}", a.out.display());
    println!("log: {}", log_path(&a.out).display());
    Ok(())
}

/// Four layers and no early stopping, so every schedule runs the same
/// number of steps and the logs share a step grid.
pub fn run_compare(a: &CompareArgs) -> Result<()> {
    let base = resolve_config(a.config.as_deref(), &a.overrides)?;
    let mut configs = Vec::new();
    for (name, _) in PRESETS {
        let mut cfg = base.clone();
        cfg.layers = 4;
        cfg.schedule = name.to_string();
        cfg.patience = 0;
        cfg.validate()?;
        configs.push((name, cfg));
    }
    let data = load_data(&configs[0].1, &a.pairs)?;
    describe(&data);
    create_dir(&a.out)?;
    let mut results = Vec::new();
    for (name, cfg) in &configs {
        println!("== {name}");
        let o = train_one(cfg, &data, &a.out.join(format!("{name}.ckpt")))?;
        results.push((name, o));
    }
    let mut summary = String::from("schedule,final_step,final_train_loss,final_dev_ppl,best_dev_ppl\n");
    for (name, o) in &results {
        let (step, loss, ppl) = o.last.map_or((0, f64::NAN, f64::NAN), |r| (r.step, r.train_loss, r.dev_ppl));
        summary.push_str(&format!("{name},{step},{loss:.6},{ppl:.6},{:.6}\n", o.best_dev_ppl));
    }
    super::write(&a.out.join("summary.csv"), &summary)?;
    let mut order: Vec<_> = results.iter().map(|(n, o)| (o.last.map_or(f64::NAN, |r| r.train_loss), **n)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ranked: Vec<String> = order.iter().map(|(l, n)| format!("{n} ({l:.4})")).collect();
    println!("final train loss, lowest first: {}", ranked.join(" < "));
    Ok(())
}
