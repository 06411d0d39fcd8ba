//! Synthetic copy and reversal tasks for convergence checks.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numkit::Rng;
use crate::seq2seq::{
    fit, BucketedData, Bucket, Example, LogRow, ModelDims, Seq2SeqModel, TimescaleSchedule, TrainConfig, TrainState,
    NUM_SPECIAL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyTask {
    /// Target equals source.
    Copy,
    /// Target is the source reversed.
    Reverse,
}

impl ToyTask {
    pub fn name(&self) -> &'static str {
        match self {
            ToyTask::Copy => "copy",
            ToyTask::Reverse => "reverse",
        }
    }

    pub fn target_for(&self, source: &[usize]) -> Vec<usize> {
        match self {
            ToyTask::Copy => source.to_vec(),
            ToyTask::Reverse => source.iter().rev().copied().collect(),
        }
    }
}

impl fmt::Display for ToyTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ToyTask {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "copy" => Ok(ToyTask::Copy),
            "reverse" | "reversal" => Ok(ToyTask::Reverse),
            _ => Err(Error::arg(format!("unknown toy task `{s}`"))),
        }
    }
}

/// `n` random sequences over the non-special ids of a `vocab_size`
/// vocabulary, lengths uniform in `[1, max_len]`.
pub fn toy_examples(task: ToyTask, n: usize, vocab_size: usize, max_len: usize, rng: &mut Rng) -> Vec<Example> {
    (0..n)
        .map(|_| {
            let len = rng.range_inclusive(1, max_len);
            let source: Vec<usize> = (0..len).map(|_| NUM_SPECIAL + rng.below(vocab_size - NUM_SPECIAL)).collect();
            let target = task.target_for(&source);
            Example { source, target }
        })
        .collect()
}

/// Fraction of target positions reproduced by greedy decoding. Missing
/// positions count as wrong; tokens past the target length are ignored.
pub fn token_accuracy(model: &Seq2SeqModel, examples: &[Example]) -> Result<f64> {
    let mut correct = 0usize;
    let mut total = 0usize;
    for e in examples {
        let out = model.generate(&e.source, e.target.len() + 1)?;
        correct += e.target.iter().zip(&out).filter(|(a, b)| a == b).count();
        total += e.target.len();
    }
    Ok(correct as f64 / total.max(1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub task: ToyTask,
    pub schedule: TimescaleSchedule,
    pub vocab_size: usize,
    pub max_len: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub train: TrainConfig,
    pub heldout: usize,
    /// Stop once held-out accuracy reaches this value.
    pub target_accuracy: f64,
    pub seed: u64,
}

impl ToyConfig {
    pub fn new(task: ToyTask, schedule: TimescaleSchedule) -> Self {
        Self {
            task,
            schedule,
            vocab_size: 20,
            max_len: 8,
            embed_dim: 32,
            hidden_dim: 64,
            train: TrainConfig {
                batch_size: 32,
                learning_rate: 3e-3,
                max_steps: 5000,
                eval_every: 100,
                patience: 0,
                ..TrainConfig::default()
            },
            heldout: 200,
            target_accuracy: 0.95,
            seed: 7,
        }
    }
}

/// One evaluation point of a toy run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyPoint {
    pub row: LogRow,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct ToyReport {
    pub points: Vec<ToyPoint>,
    pub steps: u64,
    pub accuracy: f64,
    pub model: Seq2SeqModel,
}

/// Trains on freshly sampled task data, evaluating held-out greedy token
/// accuracy every `eval_every` steps and stopping at `target_accuracy` or
/// `max_steps`.
pub fn run_toy(cfg: &ToyConfig) -> Result<ToyReport> {
    let mut rng = Rng::new(cfg.seed);
    let dims = ModelDims {
        vocab_size: cfg.vocab_size,
        embed_dim: cfg.embed_dim,
        hidden_dim: cfg.hidden_dim,
        layers: cfg.schedule.len(),
    };
    let mut model = Seq2SeqModel::new(dims, cfg.schedule.clone(), &mut rng.fork())?;
    let mut data_rng = rng.fork();
    let train = toy_examples(cfg.task, 20_000, cfg.vocab_size, cfg.max_len, &mut data_rng);
    let heldout = toy_examples(cfg.task, cfg.heldout, cfg.vocab_size, cfg.max_len, &mut data_rng);
    let data = BucketedData::new(train, &[Bucket::new(cfg.max_len, cfg.max_len)])?;
    let mut state = TrainState::new(&model, &cfg.train, rng.next_u64())?;
    let mut points = Vec::new();
    let mut accuracy = 0.0;
    fit(
        &mut model,
        &mut state,
        &data,
        &heldout,
        &cfg.train,
        || 0.0,
        |row, m, _| {
            accuracy = token_accuracy(m, &heldout)?;
            points.push(ToyPoint { row: *row, accuracy });
            Ok(accuracy < cfg.target_accuracy)
        },
    )?;
    Ok(ToyReport {
        points,
        steps: state.step,
        accuracy,
        model,
    })
}
