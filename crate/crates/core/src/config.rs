//! Flat `key=value` run configuration.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::seq2seq::{
    format_buckets, parse_buckets, Bucket, ModelDims, OptimizerKind, TimescaleSchedule, TrainConfig, DEFAULT_BUCKETS,
};

pub const SEED_ENV: &str = "MTGRU_SEED";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    /// Preset name or τ list, resolved by [`RunConfig::schedule`].
    pub schedule: String,
    pub reverse_source: bool,
    pub buckets: Vec<Bucket>,
    pub optimizer: String,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub clip_norm: f64,
    pub batch_size: usize,
    pub max_steps: u64,
    pub eval_every: u64,
    pub patience: u32,
    pub seed: u64,
    /// Vocabulary file; empty means `vocab.txt` beside the pair file.
    pub vocab_file: String,
    /// Record real elapsed time in the log instead of 0.
    pub wall_clock: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            hidden_dim: 64,
            layers: 2,
            schedule: "1,1.5".into(),
            reverse_source: false,
            buckets: DEFAULT_BUCKETS.to_vec(),
            optimizer: "adam".into(),
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            clip_norm: 5.0,
            batch_size: 16,
            max_steps: 2000,
            eval_every: 100,
            patience: 5,
            seed: 1,
            vocab_file: String::new(),
            wall_clock: false,
        }
    }
}

pub const KEYS: [&str; 20] = [
    "preset",
    "embed_dim",
    "hidden_dim",
    "layers",
    "schedule",
    "reverse_source",
    "buckets",
    "optimizer",
    "learning_rate",
    "beta1",
    "beta2",
    "adam_epsilon",
    "clip_norm",
    "batch_size",
    "max_steps",
    "eval_every",
    "patience",
    "seed",
    "vocab_file",
    "wall_clock",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value for `{key}`: `{value}`")))
}

impl RunConfig {
    /// Four layers of 1792 units, 512-wide embeddings, the mtgru-1 schedule.
    pub fn paper() -> Self {
        Self {
            embed_dim: 512,
            hidden_dim: 1792,
            layers: 4,
            schedule: "mtgru-1".into(),
            ..Self::default()
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "preset" => {
                *self = match v {
                    "desk" => Self::default(),
                    "paper" => Self::paper(),
                    _ => return Err(Error::Config(format!("unknown preset `{v}`"))),
                }
            }
            "embed_dim" => self.embed_dim = parse(key, v)?,
            "hidden_dim" => self.hidden_dim = parse(key, v)?,
            "layers" => self.layers = parse(key, v)?,
            "schedule" => self.schedule = v.to_string(),
            "reverse_source" => self.reverse_source = parse(key, v)?,
            "buckets" => self.buckets = parse_buckets(v).map_err(|e| Error::Config(e.to_string()))?,
            "optimizer" => self.optimizer = v.to_string(),
            "learning_rate" => self.learning_rate = parse(key, v)?,
            "beta1" => self.beta1 = parse(key, v)?,
            "beta2" => self.beta2 = parse(key, v)?,
            "adam_epsilon" => self.adam_epsilon = parse(key, v)?,
            "clip_norm" => self.clip_norm = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "max_steps" => self.max_steps = parse(key, v)?,
            "eval_every" => self.eval_every = parse(key, v)?,
            "patience" => self.patience = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "vocab_file" => self.vocab_file = v.to_string(),
            "wall_clock" => self.wall_clock = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses `key=value` lines with `#` comments. A `preset` line is
    /// applied before every other key regardless of its position.
    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected key=value, found `{line}`"),
            })?;
            entries.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        entries.sort_by_key(|(_, k, _)| k != "preset");
        let mut cfg = Self::default();
        for (line, k, v) in entries {
            cfg.set(&k, &v).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_text(&text, path)
    }

    /// Applies `MTGRU_SEED` if set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = parse(SEED_ENV, &v)?;
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<TimescaleSchedule> {
        let s = TimescaleSchedule::parse(&self.schedule, self.layers).map_err(|e| Error::Config(e.to_string()))?;
        if s.len() != self.layers {
            return Err(Error::Config(format!(
                "schedule `{}` has {} timescales but layers={}",
                self.schedule,
                s.len(),
                self.layers
            )));
        }
        Ok(s)
    }

    pub fn optimizer_kind(&self) -> Result<OptimizerKind> {
        match self.optimizer.as_str() {
            "adam" => Ok(OptimizerKind::Adam {
                beta1: self.beta1,
                beta2: self.beta2,
                epsilon: self.adam_epsilon,
            }),
            "sgd" => Ok(OptimizerKind::Sgd),
            o => Err(Error::Config(format!("unknown optimizer `{o}`"))),
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            optimizer: self.optimizer_kind()?,
            clip_norm: self.clip_norm,
            max_steps: self.max_steps,
            eval_every: self.eval_every,
            patience: self.patience,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dims(&self, vocab_size: usize) -> Result<ModelDims> {
        let d = ModelDims {
            vocab_size,
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
            layers: self.layers,
        };
        d.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(d)
    }

    /// Checks every setting that does not depend on input data.
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.layers == 0 {
            return Err(Error::Config("embed_dim, hidden_dim and layers must be >= 1".into()));
        }
        self.schedule()?;
        self.train_config()?;
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be >= 1".into()));
        }
        if let OptimizerKind::Adam { beta1, beta2, epsilon } = self.optimizer_kind()? {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || epsilon.is_nan() || epsilon <= 0.0 {
                return Err(Error::Config("adam needs beta1, beta2 in [0,1) and adam_epsilon > 0".into()));
            }
        }
        Ok(())
    }

    pub fn vocab_path(&self, pairs: &Path) -> PathBuf {
        if self.vocab_file.is_empty() {
            pairs.with_file_name("vocab.txt")
        } else {
            PathBuf::from(&self.vocab_file)
        }
    }

    /// Every key with its current value, one per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| s.push_str(&format!("{k}={v}\n"));
        put("embed_dim", self.embed_dim.to_string());
        put("hidden_dim", self.hidden_dim.to_string());
        put("layers", self.layers.to_string());
        put("schedule", self.schedule.clone());
        put("reverse_source", self.reverse_source.to_string());
        put("buckets", format_buckets(&self.buckets));
        put("optimizer", self.optimizer.clone());
        put("learning_rate", format!("{:?}", self.learning_rate));
        put("beta1", format!("{:?}", self.beta1));
        put("beta2", format!("{:?}", self.beta2));
        put("adam_epsilon", format!("{:?}", self.adam_epsilon));
        put("clip_norm", format!("{:?}", self.clip_norm));
        put("batch_size", self.batch_size.to_string());
        put("max_steps", self.max_steps.to_string());
        put("eval_every", self.eval_every.to_string());
        put("patience", self.patience.to_string());
        put("seed", self.seed.to_string());
        put("vocab_file", self.vocab_file.clone());
        put("wall_clock", self.wall_clock.to_string());
        s
    }
}
