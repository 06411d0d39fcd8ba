use super::bucket::{assign_bucket, validate_buckets, Bucket};
use super::model::{decoder_target, Params, Seq2SeqModel, PAD};
use super::optim::{clip_global_norm, Optimizer, OptimizerKind};
use crate::error::{Error, Result};
use crate::numkit::Rng;

/// exp of the mean per-token cross-entropy.
pub fn perplexity(mean_token_loss: f64) -> f64 {
    mean_token_loss.exp()
}

/// One (source, target) example as token ids; the target holds content
/// tokens only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
}

/// A padded batch from a single bucket. Targets are `GO … EOS PAD…`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub bucket: usize,
    pub sources: Vec<Vec<usize>>,
    pub targets: Vec<Vec<usize>>,
}

impl Batch {
    pub fn from_examples(bucket_index: usize, bucket: Bucket, examples: &[&Example]) -> Self {
        let pad = |mut v: Vec<usize>, len: usize| {
            v.resize(len.max(v.len()), PAD);
            v
        };
        Self {
            bucket: bucket_index,
            sources: examples
                .iter()
                .map(|e| pad(e.source.clone(), bucket.max_source_len))
                .collect(),
            targets: examples
                .iter()
                .map(|e| pad(decoder_target(&e.target), bucket.max_target_len + 2))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }
}

/// Examples grouped by bucket; pairs that fit no bucket are counted.
#[derive(Debug, Clone)]
pub struct BucketedData {
    pub buckets: Vec<Bucket>,
    pub groups: Vec<Vec<Example>>,
    pub overflow: usize,
}

impl BucketedData {
    pub fn new(examples: Vec<Example>, buckets: &[Bucket]) -> Result<Self> {
        validate_buckets(buckets)?;
        let mut groups = vec![Vec::new(); buckets.len()];
        let mut overflow = 0;
        for e in examples {
            if e.source.is_empty() {
                overflow += 1;
                continue;
            }
            match assign_bucket(e.source.len(), e.target.len(), buckets) {
                Some(b) => groups[b].push(e),
                None => overflow += 1,
            }
        }
        Ok(Self {
            buckets: buckets.to_vec(),
            groups,
            overflow,
        })
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Picks a bucket with probability proportional to its size, then
    /// `batch_size` examples from it uniformly with replacement.
    pub fn sample(&self, batch_size: usize, rng: &mut Rng) -> Result<Batch> {
        let total = self.len();
        if total == 0 {
            return Err(Error::arg("no training examples fit the buckets"));
        }
        let mut pick = rng.below(total);
        let mut b = 0;
        while pick >= self.groups[b].len() {
            pick -= self.groups[b].len();
            b += 1;
        }
        let group = &self.groups[b];
        let chosen: Vec<&Example> = (0..batch_size).map(|_| &group[rng.below(group.len())]).collect();
        Ok(Batch::from_examples(b, self.buckets[b], &chosen))
    }

    pub fn examples(&self) -> impl Iterator<Item = &Example> {
        self.groups.iter().flatten()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub clip_norm: f64,
    pub max_steps: u64,
    /// Evaluate on the dev set every this many steps.
    pub eval_every: u64,
    /// Stop after this many evaluations without a new best; 0 disables.
    pub patience: u32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::ADAM,
            clip_norm: 5.0,
            max_steps: 2000,
            eval_every: 100,
            patience: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !self.clip_norm.is_finite() || self.clip_norm <= 0.0 {
            return Err(Error::Config("clip_norm must be finite and > 0".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be >= 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Config("learning_rate must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub step: u64,
    /// Exponential moving average (0.95) of batch losses; NaN before the
    /// first step.
    pub train_loss_ema: f64,
    /// `(step, dev perplexity)` at each evaluation.
    pub dev_history: Vec<(u64, f64)>,
    pub optimizer: Optimizer,
    pub rng: Rng,
}

const EMA_DECAY: f64 = 0.95;

impl TrainState {
    pub fn new(model: &Seq2SeqModel, cfg: &TrainConfig, seed: u64) -> Result<Self> {
        Ok(Self {
            step: 0,
            train_loss_ema: f64::NAN,
            dev_history: Vec::new(),
            optimizer: Optimizer::new(cfg.optimizer, cfg.learning_rate, &model.params)?,
            rng: Rng::new(seed),
        })
    }

    pub fn best_dev(&self) -> Option<(u64, f64)> {
        self.dev_history
            .iter()
            .copied()
            .fold(None, |best, cur| match best {
                Some((_, p)) if p <= cur.1 => best,
                _ => Some(cur),
            })
    }
}

/// Summed loss, token count and summed gradients over a batch, reduced in
/// batch order.
pub fn batch_gradients(model: &Seq2SeqModel, batch: &Batch) -> Result<(f64, usize, Params)> {
    let mut acc = model.params.zeros_like();
    let mut sum = 0.0;
    let mut tokens = 0;
    for (s, t) in batch.sources.iter().zip(&batch.targets) {
        let (l, n) = model.accumulate(s, t, &mut acc)?;
        sum += l;
        tokens += n;
    }
    Ok((sum, tokens, acc))
}

/// Mean per-token loss of a batch, without gradients.
pub fn batch_loss(model: &Seq2SeqModel, batch: &Batch) -> Result<f64> {
    let mut sum = 0.0;
    let mut tokens = 0;
    for (s, t) in batch.sources.iter().zip(&batch.targets) {
        let (l, n) = model.loss_sum(s, t)?;
        sum += l;
        tokens += n;
    }
    Ok(sum / tokens as f64)
}

/// One optimizer update on `batch`: mean-token-loss gradients, global norm
/// clipping, then the optimizer. Returns the batch's mean loss before the
/// update.
pub fn train_step(model: &mut Seq2SeqModel, state: &mut TrainState, batch: &Batch, clip_norm: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::arg("empty batch"));
    }
    let (sum, tokens, mut grads) = batch_gradients(model, batch)?;
    let loss = sum / tokens as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite { step: state.step + 1 });
    }
    grads.scale(1.0 / tokens as f64);
    clip_global_norm(&mut grads, clip_norm);
    state.optimizer.apply(&mut model.params, &grads);
    if !model.params.is_finite() {
        return Err(Error::NonFinite { step: state.step + 1 });
    }
    state.step += 1;
    state.train_loss_ema = if state.train_loss_ema.is_nan() {
        loss
    } else {
        EMA_DECAY * state.train_loss_ema + (1.0 - EMA_DECAY) * loss
    };
    Ok(loss)
}

/// Token-weighted mean loss over examples.
pub fn mean_loss(model: &Seq2SeqModel, examples: &[Example]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::arg("no examples to evaluate"));
    }
    let mut sum = 0.0;
    let mut tokens = 0;
    for e in examples {
        let (l, n) = model.loss_sum(&e.source, &decoder_target(&e.target))?;
        sum += l;
        tokens += n;
    }
    Ok(sum / tokens as f64)
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub step: u64,
    pub wall_seconds: f64,
    pub train_loss: f64,
    pub dev_ppl: f64,
}

impl LogRow {
    pub const HEADER: &'static str = "step,wall_seconds,train_loss,train_ppl,dev_ppl";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.3},{:.6},{:.6},{:.6}",
            self.step,
            self.wall_seconds,
            self.train_loss,
            perplexity(self.train_loss),
            self.dev_ppl
        )
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    /// Parameters at the lowest dev perplexity.
    pub best_params: Params,
    pub best_step: u64,
    pub best_dev_ppl: f64,
    pub stopped_early: bool,
    pub rows: Vec<LogRow>,
}

/// Runs `train_step` until `cfg.max_steps`, evaluating on `dev` every
/// `cfg.eval_every` steps and keeping the best parameters. `on_eval` sees
/// each log row with the current model and state and may ask to stop by
/// returning `Ok(false)`.
pub fn fit(
    model: &mut Seq2SeqModel,
    state: &mut TrainState,
    data: &BucketedData,
    dev: &[Example],
    cfg: &TrainConfig,
    mut clock: impl FnMut() -> f64,
    mut on_eval: impl FnMut(&LogRow, &Seq2SeqModel, &TrainState) -> Result<bool>,
) -> Result<FitReport> {
    cfg.validate()?;
    let mut best = state
        .best_dev()
        .map(|(s, p)| (s, p, model.params.clone()))
        .unwrap_or((state.step, f64::INFINITY, model.params.clone()));
    let mut since_best = 0u32;
    let mut window_sum = 0.0;
    let mut window_n = 0u64;
    let mut rows = Vec::new();
    let mut stopped_early = false;
    while state.step < cfg.max_steps {
        let batch = data.sample(cfg.batch_size, &mut state.rng)?;
        window_sum += train_step(model, state, &batch, cfg.clip_norm)?;
        window_n += 1;
        if state.step.is_multiple_of(cfg.eval_every) || state.step == cfg.max_steps {
            let dev_ppl = perplexity(mean_loss(model, dev)?);
            state.dev_history.push((state.step, dev_ppl));
            if dev_ppl < best.1 {
                best = (state.step, dev_ppl, model.params.clone());
                since_best = 0;
            } else {
                since_best += 1;
            }
            let row = LogRow {
                step: state.step,
                wall_seconds: clock(),
                train_loss: window_sum / window_n as f64,
                dev_ppl,
            };
            window_sum = 0.0;
            window_n = 0;
            rows.push(row);
            if !on_eval(&row, model, state)? {
                break;
            }
            if cfg.patience > 0 && since_best >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }
    Ok(FitReport {
        best_params: best.2,
        best_step: best.0,
        best_dev_ppl: best.1,
        stopped_early,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq2seq::model::ModelDims;
    use crate::seq2seq::schedule::TimescaleSchedule;

    fn model(seed: u64) -> Seq2SeqModel {
        let dims = ModelDims {
            vocab_size: 10,
            embed_dim: 6,
            hidden_dim: 8,
            layers: 2,
        };
        Seq2SeqModel::new(dims, TimescaleSchedule::new(vec![1.0, 1.5]).unwrap(), &mut Rng::new(seed)).unwrap()
    }

    fn example(s: &[usize], t: &[usize]) -> Example {
        Example {
            source: s.to_vec(),
            target: t.to_vec(),
        }
    }

    #[test]
    fn perplexity_values() {
        assert_eq!(perplexity(0.0), 1.0);
        assert!((perplexity(10f64.ln()) - 10.0).abs() < 1e-12);
        assert!((perplexity(1.9169) - 6.8).abs() < 0.01);
    }

    #[test]
    fn zero_learning_rate_leaves_parameters() {
        let mut m = model(1);
        let before = m.params.clone();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let mut st = TrainState::new(&m, &cfg, 3).unwrap();
        let e = example(&[4, 5, 6], &[6, 5]);
        let batch = Batch::from_examples(0, Bucket::new(5, 5), &[&e]);
        train_step(&mut m, &mut st, &batch, 5.0).unwrap();
        assert_eq!(m.params, before);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn one_step_on_repeated_example_lowers_its_loss() {
        let mut m = model(2);
        let cfg = TrainConfig {
            learning_rate: 1e-2,
            ..TrainConfig::default()
        };
        let mut st = TrainState::new(&m, &cfg, 3).unwrap();
        let e = example(&[4, 7, 8], &[8, 7, 4]);
        let batch = Batch::from_examples(0, Bucket::new(5, 5), &[&e, &e, &e, &e]);
        let before = batch_loss(&m, &batch).unwrap();
        let reported = train_step(&mut m, &mut st, &batch, 5.0).unwrap();
        assert!((reported - before).abs() < 1e-12);
        assert!(batch_loss(&m, &batch).unwrap() < before);
    }

    #[test]
    fn bucketing_counts_overflow() {
        let data = BucketedData::new(
            vec![example(&[4; 3], &[4; 2]), example(&[4; 7], &[4; 2]), example(&[4; 11], &[4])],
            &[Bucket::new(5, 5), Bucket::new(10, 10)],
        )
        .unwrap();
        assert_eq!(data.groups[0].len(), 1);
        assert_eq!(data.groups[1].len(), 1);
        assert_eq!(data.overflow, 1);
        let b = data.sample(3, &mut Rng::new(0)).unwrap();
        assert_eq!(b.len(), 3);
        let max_src = data.buckets[b.bucket].max_source_len;
        assert!(b.sources.iter().all(|s| s.len() == max_src));
    }

    #[test]
    fn fit_is_deterministic_and_tracks_best() {
        let run = || {
            let mut m = model(5);
            let cfg = TrainConfig {
                learning_rate: 5e-3,
                max_steps: 30,
                eval_every: 10,
                batch_size: 4,
                ..TrainConfig::default()
            };
            let mut st = TrainState::new(&m, &cfg, 9).unwrap();
            let ex = vec![example(&[4, 5], &[5, 4]), example(&[6, 7, 8], &[8, 7, 6])];
            let data = BucketedData::new(ex.clone(), &[Bucket::new(5, 5)]).unwrap();
            fit(&mut m, &mut st, &data, &ex, &cfg, || 0.0, |_, _, _| Ok(true)).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.rows.len(), 3);
        let min = a.rows.iter().map(|r| r.dev_ppl).fold(f64::INFINITY, f64::min);
        assert_eq!(a.best_dev_ppl, min);
        assert!(a.rows.iter().all(|r| r.dev_ppl >= 1.0));
    }

    #[test]
    fn log_row_format() {
        let r = LogRow {
            step: 10,
            wall_seconds: 0.0,
            train_loss: 0.0,
            dev_ppl: 2.5,
        };
        assert_eq!(r.to_csv(), "10,0.000,0.000000,1.000000,2.500000");
    }
}
