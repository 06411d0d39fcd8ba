use crate::cells::{backward_accumulate, mtgru_step, CellWeights, StepCache};
use crate::error::{Error, Result};
use crate::numkit::{argmax, axpy, cross_entropy, softmax, xavier_init, Matrix, Rng};

use super::schedule::TimescaleSchedule;

pub const PAD: usize = 0;
pub const GO: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
pub const NUM_SPECIAL: usize = 4;

/// Final states, per-step caches `[t][layer]` and top-layer outputs `[t]`.
type StackRun = (Vec<Vec<f64>>, Vec<Vec<StepCache>>, Vec<Vec<f64>>);

/// Shape of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
}

impl ModelDims {
    /// Desk-scale defaults.
    pub const DESK: ModelDims = ModelDims {
        vocab_size: 2000,
        embed_dim: 32,
        hidden_dim: 64,
        layers: 2,
    };

    /// Four layers of 1792 units with 512-wide embeddings. Constructible,
    /// but far too large to train on a CPU.
    pub const PAPER: ModelDims = ModelDims {
        vocab_size: 40_000,
        embed_dim: 512,
        hidden_dim: 1792,
        layers: 4,
    };

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size <= NUM_SPECIAL {
            return Err(Error::arg(format!(
                "vocab size {} leaves no room beyond the {NUM_SPECIAL} special tokens",
                self.vocab_size
            )));
        }
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.layers == 0 {
            return Err(Error::arg("model dimensions must be positive"));
        }
        Ok(())
    }
}

/// Every trainable matrix of a model. Gradients and optimizer moments use
/// the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// vocab × embed.
    pub embedding: Matrix,
    pub encoder: Vec<CellWeights>,
    pub decoder: Vec<CellWeights>,
    /// vocab × hidden.
    pub projection: Matrix,
}

impl Params {
    pub fn init(dims: &ModelDims, rng: &mut Rng) -> Self {
        let stack = |rng: &mut Rng| {
            (0..dims.layers)
                .map(|l| {
                    let input = if l == 0 { dims.embed_dim } else { dims.hidden_dim };
                    CellWeights::init(input, dims.hidden_dim, rng)
                })
                .collect::<Vec<_>>()
        };
        let embedding = xavier_init(dims.vocab_size, dims.embed_dim, rng);
        let encoder = stack(rng);
        let decoder = stack(rng);
        let projection = xavier_init(dims.vocab_size, dims.hidden_dim, rng);
        Self {
            embedding,
            encoder,
            decoder,
            projection,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            embedding: Matrix::zeros(self.embedding.rows(), self.embedding.cols()),
            encoder: self.encoder.iter().map(CellWeights::zeros_like).collect(),
            decoder: self.decoder.iter().map(CellWeights::zeros_like).collect(),
            projection: Matrix::zeros(self.projection.rows(), self.projection.cols()),
        }
    }

    /// Matrix names in the fixed serialization order.
    pub fn names(&self) -> Vec<String> {
        let mut names = vec!["embedding".to_string()];
        for (stack, layers) in [("encoder", &self.encoder), ("decoder", &self.decoder)] {
            for l in 0..layers.len() {
                for n in CellWeights::NAMES {
                    names.push(format!("{stack}.{l}.{n}"));
                }
            }
        }
        names.push("projection".to_string());
        names
    }

    pub fn matrices(&self) -> Vec<&Matrix> {
        let mut out = vec![&self.embedding];
        for w in self.encoder.iter().chain(&self.decoder) {
            out.extend(w.matrices());
        }
        out.push(&self.projection);
        out
    }

    pub fn matrices_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = vec![&mut self.embedding];
        for w in self.encoder.iter_mut().chain(self.decoder.iter_mut()) {
            out.extend(w.matrices_mut());
        }
        out.push(&mut self.projection);
        out
    }

    pub fn sum_sq(&self) -> f64 {
        self.matrices().iter().map(|m| m.sum_sq()).sum()
    }

    pub fn scale(&mut self, s: f64) {
        self.matrices_mut().into_iter().for_each(|m| m.scale(s));
    }

    pub fn fill(&mut self, v: f64) {
        self.matrices_mut().into_iter().for_each(|m| m.fill(v));
    }

    pub fn is_finite(&self) -> bool {
        self.matrices().iter().all(|m| m.is_finite())
    }

    pub fn param_count(&self) -> usize {
        self.matrices().iter().map(|m| m.data().len()).sum()
    }
}

/// Embedding, stacked MTGRU encoder and decoder, and output projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Seq2SeqModel {
    pub params: Params,
    pub schedule: TimescaleSchedule,
    pub dims: ModelDims,
    /// Feed the source to the encoder last token first.
    pub reverse_source: bool,
}

/// Per-sequence loss and gradients of the summed cross-entropy.
#[derive(Debug, Clone)]
pub struct DecodeOutcome {
    /// Mean cross-entropy per target token.
    pub loss: f64,
    pub tokens: usize,
    /// Gradients of the mean loss.
    pub grads: Params,
    /// Gradient of the mean loss with respect to each layer's initial state.
    pub d_init: Vec<Vec<f64>>,
}

impl Seq2SeqModel {
    pub fn new(dims: ModelDims, schedule: TimescaleSchedule, rng: &mut Rng) -> Result<Self> {
        dims.validate()?;
        if schedule.len() != dims.layers {
            return Err(Error::arg(format!(
                "schedule has {} timescales for {} layers",
                schedule.len(),
                dims.layers
            )));
        }
        Ok(Self {
            params: Params::init(&dims, rng),
            schedule,
            dims,
            reverse_source: false,
        })
    }

    /// Assembles a model from loaded parts, checking every shape.
    pub fn from_params(params: Params, schedule: TimescaleSchedule, reverse_source: bool) -> Result<Self> {
        let (vocab_size, embed_dim) = params.embedding.shape();
        let layers = params.encoder.len();
        let hidden_dim = params.projection.cols();
        let dims = ModelDims {
            vocab_size,
            embed_dim,
            hidden_dim,
            layers,
        };
        dims.validate()?;
        if params.decoder.len() != layers || schedule.len() != layers {
            return Err(Error::arg(format!(
                "layer count mismatch: encoder {layers}, decoder {}, schedule {}",
                params.decoder.len(),
                schedule.len()
            )));
        }
        if params.projection.rows() != vocab_size {
            return Err(Error::shape("projection", (vocab_size, hidden_dim), params.projection.shape()));
        }
        for stack in [&params.encoder, &params.decoder] {
            for (l, w) in stack.iter().enumerate() {
                w.validate()?;
                let input = if l == 0 { embed_dim } else { hidden_dim };
                if w.input_dim() != input || w.hidden_dim() != hidden_dim {
                    return Err(Error::shape(
                        "layer weights",
                        (hidden_dim, input),
                        (w.hidden_dim(), w.input_dim()),
                    ));
                }
            }
        }
        Ok(Self {
            params,
            schedule,
            dims,
            reverse_source,
        })
    }

    fn check_ids(&self, ids: &[usize], what: &str) -> Result<()> {
        if let Some(&bad) = ids.iter().find(|&&id| id >= self.dims.vocab_size) {
            return Err(Error::arg(format!(
                "{what} id {bad} outside vocabulary of {}",
                self.dims.vocab_size
            )));
        }
        Ok(())
    }

    /// Source as fed to the encoder: PAD removed, optionally reversed.
    pub fn encoder_input(&self, source: &[usize]) -> Vec<usize> {
        let mut ids: Vec<usize> = source.iter().copied().filter(|&t| t != PAD).collect();
        if self.reverse_source {
            ids.reverse();
        }
        ids
    }

    /// Runs the encoder stack and returns the final state of every layer.
    pub fn encode(&self, source: &[usize]) -> Result<Vec<Vec<f64>>> {
        if source.is_empty() {
            return Err(Error::arg("empty source sequence"));
        }
        self.check_ids(source, "source")?;
        let (finals, _, _) = self.run_stack(&self.params.encoder, source, self.zero_state(), false);
        Ok(finals)
    }

    fn zero_state(&self) -> Vec<Vec<f64>> {
        vec![vec![0.0; self.dims.hidden_dim]; self.dims.layers]
    }

    /// Runs a stack over `tokens`; returns final states and, if asked, the
    /// per-step caches `[t][layer]` and top-layer outputs `[t]`.
    fn run_stack(
        &self,
        stack: &[CellWeights],
        tokens: &[usize],
        mut state: Vec<Vec<f64>>,
        keep: bool,
    ) -> StackRun {
        let mut caches = Vec::with_capacity(if keep { tokens.len() } else { 0 });
        let mut tops = Vec::with_capacity(caches.capacity());
        for &tok in tokens {
            let mut x = self.params.embedding.row(tok).to_vec();
            let mut step_caches = Vec::with_capacity(stack.len());
            for (l, w) in stack.iter().enumerate() {
                let (h, cache) = mtgru_step(&x, &state[l], w, self.schedule.taus()[l]);
                if keep {
                    step_caches.push(cache);
                }
                state[l] = h.clone();
                x = h;
            }
            if keep {
                caches.push(step_caches);
                tops.push(x);
            }
        }
        (state, caches, tops)
    }

    fn logits(&self, top: &[f64]) -> Vec<f64> {
        (0..self.dims.vocab_size)
            .map(|v| crate::numkit::dot(self.params.projection.row(v), top))
            .collect()
    }

    fn check_state(&self, init: &[Vec<f64>]) -> Result<()> {
        if init.len() != self.dims.layers || init.iter().any(|h| h.len() != self.dims.hidden_dim) {
            return Err(Error::arg(format!(
                "initial state must be {} layers of {} units",
                self.dims.layers, self.dims.hidden_dim
            )));
        }
        Ok(())
    }

    fn check_target(&self, target: &[usize]) -> Result<usize> {
        self.check_ids(target, "target")?;
        if target.first() != Some(&GO) {
            return Err(Error::arg("target must begin with GO"));
        }
        let eos = target
            .iter()
            .position(|&t| t == EOS)
            .ok_or_else(|| Error::arg("target must contain EOS"))?;
        if target[eos + 1..].iter().any(|&t| t != PAD) {
            return Err(Error::arg("only PAD may follow EOS in a target"));
        }
        if target[1..eos].iter().any(|&t| t == PAD || t == GO) {
            return Err(Error::arg("PAD or GO inside target body"));
        }
        Ok(eos)
    }

    /// Teacher-forced decoder pass from `init` over `target`
    /// (`GO … EOS`, optionally followed by PAD). Returns the mean per-token
    /// cross-entropy and its gradients; PAD positions are masked out.
    pub fn decode_train(&self, init: &[Vec<f64>], target: &[usize]) -> Result<DecodeOutcome> {
        self.check_state(init)?;
        self.check_target(target)?;
        let mut grads = self.params.zeros_like();
        let (sum, tokens, d_init) = self.decoder_sum(init, target, &mut grads);
        let inv = 1.0 / tokens as f64;
        grads.scale(inv);
        let d_init = d_init.into_iter().map(|v| v.into_iter().map(|g| g * inv).collect()).collect();
        Ok(DecodeOutcome {
            loss: sum * inv,
            tokens,
            grads,
            d_init,
        })
    }

    /// Summed cross-entropy of the decoder, gradients of the sum added into
    /// `acc`. Returns `(sum, token count, δ/δinit)`.
    fn decoder_sum(&self, init: &[Vec<f64>], target: &[usize], acc: &mut Params) -> (f64, usize, Vec<Vec<f64>>) {
        let eos = target.iter().position(|&t| t == EOS).unwrap_or(target.len() - 1);
        let inputs = &target[..eos];
        let labels = &target[1..=eos];
        let (_, caches, tops) = self.run_stack(&self.params.decoder, inputs, init.to_vec(), true);

        let layers = self.dims.layers;
        let mut sum = 0.0;
        let mut d_logits_all = Vec::with_capacity(labels.len());
        for (t, &label) in labels.iter().enumerate() {
            let probs = softmax(&self.logits(&tops[t])).expect("vocab is nonempty");
            sum += cross_entropy(&probs, label).expect("label checked against vocab");
            let mut d = probs;
            d[label] -= 1.0;
            acc.projection.add_outer(&d, &tops[t]);
            d_logits_all.push(d);
        }

        let mut d_next = vec![vec![0.0; self.dims.hidden_dim]; layers];
        for t in (0..labels.len()).rev() {
            let mut from_above = vec![0.0; self.dims.hidden_dim];
            self.params.projection.matvec_t_acc(&d_logits_all[t], &mut from_above);
            for l in (0..layers).rev() {
                axpy(1.0, &d_next[l], &mut from_above);
                let (d_prev, d_x) = backward_accumulate(
                    &from_above,
                    &caches[t][l],
                    &self.params.decoder[l],
                    &mut acc.decoder[l],
                    None,
                );
                d_next[l] = d_prev;
                from_above = d_x;
            }
            axpy(1.0, &from_above, acc.embedding.row_mut(inputs[t]));
        }
        (sum, labels.len(), d_next)
    }

    /// Full pass for one pair: summed cross-entropy, gradients of the sum
    /// added into `acc`, and the number of scored tokens.
    pub fn accumulate(&self, source: &[usize], target: &[usize], acc: &mut Params) -> Result<(f64, usize)> {
        let src = self.encoder_input(source);
        if src.is_empty() {
            return Err(Error::arg("empty source sequence"));
        }
        self.check_ids(&src, "source")?;
        self.check_target(target)?;
        let (finals, enc_caches, _) = self.run_stack(&self.params.encoder, &src, self.zero_state(), true);
        let (sum, tokens, d_init) = self.decoder_sum(&finals, target, acc);
        self.encoder_backward(&src, &enc_caches, d_init, acc);
        Ok((sum, tokens))
    }

    fn encoder_backward(&self, src: &[usize], caches: &[Vec<StepCache>], mut d_next: Vec<Vec<f64>>, acc: &mut Params) {
        for t in (0..src.len()).rev() {
            let mut from_above = vec![0.0; self.dims.hidden_dim];
            for l in (0..self.dims.layers).rev() {
                axpy(1.0, &d_next[l], &mut from_above);
                let (d_prev, d_x) = backward_accumulate(
                    &from_above,
                    &caches[t][l],
                    &self.params.encoder[l],
                    &mut acc.encoder[l],
                    None,
                );
                d_next[l] = d_prev;
                from_above = d_x;
            }
            axpy(1.0, &from_above, acc.embedding.row_mut(src[t]));
        }
    }

    /// Summed cross-entropy and token count without gradients.
    pub fn loss_sum(&self, source: &[usize], target: &[usize]) -> Result<(f64, usize)> {
        let src = self.encoder_input(source);
        let init = self.encode(&src)?;
        let eos = self.check_target(target)?;
        self.check_state(&init)?;
        let mut state = init;
        let mut sum = 0.0;
        for t in 0..eos {
            state = self.decoder_step(target[t], state);
            let probs = softmax(&self.logits(&state[self.dims.layers - 1]))?;
            sum += cross_entropy(&probs, target[t + 1])?;
        }
        Ok((sum, eos))
    }

    fn decoder_step(&self, token: usize, mut state: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        let mut x = self.params.embedding.row(token).to_vec();
        for (l, w) in self.params.decoder.iter().enumerate() {
            let (h, _) = mtgru_step(&x, &state[l], w, self.schedule.taus()[l]);
            state[l] = h.clone();
            x = h;
        }
        state
    }

    /// Greedy decoding from `init`: starts at GO, feeds back the argmax
    /// (lowest id on ties) until EOS or `max_len` tokens. PAD and GO are
    /// never emitted; EOS is not part of the returned sequence.
    pub fn decode_greedy(&self, init: &[Vec<f64>], max_len: usize) -> Result<Vec<usize>> {
        self.check_state(init)?;
        let mut state = init.to_vec();
        let mut token = GO;
        let mut out = Vec::new();
        for _ in 0..max_len {
            state = self.decoder_step(token, state);
            let mut logits = self.logits(&state[self.dims.layers - 1]);
            logits[PAD] = f64::NEG_INFINITY;
            logits[GO] = f64::NEG_INFINITY;
            token = argmax(&logits);
            if token == EOS {
                break;
            }
            out.push(token);
        }
        Ok(out)
    }

    /// Encode then greedy-decode.
    pub fn generate(&self, source: &[usize], max_len: usize) -> Result<Vec<usize>> {
        let init = self.encode(&self.encoder_input(source))?;
        self.decode_greedy(&init, max_len)
    }
}

/// `[GO] + content + [EOS]`.
pub fn decoder_target(content: &[usize]) -> Vec<usize> {
    let mut t = Vec::with_capacity(content.len() + 2);
    t.push(GO);
    t.extend_from_slice(content);
    t.push(EOS);
    t
}
