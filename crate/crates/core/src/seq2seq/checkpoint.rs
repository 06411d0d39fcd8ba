//! Text checkpoint format.
//!
//! ```text
//! mtgru-ckpt v1
//! [config]          key=value lines: dimensions, schedule, buckets, optimizer
//! [vocab N]         N tokens, one per line, id order
//! [params]          @name then a matrix, for every parameter in fixed order
//! [state]           key=value lines: step, loss EMA, rng position, history
//! [moments]         @m.name / @v.name matrices in the same order
//! [end]
//! ```
//!
//! Matrices use the numkit text form and scalars use Rust's shortest
//! round-trip formatting, so save → load → save is byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use super::bucket::{format_buckets, parse_buckets, Bucket};
use super::model::{Params, Seq2SeqModel};
use super::optim::{Optimizer, OptimizerKind};
use super::schedule::TimescaleSchedule;
use super::train::TrainState;
use crate::cells::CellWeights;
use crate::error::{Error, Result};
use crate::numkit::{Matrix, Rng};

pub const HEADER: &str = "mtgru-ckpt v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Seq2SeqModel,
    pub state: TrainState,
    /// Token strings in id order.
    pub vocab: Vec<String>,
    pub buckets: Vec<Bucket>,
}

fn write_params(out: &mut String, prefix: &str, p: &Params) {
    for (name, m) in p.names().iter().zip(p.matrices()) {
        let _ = writeln!(out, "@{prefix}{name}");
        out.push_str(&m.to_text());
    }
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let opt = &self.state.optimizer;
        let mut s = String::new();
        let _ = writeln!(s, "{HEADER}");
        s.push_str("[config]\n");
        let _ = writeln!(s, "vocab_size={}", m.dims.vocab_size);
        let _ = writeln!(s, "embed_dim={}", m.dims.embed_dim);
        let _ = writeln!(s, "hidden_dim={}", m.dims.hidden_dim);
        let _ = writeln!(s, "layers={}", m.dims.layers);
        let taus: Vec<String> = m.schedule.taus().iter().map(|t| format!("{t:?}")).collect();
        let _ = writeln!(s, "schedule={}", taus.join(","));
        let _ = writeln!(s, "reverse_source={}", m.reverse_source);
        let _ = writeln!(s, "buckets={}", format_buckets(&self.buckets));
        let _ = writeln!(s, "optimizer={}", opt.kind.name());
        let _ = writeln!(s, "learning_rate={:?}", opt.learning_rate);
        if let OptimizerKind::Adam { beta1, beta2, epsilon } = opt.kind {
            let _ = writeln!(s, "beta1={beta1:?}");
            let _ = writeln!(s, "beta2={beta2:?}");
            let _ = writeln!(s, "epsilon={epsilon:?}");
        }
        let _ = writeln!(s, "[vocab {}]", self.vocab.len());
        for t in &self.vocab {
            let _ = writeln!(s, "{t}");
        }
        s.push_str("[params]\n");
        write_params(&mut s, "", &m.params);
        s.push_str("[state]\n");
        let st = &self.state;
        let _ = writeln!(s, "step={}", st.step);
        let _ = writeln!(s, "train_loss_ema={:?}", st.train_loss_ema);
        let _ = writeln!(s, "rng_seed={}", st.rng.seed());
        let _ = writeln!(s, "rng_word_pos={}", st.rng.word_pos());
        let _ = writeln!(s, "optimizer_step={}", opt.t);
        let hist: Vec<String> = st.dev_history.iter().map(|(k, p)| format!("{k}:{p:?}")).collect();
        let _ = writeln!(s, "dev_history={}", hist.join(";"));
        s.push_str("[moments]\n");
        write_params(&mut s, "m.", &opt.m);
        write_params(&mut s, "v.", &opt.v);
        s.push_str("[end]\n");
        s
    }

    /// Writes atomically: the previous file stays intact until the new one
    /// is complete.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        }
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = std::path::PathBuf::from(tmp);
        std::fs::write(&tmp, self.to_text()).map_err(|e| Error::io(format!("writing {}", tmp.display()), e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(format!("renaming onto {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader {
            lines: text.lines(),
            section: "header".into(),
        };
        let header = r.next()?;
        if header != HEADER {
            return Err(r.err(format!("expected `{HEADER}`, found `{header}`")));
        }

        r.expect_section("[config]")?;
        let vocab_size: usize = r.kv("vocab_size")?;
        let embed_dim: usize = r.kv("embed_dim")?;
        let hidden_dim: usize = r.kv("hidden_dim")?;
        let layers: usize = r.kv("layers")?;
        let schedule = TimescaleSchedule::parse(&r.kv::<String>("schedule")?, layers).map_err(|e| r.err(e))?;
        let reverse_source: bool = r.kv("reverse_source")?;
        let buckets = parse_buckets(&r.kv::<String>("buckets")?).map_err(|e| r.err(e))?;
        let opt_name: String = r.kv("optimizer")?;
        let learning_rate: f64 = r.kv("learning_rate")?;
        let kind = match opt_name.as_str() {
            "adam" => OptimizerKind::Adam {
                beta1: r.kv("beta1")?,
                beta2: r.kv("beta2")?,
                epsilon: r.kv("epsilon")?,
            },
            "sgd" => OptimizerKind::Sgd,
            other => return Err(r.err(format!("unknown optimizer `{other}`"))),
        };

        r.section = "vocab".into();
        let line = r.next()?;
        let n: usize = line
            .strip_prefix("[vocab ")
            .and_then(|l| l.strip_suffix(']'))
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| r.err(format!("expected `[vocab N]`, found `{line}`")))?;
        let mut vocab = Vec::with_capacity(n);
        for _ in 0..n {
            vocab.push(r.next()?.to_string());
        }
        if n != vocab_size {
            return Err(r.err(format!("{n} tokens but vocab_size={vocab_size}")));
        }

        r.expect_section("[params]")?;
        let params = r.params("", layers)?;
        let model = Seq2SeqModel::from_params(params, schedule, reverse_source).map_err(|e| r.err(e))?;
        let dims = model.dims;
        if (dims.vocab_size, dims.embed_dim, dims.hidden_dim) != (vocab_size, embed_dim, hidden_dim) {
            return Err(r.err("matrix shapes disagree with [config]"));
        }

        r.expect_section("[state]")?;
        let step: u64 = r.kv("step")?;
        let train_loss_ema: f64 = r.kv("train_loss_ema")?;
        let rng_seed: u64 = r.kv("rng_seed")?;
        let rng_word_pos: u128 = r.kv("rng_word_pos")?;
        let opt_t: u64 = r.kv("optimizer_step")?;
        let hist: String = r.kv("dev_history")?;
        let dev_history = if hist.is_empty() {
            Vec::new()
        } else {
            hist.split(';')
                .map(|e| {
                    e.split_once(':')
                        .and_then(|(k, p)| Some((k.parse().ok()?, p.parse().ok()?)))
                        .ok_or_else(|| r.err(format!("bad dev_history entry `{e}`")))
                })
                .collect::<Result<Vec<_>>>()?
        };

        r.expect_section("[moments]")?;
        let m = r.params("m.", layers)?;
        let v = r.params("v.", layers)?;
        for (a, b) in m.matrices().iter().chain(v.matrices().iter()).zip(model.params.matrices().iter().cycle()) {
            if a.shape() != b.shape() {
                return Err(r.err("moment shape differs from its parameter"));
            }
        }
        r.expect_section("[end]")?;
        if r.lines.any(|l| !l.trim().is_empty()) {
            return Err(r.err("data after [end]"));
        }

        let mut optimizer = Optimizer::new(kind, learning_rate, &model.params).map_err(|e| r.err(e))?;
        optimizer.m = m;
        optimizer.v = v;
        optimizer.t = opt_t;
        Ok(Self {
            model,
            state: TrainState {
                step,
                train_loss_ema,
                dev_history,
                optimizer,
                rng: Rng::restore(rng_seed, rng_word_pos),
            },
            vocab,
            buckets,
        })
    }
}

struct Reader<'a> {
    lines: std::str::Lines<'a>,
    section: String,
}

impl<'a> Reader<'a> {
    fn err(&self, message: impl ToString) -> Error {
        Error::ckpt(self.section.clone(), message.to_string())
    }

    fn next(&mut self) -> Result<&'a str> {
        self.lines.next().ok_or_else(|| self.err("unexpected end of file"))
    }

    fn expect_section(&mut self, tag: &str) -> Result<()> {
        self.section = tag.trim_matches(|c| c == '[' || c == ']').to_string();
        let line = self.next()?;
        if line != tag {
            return Err(self.err(format!("expected `{tag}`, found `{line}`")));
        }
        Ok(())
    }

    fn kv<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let line = self.next()?;
        let value = line
            .split_once('=')
            .filter(|(k, _)| *k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| self.err(format!("expected `{key}=…`, found `{line}`")))?;
        value.parse().map_err(|_| self.err(format!("bad value for {key}: `{value}`")))
    }

    fn matrix(&mut self, name: &str) -> Result<Matrix> {
        let line = self.next()?;
        if line.strip_prefix('@') != Some(name) {
            return Err(self.err(format!("expected `@{name}`, found `{line}`")));
        }
        Matrix::read_text(&mut self.lines).map_err(|e| self.err(format!("{name}: {e}")))
    }

    fn params(&mut self, prefix: &str, layers: usize) -> Result<Params> {
        let embedding = self.matrix(&format!("{prefix}embedding"))?;
        let mut stacks = Vec::new();
        for stack in ["encoder", "decoder"] {
            let mut cells = Vec::with_capacity(layers);
            for l in 0..layers {
                let mut ms = Vec::with_capacity(6);
                for n in CellWeights::NAMES {
                    ms.push(self.matrix(&format!("{prefix}{stack}.{l}.{n}"))?);
                }
                let arr: [Matrix; 6] = ms.try_into().expect("six matrices");
                cells.push(CellWeights::from_matrices(arr).map_err(|e| self.err(e))?);
            }
            stacks.push(cells);
        }
        let projection = self.matrix(&format!("{prefix}projection"))?;
        let decoder = stacks.pop().expect("two stacks");
        let encoder = stacks.pop().expect("two stacks");
        Ok(Params {
            embedding,
            encoder,
            decoder,
            projection,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq2seq::model::ModelDims;
    use crate::seq2seq::train::{train_step, Batch, TrainConfig};

    fn trained() -> Checkpoint {
        let dims = ModelDims {
            vocab_size: 7,
            embed_dim: 3,
            hidden_dim: 4,
            layers: 2,
        };
        let mut model =
            Seq2SeqModel::new(dims, TimescaleSchedule::new(vec![1.0, 1.5]).unwrap(), &mut Rng::new(4)).unwrap();
        let cfg = TrainConfig::default();
        let mut state = TrainState::new(&model, &cfg, 8).unwrap();
        let e = crate::seq2seq::train::Example {
            source: vec![4, 5, 6],
            target: vec![6, 5],
        };
        let batch = Batch::from_examples(0, Bucket::new(4, 3), &[&e]);
        for _ in 0..3 {
            train_step(&mut model, &mut state, &batch, 5.0).unwrap();
        }
        state.rng.next_u64();
        state.dev_history.push((3, 6.5));
        Checkpoint {
            model,
            state,
            vocab: ["_PAD", "_GO", "_EOS", "_UNK", "a", "b", "c"].map(String::from).to_vec(),
            buckets: vec![Bucket::new(4, 3)],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let ck = trained();
        let text = ck.to_text();
        let back = Checkpoint::from_text(&text).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn version_mismatch_rejected() {
        let text = trained().to_text().replacen("v1", "v2", 1);
        let err = Checkpoint::from_text(&text).unwrap_err().to_string();
        assert!(err.contains("header"), "{err}");
    }

    #[test]
    fn truncation_names_section() {
        let text = trained().to_text();
        let cut = &text[..text.find("[moments]").unwrap() + 40];
        let err = Checkpoint::from_text(cut).unwrap_err().to_string();
        assert!(err.contains("moments"), "{err}");
        let cut = &text[..text.find("@decoder.1.w_hz").unwrap() + 20];
        let err = Checkpoint::from_text(cut).unwrap_err().to_string();
        assert!(err.contains("params"), "{err}");
    }

    #[test]
    fn corrupt_value_names_section() {
        let text = trained().to_text().replace("step=3\n", "step=three\n");
        let err = Checkpoint::from_text(&text).unwrap_err().to_string();
        assert!(err.contains("state"), "{err}");
    }
}
