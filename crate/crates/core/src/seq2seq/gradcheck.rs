//! Central finite differences over the full model loss.

use super::model::{Seq2SeqModel, EOS};
use crate::cells::{dd_step, relative_error, to_dd};
use crate::error::{Error, Result};
use crate::numkit::{Dd, PROB_FLOOR};

/// Maximum relative error between the analytic gradient of the mean
/// per-token loss on one (source, target) pair and central differences with
/// step `epsilon`, over every parameter. Perturbed losses are evaluated in
/// double-double arithmetic.
pub fn model_finite_diff_check(model: &Seq2SeqModel, source: &[usize], target: &[usize], epsilon: f64) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::arg(format!("epsilon {epsilon} outside [1e-7, 1e-3]")));
    }
    let mut grads = model.params.zeros_like();
    let (_, tokens) = model.accumulate(source, target, &mut grads)?;
    grads.scale(1.0 / tokens as f64);

    let src = model.encoder_input(source);
    let eos = target.iter().position(|&t| t == EOS).expect("checked by accumulate");
    let mut probe = DdModel::new(model);
    let eps = Dd::from(epsilon);
    let two_eps = Dd::from(2.0) * eps;
    let mut worst = 0.0f64;
    for (k, g) in grads.matrices().iter().enumerate() {
        for idx in 0..g.data().len() {
            let orig = probe.mats[k][idx];
            probe.mats[k][idx] = orig + eps;
            let plus = probe.loss(&src, &target[..=eos]);
            probe.mats[k][idx] = orig - eps;
            let minus = probe.loss(&src, &target[..=eos]);
            probe.mats[k][idx] = orig;
            let numeric = ((plus - minus) / two_eps).to_f64();
            worst = worst.max(relative_error(g.data()[idx], numeric));
        }
    }
    Ok(worst)
}

/// Extended-precision copy of a model; `mats` follows `Params::matrices`
/// order.
struct DdModel {
    mats: Vec<Vec<Dd>>,
    taus: Vec<Dd>,
    embed: usize,
    hidden: usize,
    vocab: usize,
    layers: usize,
}

impl DdModel {
    fn new(model: &Seq2SeqModel) -> Self {
        Self {
            mats: model.params.matrices().iter().map(|m| to_dd(m.data())).collect(),
            taus: to_dd(model.schedule.taus()),
            embed: model.dims.embed_dim,
            hidden: model.dims.hidden_dim,
            vocab: model.dims.vocab_size,
            layers: model.dims.layers,
        }
    }

    fn stack_step(&self, first: usize, token: usize, state: &mut [Vec<Dd>]) {
        let mut x = self.mats[0][token * self.embed..(token + 1) * self.embed].to_vec();
        for (l, s) in state.iter_mut().enumerate().take(self.layers) {
            let input = if l == 0 { self.embed } else { self.hidden };
            let k = first + 6 * l;
            let h = dd_step(&self.mats[k..k + 6], input, self.hidden, &x, s, self.taus[l]);
            *s = h.clone();
            x = h;
        }
    }

    fn loss(&self, src: &[usize], target: &[usize]) -> Dd {
        let mut state = vec![vec![Dd::ZERO; self.hidden]; self.layers];
        for &t in src {
            self.stack_step(1, t, &mut state);
        }
        let proj = self.mats.last().expect("projection");
        let n = target.len() - 1;
        let mut sum = Dd::ZERO;
        for t in 0..n {
            self.stack_step(1 + 6 * self.layers, target[t], &mut state);
            let top = &state[self.layers - 1];
            let logits: Vec<Dd> = (0..self.vocab)
                .map(|v| proj[v * self.hidden..(v + 1) * self.hidden].iter().zip(top).map(|(&w, &h)| w * h).sum())
                .collect();
            let max = logits.iter().map(|l| l.to_f64()).fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<Dd> = logits.iter().map(|&l| (l - Dd::from(max)).exp()).collect();
            let z: Dd = exps.iter().copied().sum();
            let p = exps[target[t + 1]] / z;
            sum = sum - (p + Dd::from(PROB_FLOOR)).ln();
        }
        sum / Dd::from(n as f64)
    }
}
