use super::model::Params;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
    Sgd,
}

impl OptimizerKind {
    pub const ADAM: OptimizerKind = OptimizerKind::Adam {
        beta1: 0.9,
        beta2: 0.999,
        epsilon: 1e-8,
    };

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Adam { .. } => "adam",
            OptimizerKind::Sgd => "sgd",
        }
    }
}

/// Adam moments (unused for SGD) and the optimizer step count.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub m: Params,
    pub v: Params,
    pub t: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, like: &Params) -> Result<Self> {
        if !learning_rate.is_finite() || learning_rate < 0.0 {
            return Err(Error::Config(format!("learning rate {learning_rate} must be finite and >= 0")));
        }
        if let OptimizerKind::Adam { beta1, beta2, epsilon } = kind {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || epsilon.is_nan() || epsilon <= 0.0 {
                return Err(Error::Config("adam needs betas in [0,1) and epsilon > 0".into()));
            }
        }
        Ok(Self {
            kind,
            learning_rate,
            m: like.zeros_like(),
            v: like.zeros_like(),
            t: 0,
        })
    }

    /// Applies one update. A zero learning rate leaves `params` untouched.
    pub fn apply(&mut self, params: &mut Params, grads: &Params) {
        self.t += 1;
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => {
                if lr == 0.0 {
                    return;
                }
                for (p, g) in params.matrices_mut().into_iter().zip(grads.matrices()) {
                    for (pv, &gv) in p.data_mut().iter_mut().zip(g.data()) {
                        *pv -= lr * gv;
                    }
                }
            }
            OptimizerKind::Adam { beta1, beta2, epsilon } => {
                let c1 = 1.0 - beta1.powf(self.t as f64);
                let c2 = 1.0 - beta2.powf(self.t as f64);
                let it = params
                    .matrices_mut()
                    .into_iter()
                    .zip(grads.matrices())
                    .zip(self.m.matrices_mut().into_iter().zip(self.v.matrices_mut()));
                for ((p, g), (m, v)) in it {
                    let (m, v) = (m.data_mut(), v.data_mut());
                    for (i, (pv, &gv)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                        m[i] = beta1 * m[i] + (1.0 - beta1) * gv;
                        v[i] = beta2 * v[i] + (1.0 - beta2) * gv * gv;
                        if lr != 0.0 {
                            *pv -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + epsilon);
                        }
                    }
                }
            }
        }
    }
}

/// Rescales `grads` so its global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_global_norm(grads: &mut Params, max_norm: f64) -> f64 {
    let norm = grads.sum_sq().sqrt();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}
