//! Central finite differences against the analytic backward pass.

use super::{backward_accumulate, check_tau, mtgru_step, BackwardFault, CellWeights};
use crate::numkit::Dd;
use crate::error::{Error, Result};

const REL_FLOOR: f64 = 1e-8;

/// `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::arg(format!("epsilon {epsilon} outside [1e-7, 1e-3]")));
    }
    Ok(())
}

/// Maximum relative discrepancy between [`super::mtgru_backward`] and central
/// differences of `L = Σ h_t` over every weight, input and `h_prev`
/// coordinate.
///
/// Perturbed losses are evaluated in double-double arithmetic by a separate
/// transcription of the forward step, so the comparison is limited by the
/// O(ε²) truncation error rather than f64 cancellation.
pub fn finite_diff_check(w: &CellWeights, x: &[f64], h_prev: &[f64], tau: f64, epsilon: f64) -> Result<f64> {
    finite_diff_check_with(w, x, h_prev, tau, epsilon, None)
}

#[doc(hidden)]
pub fn finite_diff_check_with(
    w: &CellWeights,
    x: &[f64],
    h_prev: &[f64],
    tau: f64,
    epsilon: f64,
    fault: Option<BackwardFault>,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    let xs = [x.to_vec()];
    unrolled_check(w, &xs, h_prev, tau, epsilon, fault)
}

/// Same check over a multi-step rollout, with the loss on the final state.
pub fn unrolled_finite_diff_check(
    w: &CellWeights,
    xs: &[Vec<f64>],
    h0: &[f64],
    tau: f64,
    epsilon: f64,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    unrolled_check(w, xs, h0, tau, epsilon, None)
}

/// Extended-precision transcription of the forward step, used only to
/// evaluate perturbed losses.
#[derive(Clone)]
struct DdCell {
    hidden: usize,
    input: usize,
    // w_xr, w_xz, w_xu, w_hr, w_hz, w_hu, row-major
    mats: [Vec<Dd>; 6],
}

impl DdCell {
    fn new(w: &CellWeights) -> Self {
        let conv = |m: &crate::numkit::Matrix| m.data().iter().map(|&v| Dd::from(v)).collect::<Vec<_>>();
        let [a, b, c, d, e, f] = w.matrices();
        Self {
            hidden: w.hidden_dim(),
            input: w.input_dim(),
            mats: [conv(a), conv(b), conv(c), conv(d), conv(e), conv(f)],
        }
    }

    fn step(&self, x: &[Dd], h: &[Dd], tau: Dd) -> Vec<Dd> {
        dd_step(&self.mats, self.input, self.hidden, x, h, tau)
    }

    fn loss(&self, xs: &[Vec<Dd>], h0: &[Dd], tau: Dd) -> Dd {
        let mut h = h0.to_vec();
        for x in xs {
            h = self.step(x, &h, tau);
        }
        h.into_iter().sum()
    }
}

/// Extended-precision MTGRU step over row-major weights ordered as
/// [`CellWeights::NAMES`].
pub(crate) fn dd_step(mats: &[Vec<Dd>], input: usize, hidden: usize, x: &[Dd], h: &[Dd], tau: Dd) -> Vec<Dd> {
    let affine = |k_x: usize, k_h: usize, i: usize, h: &[Dd]| {
        let wx = &mats[k_x][i * input..(i + 1) * input];
        let wh = &mats[k_h][i * hidden..(i + 1) * hidden];
        let a: Dd = wx.iter().zip(x).map(|(&w, &v)| w * v).sum();
        let b: Dd = wh.iter().zip(h).map(|(&w, &v)| w * v).sum();
        a + b
    };
    let r: Vec<Dd> = (0..hidden).map(|i| affine(0, 3, i, h).sigmoid()).collect();
    let z: Vec<Dd> = (0..hidden).map(|i| affine(1, 4, i, h).sigmoid()).collect();
    let rh: Vec<Dd> = r.iter().zip(h).map(|(&a, &b)| a * b).collect();
    let u: Vec<Dd> = (0..hidden).map(|i| affine(2, 5, i, &rh).tanh()).collect();
    let inv = Dd::ONE / tau;
    (0..hidden)
        .map(|i| ((Dd::ONE - z[i]) * h[i] + z[i] * u[i]) * inv + (Dd::ONE - inv) * h[i])
        .collect()
}

pub(crate) fn to_dd(v: &[f64]) -> Vec<Dd> {
    v.iter().map(|&x| Dd::from(x)).collect()
}

fn unrolled_check(
    w: &CellWeights,
    xs: &[Vec<f64>],
    h0: &[f64],
    tau: f64,
    epsilon: f64,
    fault: Option<BackwardFault>,
) -> Result<f64> {
    check_tau(tau)?;
    w.validate()?;
    if xs.is_empty() {
        return Err(Error::arg("empty input sequence"));
    }
    for x in xs {
        w.check_inputs(x, h0)?;
    }

    // analytic
    let mut caches = Vec::with_capacity(xs.len());
    let mut h = h0.to_vec();
    for x in xs {
        let (next, cache) = mtgru_step(x, &h, w, tau);
        caches.push(cache);
        h = next;
    }
    let mut grads = w.zeros_like();
    let mut d_xs = vec![Vec::new(); xs.len()];
    let mut d_h = vec![1.0; w.hidden_dim()];
    for (t, cache) in caches.iter().enumerate().rev() {
        let (d_prev, d_x) = backward_accumulate(&d_h, cache, w, &mut grads, fault);
        d_xs[t] = d_x;
        d_h = d_prev;
    }

    let mut worst = 0.0f64;
    let eps = Dd::from(epsilon);
    let two_eps = Dd::from(2.0) * eps;
    let tau_dd = Dd::from(tau);
    let base = DdCell::new(w);
    let xs_dd: Vec<Vec<Dd>> = xs.iter().map(|x| to_dd(x)).collect();
    let h0_dd = to_dd(h0);

    let mut probe = base.clone();
    for (k, analytic) in grads.matrices().iter().enumerate() {
        for idx in 0..analytic.data().len() {
            let orig = base.mats[k][idx];
            probe.mats[k][idx] = orig + eps;
            let plus = probe.loss(&xs_dd, &h0_dd, tau_dd);
            probe.mats[k][idx] = orig - eps;
            let minus = probe.loss(&xs_dd, &h0_dd, tau_dd);
            probe.mats[k][idx] = orig;
            let numeric = ((plus - minus) / two_eps).to_f64();
            worst = worst.max(relative_error(analytic.data()[idx], numeric));
        }
    }

    let mut xs_probe = xs_dd.clone();
    for t in 0..xs.len() {
        for j in 0..xs[t].len() {
            let orig = xs_dd[t][j];
            xs_probe[t][j] = orig + eps;
            let plus = base.loss(&xs_probe, &h0_dd, tau_dd);
            xs_probe[t][j] = orig - eps;
            let minus = base.loss(&xs_probe, &h0_dd, tau_dd);
            xs_probe[t][j] = orig;
            let numeric = ((plus - minus) / two_eps).to_f64();
            worst = worst.max(relative_error(d_xs[t][j], numeric));
        }
    }

    let mut h_probe = h0_dd.clone();
    for j in 0..h0.len() {
        let orig = h0_dd[j];
        h_probe[j] = orig + eps;
        let plus = base.loss(&xs_dd, &h_probe, tau_dd);
        h_probe[j] = orig - eps;
        let minus = base.loss(&xs_dd, &h_probe, tau_dd);
        h_probe[j] = orig;
        let numeric = ((plus - minus) / two_eps).to_f64();
        worst = worst.max(relative_error(d_h[j], numeric));
    }

    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::HiddenTerm;
    use crate::numkit::Rng;

    fn config(seed: u64, input: usize, hidden: usize) -> (CellWeights, Vec<f64>, Vec<f64>) {
        let mut rng = Rng::new(seed);
        let w = CellWeights::init(input, hidden, &mut rng);
        let x = rng.uniform_vec(input, -1.0, 1.0);
        let h = rng.uniform_vec(hidden, -0.9, 0.9);
        (w, x, h)
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert_eq!(relative_error(1.0, 1.0), 0.0);
        assert!((relative_error(1e-9, 0.0) - 0.1).abs() < 1e-12);
        assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn epsilon_range_enforced() {
        let (w, x, h) = config(0, 2, 2);
        assert!(finite_diff_check(&w, &x, &h, 1.0, 1e-2).is_err());
        assert!(finite_diff_check(&w, &x, &h, 1.0, 1e-8).is_err());
    }

    #[test]
    fn reference_config_passes() {
        let (w, x, h) = config(2024, 5, 7);
        let err = finite_diff_check(&w, &x, &h, 1.5, 1e-5).unwrap();
        assert!(err <= 1e-6, "max relative error {err}");
    }

    #[test]
    fn dropping_leak_is_detected() {
        let (w, x, h) = config(77, 5, 7);
        let err = finite_diff_check_with(&w, &x, &h, 2.0, 1e-5, Some(BackwardFault::Drop(HiddenTerm::Leak))).unwrap();
        assert!(err > 1e-2, "max relative error {err}");
    }

    #[test]
    fn three_step_scalar_chain() {
        let mut rng = Rng::new(31);
        let w = CellWeights::init(1, 1, &mut rng);
        let xs: Vec<Vec<f64>> = (0..3).map(|_| vec![rng.uniform(-1.0, 1.0)]).collect();
        let err = unrolled_finite_diff_check(&w, &xs, &[0.2], 1.7, 1e-5).unwrap();
        assert!(err <= 1e-6, "max relative error {err}");
    }
}
