//! GRU and multiple-timescale GRU (MTGRU) cells.
//!
//! The cell has no bias vectors. One step computes
//!
//! ```text
//! r = σ(W_xr x + W_hr h_prev)
//! z = σ(W_xz x + W_hz h_prev)
//! u = tanh(W_xu x + W_hu (r ⊙ h_prev))
//! g = (1 - z) ⊙ h_prev + z ⊙ u                  // plain GRU update
//! h = g / τ + (1 - 1/τ) h_prev                   // timescale mixing
//! ```
//!
//! and with τ = 1 the mixing term vanishes, leaving the GRU. The backward
//! pass returns δE/δh_prev as the sum of five contributions: the update gate
//! path through W_hzᵀ, the candidate path through W_huᵀ gated by r, the reset
//! gate path through W_hrᵀ, the direct (1 - z) carry, and the (1 - 1/τ)
//! leak. Input and weight gradients follow from the same chain rule.

mod gradcheck;

pub use gradcheck::{finite_diff_check, finite_diff_check_with, relative_error, unrolled_finite_diff_check};
pub(crate) use gradcheck::{dd_step, to_dd};

use crate::error::{Error, Result};
use crate::numkit::{hadamard_vec, sigmoid, xavier_init, Matrix, Rng};

/// The six parameter matrices of one recurrent layer.
#[derive(Debug, Clone, PartialEq)]
pub struct CellWeights {
    pub w_xr: Matrix,
    pub w_xz: Matrix,
    pub w_xu: Matrix,
    pub w_hr: Matrix,
    pub w_hz: Matrix,
    pub w_hu: Matrix,
}

impl CellWeights {
    /// Names in serialization order.
    pub const NAMES: [&'static str; 6] = ["w_xr", "w_xz", "w_xu", "w_hr", "w_hz", "w_hu"];

    pub fn new(
        w_xr: Matrix,
        w_xz: Matrix,
        w_xu: Matrix,
        w_hr: Matrix,
        w_hz: Matrix,
        w_hu: Matrix,
    ) -> Result<Self> {
        let w = Self {
            w_xr,
            w_xz,
            w_xu,
            w_hr,
            w_hz,
            w_hu,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn from_matrices(ms: [Matrix; 6]) -> Result<Self> {
        let [a, b, c, d, e, f] = ms;
        Self::new(a, b, c, d, e, f)
    }

    /// Glorot-uniform initialisation, drawn in [`Self::NAMES`] order.
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut Rng) -> Self {
        Self {
            w_xr: xavier_init(hidden_dim, input_dim, rng),
            w_xz: xavier_init(hidden_dim, input_dim, rng),
            w_xu: xavier_init(hidden_dim, input_dim, rng),
            w_hr: xavier_init(hidden_dim, hidden_dim, rng),
            w_hz: xavier_init(hidden_dim, hidden_dim, rng),
            w_hu: xavier_init(hidden_dim, hidden_dim, rng),
        }
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            w_xr: Matrix::zeros(hidden_dim, input_dim),
            w_xz: Matrix::zeros(hidden_dim, input_dim),
            w_xu: Matrix::zeros(hidden_dim, input_dim),
            w_hr: Matrix::zeros(hidden_dim, hidden_dim),
            w_hz: Matrix::zeros(hidden_dim, hidden_dim),
            w_hu: Matrix::zeros(hidden_dim, hidden_dim),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.hidden_dim())
    }

    pub fn input_dim(&self) -> usize {
        self.w_xr.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_hr.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let (h, i) = self.w_xr.shape();
        for m in [&self.w_xz, &self.w_xu] {
            if m.shape() != (h, i) {
                return Err(Error::shape("CellWeights input side", (h, i), m.shape()));
            }
        }
        for m in [&self.w_hr, &self.w_hz, &self.w_hu] {
            if m.shape() != (h, h) {
                return Err(Error::shape("CellWeights hidden side", (h, h), m.shape()));
            }
        }
        Ok(())
    }

    pub fn matrices(&self) -> [&Matrix; 6] {
        [
            &self.w_xr, &self.w_xz, &self.w_xu, &self.w_hr, &self.w_hz, &self.w_hu,
        ]
    }

    pub fn matrices_mut(&mut self) -> [&mut Matrix; 6] {
        [
            &mut self.w_xr,
            &mut self.w_xz,
            &mut self.w_xu,
            &mut self.w_hr,
            &mut self.w_hz,
            &mut self.w_hu,
        ]
    }

    fn check_inputs(&self, x: &[f64], h_prev: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::shape("cell input", (self.input_dim(), 1), (x.len(), 1)));
        }
        if h_prev.len() != self.hidden_dim() {
            return Err(Error::shape(
                "cell hidden state",
                (self.hidden_dim(), 1),
                (h_prev.len(), 1),
            ));
        }
        Ok(())
    }
}

/// Everything one forward step leaves behind for its backward step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub pre_r: Vec<f64>,
    pub pre_z: Vec<f64>,
    pub pre_u: Vec<f64>,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepGrads {
    pub d_h_prev: Vec<f64>,
    pub d_x: Vec<f64>,
    pub weights: CellWeights,
}

/// Gradients of a loss on the final state of a single-layer rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceGrads {
    /// δE/δh_0.
    pub d_h0: Vec<f64>,
    /// δE/δx_t for every step, in forward order.
    pub d_xs: Vec<Vec<f64>>,
    pub weights: CellWeights,
}

pub fn check_tau(tau: f64) -> Result<()> {
    if !tau.is_finite() || tau < 1.0 {
        return Err(Error::Domain(format!("timescale must be a finite value >= 1, got {tau}")));
    }
    Ok(())
}

/// One MTGRU step.
pub fn mtgru_forward(
    x: &[f64],
    h_prev: &[f64],
    w: &CellWeights,
    tau: f64,
) -> Result<(Vec<f64>, StepCache)> {
    check_tau(tau)?;
    w.check_inputs(x, h_prev)?;
    Ok(mtgru_step(x, h_prev, w, tau))
}

/// Unchecked forward step; callers guarantee shapes and τ.
pub(crate) fn mtgru_step(x: &[f64], h_prev: &[f64], w: &CellWeights, tau: f64) -> (Vec<f64>, StepCache) {
    let n = w.hidden_dim();
    let mut pre_r = vec![0.0; n];
    let mut pre_z = vec![0.0; n];
    let mut pre_u = vec![0.0; n];
    for i in 0..n {
        pre_r[i] = crate::numkit::dot(w.w_xr.row(i), x) + crate::numkit::dot(w.w_hr.row(i), h_prev);
        pre_z[i] = crate::numkit::dot(w.w_xz.row(i), x) + crate::numkit::dot(w.w_hz.row(i), h_prev);
    }
    let r: Vec<f64> = pre_r.iter().map(|&v| sigmoid(v)).collect();
    let z: Vec<f64> = pre_z.iter().map(|&v| sigmoid(v)).collect();
    let rh = hadamard_vec(&r, h_prev);
    for (i, p) in pre_u.iter_mut().enumerate() {
        *p = crate::numkit::dot(w.w_xu.row(i), x) + crate::numkit::dot(w.w_hu.row(i), &rh);
    }
    let u: Vec<f64> = pre_u.iter().map(|&v| v.tanh()).collect();

    let inv_tau = 1.0 / tau;
    let leak = 1.0 - inv_tau;
    let h = (0..n)
        .map(|i| ((1.0 - z[i]) * h_prev[i] + z[i] * u[i]) * inv_tau + leak * h_prev[i])
        .collect();
    let cache = StepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        r,
        z,
        u,
        pre_r,
        pre_z,
        pre_u,
        tau,
    };
    (h, cache)
}

/// One plain GRU step, written independently of the MTGRU path.
pub fn gru_forward(x: &[f64], h_prev: &[f64], w: &CellWeights) -> Result<(Vec<f64>, StepCache)> {
    w.check_inputs(x, h_prev)?;
    let add = |a: Vec<f64>, b: Vec<f64>| -> Vec<f64> { a.iter().zip(&b).map(|(p, q)| p + q).collect() };
    let pre_r = add(w.w_xr.matvec(x)?, w.w_hr.matvec(h_prev)?);
    let pre_z = add(w.w_xz.matvec(x)?, w.w_hz.matvec(h_prev)?);
    let r = Matrix::column(&pre_r).sigmoid().data().to_vec();
    let z = Matrix::column(&pre_z).sigmoid().data().to_vec();
    let rh = hadamard_vec(&r, h_prev);
    let pre_u = add(w.w_xu.matvec(x)?, w.w_hu.matvec(&rh)?);
    let u = Matrix::column(&pre_u).tanh().data().to_vec();
    let h = z
        .iter()
        .zip(&u)
        .zip(h_prev)
        .map(|((&zi, &ui), &hi)| (1.0 - zi) * hi + zi * ui)
        .collect();
    let cache = StepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        r,
        z,
        u,
        pre_r,
        pre_z,
        pre_u,
        tau: 1.0,
    };
    Ok((h, cache))
}

/// The five summands of δE/δh_prev.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HiddenTerm {
    UpdateGate,
    Candidate,
    ResetGate,
    Carry,
    Leak,
}

impl HiddenTerm {
    pub const ALL: [HiddenTerm; 5] = [
        HiddenTerm::UpdateGate,
        HiddenTerm::Candidate,
        HiddenTerm::ResetGate,
        HiddenTerm::Carry,
        HiddenTerm::Leak,
    ];
}

/// Deliberate corruptions of the backward pass, used to prove the gradient
/// checker can tell a wrong derivative from a right one.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackwardFault {
    Drop(HiddenTerm),
    FlipLeakSign,
}

fn check_cache(cache: &StepCache, w: &CellWeights, d_h: &[f64]) -> Result<()> {
    w.check_inputs(&cache.x, &cache.h_prev)?;
    let n = w.hidden_dim();
    for (name, v) in [
        ("d_h", d_h),
        ("r", &cache.r[..]),
        ("z", &cache.z[..]),
        ("u", &cache.u[..]),
    ] {
        if v.len() != n {
            let _ = name;
            return Err(Error::shape("mtgru_backward cache", (n, 1), (v.len(), 1)));
        }
    }
    Ok(())
}

/// Backward pass of one MTGRU step given δE/δh_t.
pub fn mtgru_backward(d_h: &[f64], cache: &StepCache, w: &CellWeights) -> Result<StepGrads> {
    check_cache(cache, w, d_h)?;
    let mut weights = w.zeros_like();
    let (d_h_prev, d_x) = backward_accumulate(d_h, cache, w, &mut weights, None);
    Ok(StepGrads {
        d_h_prev,
        d_x,
        weights,
    })
}

#[doc(hidden)]
pub fn mtgru_backward_faulty(
    d_h: &[f64],
    cache: &StepCache,
    w: &CellWeights,
    fault: Option<BackwardFault>,
) -> Result<StepGrads> {
    check_cache(cache, w, d_h)?;
    let mut weights = w.zeros_like();
    let (d_h_prev, d_x) = backward_accumulate(d_h, cache, w, &mut weights, fault);
    Ok(StepGrads {
        d_h_prev,
        d_x,
        weights,
    })
}

/// Backward step that adds weight gradients into `acc` and returns
/// `(δE/δh_prev, δE/δx)`. Shapes are the caller's responsibility.
pub(crate) fn backward_accumulate(
    d_h: &[f64],
    c: &StepCache,
    w: &CellWeights,
    acc: &mut CellWeights,
    fault: Option<BackwardFault>,
) -> (Vec<f64>, Vec<f64>) {
    let n = d_h.len();
    let keep = |t: HiddenTerm| fault != Some(BackwardFault::Drop(t));
    let inv_tau = 1.0 / c.tau;
    let leak = if fault == Some(BackwardFault::FlipLeakSign) {
        -(1.0 - inv_tau)
    } else {
        1.0 - inv_tau
    };

    let mut d_h_prev = vec![0.0; n];
    let mut d_pre_z = vec![0.0; n];
    let mut d_pre_u = vec![0.0; n];
    for i in 0..n {
        // gradient reaching the GRU update g before the 1/τ scaling
        let dg = d_h[i] * inv_tau;
        if keep(HiddenTerm::Leak) {
            d_h_prev[i] += leak * d_h[i];
        }
        if keep(HiddenTerm::Carry) {
            d_h_prev[i] += dg * (1.0 - c.z[i]);
        }
        d_pre_z[i] = dg * (c.u[i] - c.h_prev[i]) * c.z[i] * (1.0 - c.z[i]);
        d_pre_u[i] = dg * c.z[i] * (1.0 - c.u[i] * c.u[i]);
    }

    let mut d_rh = vec![0.0; n];
    w.w_hu.matvec_t_acc(&d_pre_u, &mut d_rh);
    let mut d_pre_r = vec![0.0; n];
    for i in 0..n {
        if keep(HiddenTerm::Candidate) {
            d_h_prev[i] += d_rh[i] * c.r[i];
        }
        d_pre_r[i] = d_rh[i] * c.h_prev[i] * c.r[i] * (1.0 - c.r[i]);
    }
    if keep(HiddenTerm::UpdateGate) {
        w.w_hz.matvec_t_acc(&d_pre_z, &mut d_h_prev);
    }
    if keep(HiddenTerm::ResetGate) {
        w.w_hr.matvec_t_acc(&d_pre_r, &mut d_h_prev);
    }

    let mut d_x = vec![0.0; w.input_dim()];
    w.w_xr.matvec_t_acc(&d_pre_r, &mut d_x);
    w.w_xz.matvec_t_acc(&d_pre_z, &mut d_x);
    w.w_xu.matvec_t_acc(&d_pre_u, &mut d_x);

    let rh = hadamard_vec(&c.r, &c.h_prev);
    acc.w_xr.add_outer(&d_pre_r, &c.x);
    acc.w_hr.add_outer(&d_pre_r, &c.h_prev);
    acc.w_xz.add_outer(&d_pre_z, &c.x);
    acc.w_hz.add_outer(&d_pre_z, &c.h_prev);
    acc.w_xu.add_outer(&d_pre_u, &c.x);
    acc.w_hu.add_outer(&d_pre_u, &rh);

    (d_h_prev, d_x)
}

/// Plain GRU backward written directly from the GRU equations, kept apart
/// from [`mtgru_backward`] so the two can be compared.
pub fn gru_backward(d_h: &[f64], cache: &StepCache, w: &CellWeights) -> Result<StepGrads> {
    check_cache(cache, w, d_h)?;
    let n = w.hidden_dim();
    let (r, z, u, h) = (&cache.r, &cache.z, &cache.u, &cache.h_prev);

    // h = (1-z)h_prev + z u
    let dz: Vec<f64> = (0..n).map(|i| d_h[i] * (u[i] - h[i])).collect();
    let du: Vec<f64> = (0..n).map(|i| d_h[i] * z[i]).collect();
    let da_z: Vec<f64> = (0..n).map(|i| dz[i] * z[i] * (1.0 - z[i])).collect();
    let da_u: Vec<f64> = (0..n).map(|i| du[i] * (1.0 - u[i] * u[i])).collect();
    let d_rh = w.w_hu.matvec_t(&da_u)?;
    let dr: Vec<f64> = (0..n).map(|i| d_rh[i] * h[i]).collect();
    let da_r: Vec<f64> = (0..n).map(|i| dr[i] * r[i] * (1.0 - r[i])).collect();

    let from_z = w.w_hz.matvec_t(&da_z)?;
    let from_r = w.w_hr.matvec_t(&da_r)?;
    let d_h_prev = (0..n)
        .map(|i| d_h[i] * (1.0 - z[i]) + d_rh[i] * r[i] + from_z[i] + from_r[i])
        .collect();
    let xr = w.w_xr.matvec_t(&da_r)?;
    let xz = w.w_xz.matvec_t(&da_z)?;
    let xu = w.w_xu.matvec_t(&da_u)?;
    let d_x = (0..w.input_dim()).map(|j| xr[j] + xz[j] + xu[j]).collect();

    let outer = |a: &[f64], b: &[f64]| {
        let mut m = Matrix::zeros(a.len(), b.len());
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                m.set(i, j, ai * bj);
            }
        }
        m
    };
    let rh = hadamard_vec(r, h);
    let weights = CellWeights {
        w_xr: outer(&da_r, &cache.x),
        w_xz: outer(&da_z, &cache.x),
        w_xu: outer(&da_u, &cache.x),
        w_hr: outer(&da_r, h),
        w_hz: outer(&da_z, h),
        w_hu: outer(&da_u, &rh),
    };
    Ok(StepGrads {
        d_h_prev,
        d_x,
        weights,
    })
}

/// Runs one layer over `xs` from `h0`, returning every state and cache.
pub fn rollout(
    xs: &[Vec<f64>],
    h0: &[f64],
    w: &CellWeights,
    tau: f64,
) -> Result<(Vec<Vec<f64>>, Vec<StepCache>)> {
    let mut h = h0.to_vec();
    let mut states = Vec::with_capacity(xs.len());
    let mut caches = Vec::with_capacity(xs.len());
    for x in xs {
        let (next, cache) = mtgru_forward(x, &h, w, tau)?;
        states.push(next.clone());
        caches.push(cache);
        h = next;
    }
    Ok((states, caches))
}

/// Backpropagation through time for a single layer: applies
/// [`mtgru_backward`] from the last cache to the first, threading
/// δE/δh_{t-1} into the step before and summing weight gradients.
pub fn unroll_backward(d_h_final: &[f64], caches: &[StepCache], w: &CellWeights) -> Result<SequenceGrads> {
    if caches.is_empty() {
        return Err(Error::arg("unroll_backward needs at least one cached step"));
    }
    for c in caches {
        check_cache(c, w, d_h_final)?;
    }
    let mut weights = w.zeros_like();
    let mut d_xs = vec![Vec::new(); caches.len()];
    let mut d_h = d_h_final.to_vec();
    for (t, cache) in caches.iter().enumerate().rev() {
        let (d_prev, d_x) = backward_accumulate(&d_h, cache, w, &mut weights, None);
        d_xs[t] = d_x;
        d_h = d_prev;
    }
    Ok(SequenceGrads {
        d_h0: d_h,
        d_xs,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_weights(v: f64) -> CellWeights {
        let m = || Matrix::filled(1, 1, v);
        CellWeights::new(m(), m(), m(), m(), m(), m()).unwrap()
    }

    fn random_config(seed: u64, input: usize, hidden: usize) -> (CellWeights, Vec<f64>, Vec<f64>) {
        let mut rng = Rng::new(seed);
        let w = CellWeights::init(input, hidden, &mut rng);
        let x = rng.uniform_vec(input, -1.0, 1.0);
        let h = rng.uniform_vec(hidden, -0.9, 0.9);
        (w, x, h)
    }

    #[test]
    fn scalar_step_matches_hand_evaluation() {
        let w = scalar_weights(0.5);
        // r = z = σ(0.5), u = tanh(0.5) since h_prev = 0
        let s = 1.0 / (1.0 + (-0.5f64).exp());
        let expected_gru = s * 0.5f64.tanh();
        let (h, _) = mtgru_forward(&[1.0], &[0.0], &w, 2.0).unwrap();
        assert!((h[0] - expected_gru / 2.0).abs() < 1e-15);
        assert!((h[0] - 0.143_824_568).abs() < 1e-9);
        let (g, _) = gru_forward(&[1.0], &[0.0], &w).unwrap();
        assert!((g[0] - 0.287_649_137).abs() < 1e-9);
    }

    #[test]
    fn tau_one_is_bitwise_gru() {
        for seed in 0..20 {
            let (w, x, h) = random_config(seed, 4, 6);
            let (a, _) = mtgru_forward(&x, &h, &w, 1.0).unwrap();
            let (b, _) = gru_forward(&x, &h, &w).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert_eq!(p.to_bits(), q.to_bits());
            }
        }
    }

    #[test]
    fn large_tau_freezes_state() {
        let (w, x, h) = random_config(5, 3, 4);
        let (gru, _) = gru_forward(&x, &h, &w).unwrap();
        let (slow, _) = mtgru_forward(&x, &h, &w, 1e6).unwrap();
        let update: f64 = gru.iter().zip(&h).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let moved: f64 = slow.iter().zip(&h).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(moved <= 2e-6 * update, "{moved} vs {update}");
    }

    #[test]
    fn leak_decomposition() {
        for (seed, tau) in [(1, 1.25), (2, 1.5), (3, 1.7), (4, 2.5)] {
            let (w, x, h) = random_config(seed, 5, 5);
            let (g, _) = gru_forward(&x, &h, &w).unwrap();
            let (m, _) = mtgru_forward(&x, &h, &w, tau).unwrap();
            for i in 0..5 {
                let expect = g[i] / tau + (1.0 - 1.0 / tau) * h[i];
                assert!((m[i] - expect).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn tau_below_one_is_rejected() {
        let w = scalar_weights(0.1);
        assert!(matches!(mtgru_forward(&[0.0], &[0.0], &w, 0.9), Err(Error::Domain(_))));
        assert!(mtgru_forward(&[0.0], &[0.0], &w, f64::NAN).is_err());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let (w, _, _) = random_config(0, 3, 4);
        assert!(matches!(mtgru_forward(&[0.0; 2], &[0.0; 4], &w, 1.0), Err(Error::Shape { .. })));
        assert!(mtgru_forward(&[0.0; 3], &[0.0; 3], &w, 1.0).is_err());
        let bad = CellWeights::new(
            Matrix::zeros(4, 3),
            Matrix::zeros(4, 2),
            Matrix::zeros(4, 3),
            Matrix::zeros(4, 4),
            Matrix::zeros(4, 4),
            Matrix::zeros(4, 4),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn gate_saturated_closed_keeps_state() {
        // Very negative update-gate weights force z -> 0.
        let mut w = scalar_weights(0.3);
        w.w_xz = Matrix::filled(1, 1, -1e4);
        let (h, _) = gru_forward(&[1.0], &[0.4], &w).unwrap();
        assert_eq!(h[0], 0.4);
    }

    #[test]
    fn zero_state_reduces_to_gated_candidate() {
        let (w, x, _) = random_config(9, 3, 4);
        let h0 = vec![0.0; 4];
        let (h, c) = gru_forward(&x, &h0, &w).unwrap();
        let cand = w.w_xu.matvec(&x).unwrap();
        for i in 0..4 {
            assert!((h[i] - c.z[i] * cand[i].tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn leak_term_vanishes_at_tau_one() {
        let (w, x, h) = random_config(21, 4, 5);
        let (_, cache) = mtgru_forward(&x, &h, &w, 1.0).unwrap();
        let d_h = Rng::new(1).uniform_vec(5, -1.0, 1.0);
        let full = mtgru_backward(&d_h, &cache, &w).unwrap();
        let no_leak = mtgru_backward_faulty(&d_h, &cache, &w, Some(BackwardFault::Drop(HiddenTerm::Leak))).unwrap();
        assert_eq!(full, no_leak);
        let gru = gru_backward(&d_h, &cache, &w).unwrap();
        for (a, b) in full.d_h_prev.iter().zip(&gru.d_h_prev) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let (w, x, h) = random_config(3, 3, 3);
        let (_, cache) = mtgru_forward(&x, &h, &w, 1.7).unwrap();
        let g = mtgru_backward(&[0.0; 3], &cache, &w).unwrap();
        assert!(g.d_h_prev.iter().chain(&g.d_x).all(|&v| v == 0.0));
        assert!(g.weights.matrices().iter().all(|m| m.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn backward_is_linear_in_upstream() {
        let (w, x, h) = random_config(8, 4, 6);
        let (_, cache) = mtgru_forward(&x, &h, &w, 1.5).unwrap();
        let d = Rng::new(2).uniform_vec(6, -1.0, 1.0);
        let alpha = -2.75;
        let scaled: Vec<f64> = d.iter().map(|v| alpha * v).collect();
        let a = mtgru_backward(&d, &cache, &w).unwrap();
        let b = mtgru_backward(&scaled, &cache, &w).unwrap();
        for (p, q) in a.d_h_prev.iter().zip(&b.d_h_prev).chain(a.d_x.iter().zip(&b.d_x)) {
            assert!((alpha * p - q).abs() <= 1e-12);
        }
        for (ma, mb) in a.weights.matrices().iter().zip(b.weights.matrices()) {
            for (p, q) in ma.data().iter().zip(mb.data()) {
                assert!((alpha * p - q).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn unroll_of_one_step_equals_single_backward() {
        let (w, x, h) = random_config(12, 3, 4);
        let (_, caches) = rollout(&[x], &h, &w, 1.25).unwrap();
        let d = vec![1.0, -0.5, 0.25, 2.0];
        let single = mtgru_backward(&d, &caches[0], &w).unwrap();
        let unrolled = unroll_backward(&d, &caches, &w).unwrap();
        assert_eq!(single.d_h_prev, unrolled.d_h0);
        assert_eq!(single.d_x, unrolled.d_xs[0]);
        assert_eq!(single.weights, unrolled.weights);
    }

    #[test]
    fn unroll_rejects_empty_and_handles_zero() {
        let (w, x, h) = random_config(13, 2, 3);
        assert!(matches!(unroll_backward(&[0.0; 3], &[], &w), Err(Error::Argument(_))));
        let (_, caches) = rollout(&[x.clone(), x.clone(), x], &h, &w, 1.5).unwrap();
        let g = unroll_backward(&[0.0; 3], &caches, &w).unwrap();
        assert!(g.d_h0.iter().all(|&v| v == 0.0));
        assert!(g.weights.matrices().iter().all(|m| m.data().iter().all(|&v| v == 0.0)));
    }
}
