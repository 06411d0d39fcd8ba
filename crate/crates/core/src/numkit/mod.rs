//! Dense linear algebra, activations and the seeded random stream.

mod dd;
mod matrix;
mod rng;

pub use dd::Dd;
pub use matrix::{axpy, dot, Matrix};
pub use rng::Rng;

use crate::error::{Error, Result};

/// Probability floor inside the log of [`cross_entropy`].
pub const PROB_FLOOR: f64 = 1e-12;

/// Logistic sigmoid, evaluated so that neither branch can overflow.
#[inline]
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| sigmoid(x)).collect()
}

pub fn tanh_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.tanh()).collect()
}

pub fn hadamard_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::arg("softmax of empty vector"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
    Ok(out)
}

/// `-ln(p[target] + 1e-12)`.
pub fn cross_entropy(probs: &[f64], target: usize) -> Result<f64> {
    let p = probs.get(target).ok_or_else(|| {
        Error::arg(format!(
            "target index {target} out of range for {} classes",
            probs.len()
        ))
    })?;
    Ok(-(p + PROB_FLOOR).ln())
}

/// Glorot-uniform initialisation in `±sqrt(6 / (rows + cols))`.
pub fn xavier_init(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = rng.uniform_vec(rows * cols, -bound, bound);
    Matrix::new(rows, cols, data).expect("length matches by construction")
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest};

    #[test]
    fn activation_fixed_points() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(0.0f64.tanh(), 0.0);
        // 1 / (1 + e^-0.5)
        assert!((sigmoid(0.5) - 0.622_459_331_201_854_6).abs() < 1e-15);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        let m = Matrix::from_rows(&[vec![0.0, 800.0, -800.0]]).unwrap();
        assert!(m.sigmoid().is_finite());
        assert!(m.tanh().is_finite());
    }

    #[test]
    fn softmax_cases() {
        let u = softmax(&[0.0; 5]).unwrap();
        assert!(u.iter().all(|&p| (p - 0.2).abs() < 1e-15));
        assert_eq!(softmax(&[3.7, 3.7]).unwrap(), vec![0.5, 0.5]);
        let p = softmax(&[0.0, 3.0f64.ln()]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn cross_entropy_cases() {
        assert!(cross_entropy(&[0.0, 1.0, 0.0], 1).unwrap() < 1e-11);
        let v = 7;
        let uniform = vec![1.0 / v as f64; v];
        assert!((cross_entropy(&uniform, 3).unwrap() - (v as f64).ln()).abs() < 1e-11);
        let ce = cross_entropy(&[0.25, 0.75], 1).unwrap();
        assert!((ce - (4.0f64 / 3.0).ln()).abs() < 1e-11);
        assert!(cross_entropy(&[0.5, 0.5], 2).is_err());
    }

    #[test]
    fn xavier_bounds_and_determinism() {
        let a = xavier_init(30, 50, &mut Rng::new(3));
        let b = xavier_init(30, 50, &mut Rng::new(3));
        assert_eq!(a, b);
        let bound = (6.0f64 / 80.0).sqrt();
        assert!(a.data().iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn xavier_mean_near_zero() {
        let m = xavier_init(1000, 1000, &mut Rng::new(11));
        let mean = m.data().iter().sum::<f64>() / m.data().len() as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn argmax_ties_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }

    proptest! {
        #[test]
        fn sigmoid_symmetry(v in -700.0f64..700.0) {
            prop_assert!((sigmoid(v) + sigmoid(-v) - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn softmax_sums_to_one(logits in prop::collection::vec(-700.0f64..700.0, 1..40)) {
            let p = softmax(&logits).unwrap();
            let total: f64 = p.iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn hadamard_commutes(a in prop::collection::vec(-10.0f64..10.0, 6), b in prop::collection::vec(-10.0f64..10.0, 6)) {
            let ma = Matrix::new(2, 3, a).unwrap();
            let mb = Matrix::new(2, 3, b).unwrap();
            prop_assert_eq!(ma.hadamard(&mb).unwrap(), mb.hadamard(&ma).unwrap());
        }
    }
}
