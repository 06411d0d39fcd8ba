//! Double-double arithmetic (~106-bit significand).
//!
//! Used by the finite-difference oracles: evaluating perturbed losses in
//! extended precision removes the f64 roundoff floor (about 1e-11 absolute
//! at a 1e-5 step) that would otherwise swamp small gradient components.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Self { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    fn scale_pow2(self, k: i32) -> Dd {
        let s = 2f64.powi(k);
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn exp(self) -> Dd {
        if self.hi > 709.0 {
            return Dd {
                hi: f64::INFINITY,
                lo: 0.0,
            };
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * Dd::from(k)).scale_pow2(-10);
        // Taylor series; |r| < 4e-4 so 12 terms are far past 2^-106.
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for n in 1..=12 {
            term = term * r / Dd::from(n as f64);
            sum = sum + term;
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        sum.scale_pow2(k as i32)
    }

    pub fn ln(self) -> Dd {
        let mut y = Dd::from(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Dd::ONE;
        }
        y
    }

    pub fn tanh(self) -> Dd {
        let e = (-(self.abs()) * Dd::from(2.0)).exp();
        let t = (Dd::ONE - e) / (Dd::ONE + e);
        if self.hi < 0.0 {
            -t
        } else {
            t
        }
    }

    pub fn sigmoid(self) -> Dd {
        if self.hi >= 0.0 {
            Dd::ONE / (Dd::ONE + (-self).exp())
        } else {
            let e = self.exp();
            e / (Dd::ONE + e)
        }
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::from(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::from(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from(q3)
    }
}

impl std::iter::Sum for Dd {
    fn sum<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::ZERO, |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Dd, hi: f64, lo: f64, tol: f64) {
        let diff = (a - Dd::new(hi, lo)).to_f64().abs();
        assert!(diff <= tol * hi.abs().max(1e-300), "{a:?} vs {hi} + {lo}: {diff:e}");
    }

    // Reference values (hi, lo) from a 50-digit evaluation at the same f64 inputs.
    #[test]
    fn transcendental_accuracy() {
        close(Dd::from(0.5).exp(), 1.648_721_270_700_128_2, -4.731_568_479_435_833e-17, 1e-28);
        close(Dd::from(-3.2).exp(), 0.040_762_203_978_366_21, -3.362_474_322_397_608e-18, 1e-28);
        close(Dd::from(0.5).tanh(), 0.462_117_157_260_009_74, 2.191_660_323_826_092_8e-17, 1e-28);
        close(Dd::from(10.0).ln(), std::f64::consts::LN_10, -2.170_756_223_382_249_4e-16, 1e-28);
    }

    #[test]
    fn arithmetic_identities() {
        let third = Dd::ONE / Dd::from(3.0);
        let back = third * Dd::from(3.0);
        assert!((back - Dd::ONE).to_f64().abs() < 1e-31);
        let s = Dd::from(1.0) + Dd::from(1e-20);
        assert_eq!(s.hi(), 1.0);
        assert_eq!(s.lo(), 1e-20);
        assert!((Dd::from(0.3).sigmoid() + Dd::from(-0.3).sigmoid() - Dd::ONE).to_f64().abs() < 1e-31);
    }
}
