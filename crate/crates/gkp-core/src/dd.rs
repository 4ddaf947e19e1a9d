//! Double-double arithmetic for kernel evaluation.
//!
//! The moment-kernel polynomials cancel heavily at large grid displacements
//! (individual terms reach ~1e13 while the value is orders smaller), so they
//! are evaluated with roughly 31 significant digits and rounded once at the
//! end. Only the operations the kernels need are implemented.

use std::ops::{Add, Mul, Neg, Sub};

use crate::algebra::C64;

/// Unevaluated sum of two doubles with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    /// Zero.
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    /// Lifts a double.
    #[inline]
    pub fn from_f64(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    /// Rounds to the nearest double.
    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let e = e + self.lo + rhs.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + self.hi * rhs.lo + self.lo * rhs.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

/// Complex number with double-double components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cdd {
    /// Real part.
    pub re: Dd,
    /// Imaginary part.
    pub im: Dd,
}

impl Cdd {
    /// Lifts a complex double.
    #[inline]
    pub fn from_c64(v: C64) -> Self {
        Cdd {
            re: Dd::from_f64(v.re),
            im: Dd::from_f64(v.im),
        }
    }

    /// Lifts a real double.
    #[inline]
    pub fn from_f64(v: f64) -> Self {
        Cdd {
            re: Dd::from_f64(v),
            im: Dd::ZERO,
        }
    }

    /// Rounds to a complex double.
    #[inline]
    pub fn to_c64(self) -> C64 {
        C64::new(self.re.to_f64(), self.im.to_f64())
    }

    /// Integer power by repeated multiplication.
    #[inline]
    pub fn powu(self, n: u32) -> Cdd {
        let mut acc = Cdd::from_f64(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
}

impl Add for Cdd {
    type Output = Cdd;
    #[inline]
    fn add(self, rhs: Cdd) -> Cdd {
        Cdd {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    #[inline]
    fn sub(self, rhs: Cdd) -> Cdd {
        Cdd {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    #[inline]
    fn neg(self) -> Cdd {
        Cdd {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    #[inline]
    fn mul(self, rhs: Cdd) -> Cdd {
        Cdd {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl Mul<Cdd> for f64 {
    type Output = Cdd;
    #[inline]
    fn mul(self, rhs: Cdd) -> Cdd {
        Cdd::from_f64(self) * rhs
    }
}

impl Add<f64> for Cdd {
    type Output = Cdd;
    #[inline]
    fn add(self, rhs: f64) -> Cdd {
        self + Cdd::from_f64(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_recovers_cancelled_bits() {
        // (1e16 + 1) - 1e16 loses the 1 in f64 but not in dd
        let a = Dd::from_f64(1e16) + Dd::from_f64(1.0);
        let b = a - Dd::from_f64(1e16);
        assert_eq!(b.to_f64(), 1.0);
    }

    #[test]
    fn dd_product_error_term() {
        let a = Dd::from_f64(1.0 + 2f64.powi(-30));
        let sq = a * a;
        let want = (1.0 + 2f64.powi(-30)) * (1.0 + 2f64.powi(-30));
        assert!((sq.to_f64() - want).abs() < 1e-30);
    }

    #[test]
    fn cdd_matches_c64_for_small_values() {
        let x = C64::new(1.25, -0.75);
        let y = C64::new(-0.5, 2.0);
        let got = (Cdd::from_c64(x) * Cdd::from_c64(y)).to_c64();
        assert!((got - x * y).norm() < 1e-16);
        let p = Cdd::from_c64(x).powu(5).to_c64();
        assert!((p - x.powi(5)).norm() < 1e-12 * p.norm());
    }
}
