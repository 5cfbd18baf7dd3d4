//! Truncated Taylor series in `y - y0` with complex coefficients.
//!
//! All jets taking part in one computation share a length; `deriv` keeps
//! the length and pads the top coefficient with zero.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet(pub Vec<C64>);

impl Jet {
    pub fn zero(n: usize) -> Self {
        Jet(vec![C64::new(0.0, 0.0); n])
    }

    pub fn constant(v: C64, n: usize) -> Self {
        let mut j = Jet::zero(n);
        j.0[0] = v;
        j
    }

    pub fn from_real(coefs: &[f64]) -> Self {
        Jet(coefs.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn value(&self) -> C64 {
        self.0[0]
    }

    /// `k`-th derivative at the expansion point.
    pub fn derivative_value(&self, k: usize) -> C64 {
        let f: f64 = (1..=k).map(|i| i as f64).product();
        self.0.get(k).copied().unwrap_or_default() * f
    }

    pub fn deriv(&self) -> Jet {
        let n = self.len();
        let mut out = Jet::zero(n);
        for k in 0..n - 1 {
            out.0[k] = self.0[k + 1] * (k + 1) as f64;
        }
        out
    }

    pub fn scale(&self, s: C64) -> Jet {
        Jet(self.0.iter().map(|&v| v * s).collect())
    }

    pub fn add_const(&self, s: C64) -> Jet {
        let mut out = self.clone();
        out.0[0] += s;
        out
    }

    pub fn recip(&self) -> Jet {
        let n = self.len();
        let mut out = Jet::zero(n);
        let inv0 = 1.0 / self.0[0];
        out.0[0] = inv0;
        for k in 1..n {
            let mut acc = C64::new(0.0, 0.0);
            for i in 1..=k {
                acc += self.0[i] * out.0[k - i];
            }
            out.0[k] = -acc * inv0;
        }
        out
    }

    pub fn div(&self, other: &Jet) -> Jet {
        self * &other.recip()
    }

    /// Square root on the principal branch of the constant term.
    pub fn sqrt(&self) -> Jet {
        self.sqrt_with(self.0[0].sqrt())
    }

    /// Square root whose constant term is the given root `r0` of `self.0[0]`.
    pub fn sqrt_with(&self, r0: C64) -> Jet {
        let n = self.len();
        let mut out = Jet::zero(n);
        out.0[0] = r0;
        for k in 1..n {
            let mut acc = self.0[k];
            for i in 1..k {
                acc -= out.0[i] * out.0[k - i];
            }
            out.0[k] = acc / (2.0 * r0);
        }
        out
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet(self.0.iter().map(|a| -a).collect())
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let n = self.len();
        let mut out = Jet::zero(n);
        for i in 0..n {
            if self.0[i] == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n - i {
                out.0[i + j] += self.0[i] * o.0[j];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_jet(a: f64, n: usize) -> Jet {
        let mut f = 1.0;
        Jet((0..n)
            .map(|k| {
                if k > 0 {
                    f *= k as f64;
                }
                C64::new(a.powi(k as i32) / f, 0.0)
            })
            .collect())
    }

    #[test]
    fn product_of_exponentials() {
        let p = &exp_jet(1.0, 8) * &exp_jet(2.0, 8);
        let e = exp_jet(3.0, 8);
        for k in 0..8 {
            assert!((p.0[k] - e.0[k]).norm() < 1e-13);
        }
    }

    #[test]
    fn recip_and_sqrt_invert() {
        let x = Jet(vec![C64::new(2.0, 1.0), C64::new(0.3, -0.2), C64::new(1.0, 0.0), C64::new(0.0, 0.5)]);
        let one = &x * &x.recip();
        assert!((one.0[0] - 1.0).norm() < 1e-15);
        assert!(one.0[1..].iter().all(|v| v.norm() < 1e-14));
        let r = x.sqrt();
        let back = &r * &r;
        for k in 0..4 {
            assert!((back.0[k] - x.0[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn derivative_values() {
        let e = exp_jet(2.0, 10);
        assert!((e.derivative_value(3) - 8.0).norm() < 1e-12);
        assert!((e.deriv().value() - 2.0).norm() < 1e-15);
    }
}
