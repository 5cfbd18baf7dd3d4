use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Result, StabilityError};

/// Circle `|c - center| = radius` sampled at `n_points` equispaced angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contour {
    pub center: C64,
    pub radius: f64,
    pub n_points: usize,
}

impl Contour {
    pub fn new(center: C64, radius: f64, n_points: usize) -> Result<Self> {
        if !(radius > 0.0) || n_points < 64 || n_points % 2 != 0 {
            return Err(StabilityError::InvalidArgument(
                "contour needs radius > 0 and an even n_points >= 64".into(),
            ));
        }
        Ok(Contour { center, radius, n_points })
    }

    /// Circle centred in the rectangle with diameter equal to its height.
    pub fn from_rect(re: (f64, f64), im: (f64, f64), n_points: usize) -> Result<Self> {
        let center = C64::new(0.5 * (re.0 + re.1), 0.5 * (im.0 + im.1));
        Contour::new(center, 0.5 * (im.1 - im.0).abs(), n_points)
    }

    pub fn point(&self, theta: f64) -> C64 {
        self.center + C64::from_polar(self.radius, theta)
    }

    pub fn refined(&self) -> Contour {
        Contour { n_points: 2 * self.n_points, ..*self }
    }
}

fn phase_step(a: C64, b: C64) -> f64 {
    (b / a).arg()
}

/// Winding number of `f` around the origin along the contour.
///
/// Increments larger than `pi/2` trigger local bisection of the angle
/// interval. Refuses when `min|f| < 1e-12 max|f|` on the samples.
pub fn winding_number<F: FnMut(C64) -> C64>(mut f: F, contour: &Contour) -> Result<i32> {
    let n = contour.n_points;
    let thetas: Vec<f64> = (0..=n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
    let mut vals: Vec<C64> = thetas[..n].iter().map(|&t| f(contour.point(t))).collect();
    vals.push(vals[0]);
    let mut total = 0.0;
    let mut fmin = f64::INFINITY;
    let mut fmax = 0.0f64;
    for v in &vals {
        fmin = fmin.min(v.norm());
        fmax = fmax.max(v.norm());
    }
    for k in 0..n {
        let mut stack = vec![(thetas[k], vals[k], thetas[k + 1], vals[k + 1], 0usize)];
        while let Some((ta, fa, tb, fb, depth)) = stack.pop() {
            if !(fa.norm() > 0.0 && fb.norm() > 0.0) || !fa.re.is_finite() || !fb.re.is_finite() {
                return Err(StabilityError::ZeroOnContour { ratio: 0.0 });
            }
            let d = phase_step(fa, fb);
            if d.abs() < PI / 2.0 {
                total += d;
                continue;
            }
            if depth > 30 {
                return Err(StabilityError::ZeroOnContour { ratio: fmin / fmax });
            }
            let tm = 0.5 * (ta + tb);
            let fm = f(contour.point(tm));
            fmin = fmin.min(fm.norm());
            fmax = fmax.max(fm.norm());
            stack.push((tm, fm, tb, fb, depth + 1));
            stack.push((ta, fa, tm, fm, depth + 1));
        }
    }
    if fmin < 1e-12 * fmax {
        return Err(StabilityError::ZeroOnContour { ratio: fmin / fmax });
    }
    Ok((total / (2.0 * PI)).round() as i32)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NewtonResult {
    pub root: C64,
    pub residual: f64,
    pub iterations: usize,
}

/// Newton iteration with a central finite-difference derivative,
/// `h = 1e-6 max(1, |c|)`. Succeeds once `|f| < tol`.
pub fn newton_root<F: FnMut(C64) -> C64>(mut f: F, c_init: C64, tol: f64) -> Result<NewtonResult> {
    let mut c = c_init;
    let mut fc = f(c);
    for it in 0..=50 {
        if !(fc.re.is_finite() && fc.im.is_finite()) {
            return Err(StabilityError::NewtonFailure(format!("nonfinite value at c = {c}")));
        }
        if fc.norm() < tol {
            return Ok(NewtonResult { root: c, residual: fc.norm(), iterations: it });
        }
        if it == 50 {
            break;
        }
        let h = 1e-6 * c.norm().max(1.0);
        let d = (f(c + h) - f(c - h)) / (2.0 * h);
        if !(d.norm() > 1e-300) {
            return Err(StabilityError::NewtonFailure(format!("derivative underflow at c = {c}")));
        }
        let step = fc / d;
        c -= step;
        if c.norm() > 1e8 {
            return Err(StabilityError::NewtonFailure("iterate diverged".into()));
        }
        fc = f(c);
    }
    Err(StabilityError::NewtonFailure(format!(
        "no convergence in 50 iterations (|f| = {:e})",
        fc.norm()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_zero() {
        let c0 = C64::new(0.3, 0.2);
        let k = Contour::new(c0, 0.1, 64).unwrap();
        assert_eq!(winding_number(|c| (c - c0) * (c - c0), &k).unwrap(), 2);
    }

    #[test]
    fn two_simple_zeros() {
        let (a, b) = (C64::new(0.0, 0.0), C64::new(0.5, 0.0));
        let both = Contour::new(C64::new(0.25, 0.0), 1.0, 64).unwrap();
        let one = Contour::new(C64::new(0.0, 0.0), 0.2, 64).unwrap();
        assert_eq!(winding_number(|c| (c - a) * (c - b), &both).unwrap(), 2);
        assert_eq!(winding_number(|c| (c - a) * (c - b), &one).unwrap(), 1);
    }

    #[test]
    fn refuses_zero_on_contour() {
        let k = Contour::new(C64::new(0.0, 0.0), 1.0, 64).unwrap();
        assert!(winding_number(|c| c - 1.0, &k).is_err());
    }

    #[test]
    fn newton_finds_i() {
        let r = newton_root(|c| c * c + 1.0, C64::new(0.5, 0.8), 1e-12).unwrap();
        assert!((r.root - C64::i()).norm() < 1e-12);
    }

    #[test]
    fn newton_affine_one_step() {
        let c0 = C64::new(2.0, -1.0);
        let r = newton_root(|c| c - c0, C64::new(-5.0, 3.0), 1e-8).unwrap();
        assert_eq!(r.iterations, 1);
        assert!((r.root - c0).norm() < 1e-9);
    }

    #[test]
    fn rejects_bad_contours() {
        assert!(Contour::new(C64::new(0.0, 0.0), 1.0, 63).is_err());
        assert!(Contour::new(C64::new(0.0, 0.0), 0.0, 64).is_err());
    }
}
