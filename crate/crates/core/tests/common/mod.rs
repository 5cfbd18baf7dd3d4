//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use shearstab::profiles::ShearProfile;

/// Chebyshev differentiation matrix on the Gauss-Lobatto points
/// `xi_j = cos(pi j / n)`, `j = 0..=n`.
pub fn cheb(n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let x: Vec<f64> = (0..=n).map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos()).collect();
    let c = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 } * if j % 2 == 0 { 1.0 } else { -1.0 };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (x, d)
}

/// Collocation pencil `(A, B)` of the Rayleigh problem on
/// `y = l (1 + xi) / (1 - xi)` with `phi = 0` at the wall and at infinity:
/// `A = U (D2 - a^2) - U''`, `B = D2 - a^2` on the interior points.
pub fn rayleigh_pencil(p: &ShearProfile, alpha: f64, n: usize, l: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (xi, d) = cheb(n);
    let m = n - 1;
    let y: Vec<f64> = xi.iter().map(|&x| l * (1.0 + x) / (1.0 - x)).collect();
    let mut dy = d.clone();
    for i in 0..=n {
        let f = (1.0 - xi[i]).powi(2) / (2.0 * l);
        for j in 0..=n {
            dy[(i, j)] *= f;
        }
    }
    let d2 = &dy * &dy;
    let a2 = alpha * alpha;
    let mut lap = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            lap[(i, j)] = d2[(i + 1, j + 1)];
        }
        lap[(i, i)] -= a2;
    }
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        let yi = y[i + 1];
        let (u, u2) = (p.u(yi), p.u2(yi));
        for j in 0..m {
            a[(i, j)] = u * lap[(i, j)];
        }
        a[(i, i)] -= u2;
    }
    (a, lap)
}

/// Eigenvalue of the collocation pencil nearest `shift`, by shifted inverse
/// iteration followed by Rayleigh-quotient updates.
pub fn rayleigh_collocation(p: &ShearProfile, alpha: f64, n: usize, l: f64, shift: C64) -> C64 {
    let (a, b) = rayleigh_pencil(p, alpha, n, l);
    let m = a.nrows();
    let ac = a.map(|v| C64::new(v, 0.0));
    let bc = b.map(|v| C64::new(v, 0.0));
    let mut x = DVector::from_element(m, C64::new(1.0, 0.0));
    let mut sigma = shift;
    let mut last = shift;
    for it in 0..60 {
        let lu = (&ac - &bc * sigma).lu();
        let mut z = match lu.solve(&(&bc * &x)) {
            Some(z) => z,
            None => return sigma,
        };
        let nz = z.norm();
        z /= C64::new(nz, 0.0);
        let bz = &bc * &z;
        let next = bz.dotc(&(&ac * &z)) / bz.dotc(&bz);
        x = z;
        if (next - last).norm() < 1e-14 * next.norm() {
            return next;
        }
        last = next;
        // fixed shift until the quotient settles, so the iteration stays on
        // the eigenvalue nearest the seed rather than a spurious one
        if it >= 40 || (it > 0 && (next - sigma).norm() < 0.2 * (shift - next).norm().max(1e-8) && (next - shift).norm() < 0.05) {
            sigma = next;
        }
    }
    last
}
