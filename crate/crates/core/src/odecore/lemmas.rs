//! Two auxiliary estimates: the exponential convolution bound used by the
//! contraction argument, and the Rouché annulus count for perturbed zeros.

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::grid::{quadrature, Mesh};
use super::roots::{winding_number, Contour};
use crate::error::{Result, StabilityError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExpBoundCase {
    /// `eta2` in `(-alpha, alpha)`
    Interior,
    /// `eta2 = alpha`
    Resonant,
    /// `eta2 > alpha >= eta1`
    Fast,
}

/// Upper bound for `sup_y e^{eta1 y} int_0^inf e^{-alpha|x-y|} e^{-eta2 x} dx`.
pub fn lemma_exp_bound(alpha: f64, eta1: f64, eta2: f64) -> Result<(f64, ExpBoundCase)> {
    // eta1 = eta2 is admitted as the limiting case where the bound is sharp.
    if !(alpha > 0.0 && eta2 > -alpha && eta1 <= eta2 && eta1 <= alpha) || (eta2 == alpha && eta1 == alpha) {
        return Err(StabilityError::InvalidArgument(
            "need alpha > 0, eta2 > -alpha, eta1 <= eta2, eta1 < alpha".into(),
        ));
    }
    Ok(if eta2 < alpha {
        (2.0 * alpha / ((alpha - eta2) * (alpha + eta2)), ExpBoundCase::Interior)
    } else if eta2 == alpha {
        ((alpha + eta1) / (2.0 * alpha * (alpha - eta1)), ExpBoundCase::Resonant)
    } else {
        (1.0 / (eta2 - alpha), ExpBoundCase::Fast)
    })
}

/// `int_0^inf e^{-alpha|x-y|} e^{-eta2 x} dx` by quadrature with a node at `x = y`.
pub fn convolution_exp(alpha: f64, eta2: f64, y: f64) -> Result<f64> {
    let x_end = y + 60.0 / (alpha + eta2);
    let cells = ((x_end / 0.25).ceil() as usize).max(8);
    let mesh = Mesh::uniform(x_end, cells)?.with_node(y);
    let v = quadrature(|x| C64::new((-alpha * (x - y).abs() - eta2 * x).exp(), 0.0), &mesh)?;
    Ok(v.re)
}

/// Inner and outer radii of the annulus where a perturbation
/// `A w^kappa + g` of modulus `|g|` has its zeros, for slack `eps`.
pub fn annulus_radii(g_abs: f64, a_abs: f64, kappa: u32, eps: f64) -> (f64, f64) {
    let k = 1.0 / kappa as f64;
    (((1.0 - eps) * g_abs / a_abs).powf(k), ((1.0 + eps) * g_abs / a_abs).powf(k))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ImplicitCount {
    /// zeros inside the outer circle
    pub outer: i32,
    /// zeros inside the inner circle
    pub inner: i32,
    /// zeros in the annulus
    pub annulus: i32,
}

/// Counts zeros of `f` in the disc and annulus around `c0`. For functions
/// holomorphic in `conj(c)` (`antiholomorphic = true`) the winding number in
/// `c` is the negative of the zero count.
pub fn count_zeros_implicit<F: FnMut(C64) -> C64>(
    mut f: F,
    c0: C64,
    r_in: f64,
    r_out: f64,
    n_points: usize,
    antiholomorphic: bool,
) -> Result<ImplicitCount> {
    let sign = if antiholomorphic { -1 } else { 1 };
    let outer = sign * winding_number(&mut f, &Contour::new(c0, r_out, n_points)?)?;
    let inner = sign * winding_number(&mut f, &Contour::new(c0, r_in, n_points)?)?;
    Ok(ImplicitCount { outer, inner, annulus: outer - inner })
}
