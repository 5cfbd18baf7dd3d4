use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use super::fundamental::{decaying_trace, fundamental_solution_on};
use super::{default_grid, profile_samples, Kind, Method, Operator};
use crate::odecore::{newton_root, winding_number, Contour};
use crate::profiles::{ShearProfile, SpectralParams};
use crate::{Result, StabilityError};

/// Newton tolerance on the boundary traces (which are O(1) away from zeros).
pub const TRACE_TOL: f64 = 1e-11;
const KAPPA_RADII: [f64; 3] = [1e-3, 5e-4, 2.5e-4];
const KAPPA_POINTS: usize = 64;

/// `phi_c^-(0)` for the original operator, far-field normalized.
pub fn boundary_trace(p: &ShearProfile, alpha: f64, c: C64) -> Result<C64> {
    Ok(decaying_trace(p, &SpectralParams::inviscid(alpha, c), Operator::Original)?[0])
}

/// `phi_c^{*,-}(0)`; depends on `c` through `conj(c)`.
pub fn adjoint_trace(p: &ShearProfile, alpha: f64, c: C64) -> Result<C64> {
    Ok(decaying_trace(p, &SpectralParams::inviscid(alpha, c), Operator::Adjoint)?[0])
}

fn or_nan(r: Result<C64>) -> C64 {
    r.unwrap_or(C64::new(f64::NAN, f64::NAN))
}

/// Search circle covering `Re c in [0, 0.6]`, `Im c in [0.01, 0.6]`.
pub fn default_contour() -> Contour {
    Contour::from_rect((0.0, 0.6), (0.01, 0.6), 128).expect("valid default contour")
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Eigenvalue {
    pub c0: C64,
    pub operator: Operator,
    /// zeros of the boundary trace inside the search contour
    pub count: i32,
    pub residual: f64,
    pub iterations: usize,
}

/// Winding count, then Newton from the mean of the enclosed zeros
/// (first contour moment of `d log f`).
fn locate<F: Fn(C64) -> C64 + Sync>(f: F, contour: &Contour) -> Result<(i32, C64, crate::odecore::NewtonResult)> {
    let n = contour.n_points;
    let pts: Vec<C64> = (0..n).map(|k| contour.point(2.0 * PI * k as f64 / n as f64)).collect();
    let vals: Vec<C64> = pts.par_iter().map(|&c| f(c)).collect();
    let lookup = |c: C64| match pts.iter().position(|&q| q == c) {
        Some(k) => vals[k],
        None => f(c),
    };
    let count = winding_number(lookup, contour)?;
    if count <= 0 {
        return Err(StabilityError::NoZero);
    }
    let mut moment = C64::new(0.0, 0.0);
    for k in 0..n {
        let k1 = (k + 1) % n;
        let dlog = (vals[k1] / vals[k]).ln();
        moment += 0.5 * (pts[k] + pts[k1]) * dlog;
    }
    let seed = moment / (2.0 * PI * C64::i()) / count as f64;
    let r = newton_root(&f, seed, TRACE_TOL)?;
    Ok((count, seed, r))
}

/// Rayleigh eigenvalue inside `search`: zero of `c -> phi_c^-(0)`.
pub fn find_eigenvalue(p: &ShearProfile, alpha: f64, search: &Contour) -> Result<Eigenvalue> {
    let (count, _, r) = locate(|c| or_nan(boundary_trace(p, alpha, c)), search)?;
    if !(r.root.im > 0.0) {
        return Err(StabilityError::NewtonFailure(format!("root {} is not unstable", r.root)));
    }
    Ok(Eigenvalue { c0: r.root, operator: Operator::Original, count, residual: r.residual, iterations: r.iterations })
}

/// Same eigenvalue located through the adjoint trace, which is analytic in
/// `w = conj(c)`; the search runs over the conjugate contour.
pub fn find_adjoint_eigenvalue(p: &ShearProfile, alpha: f64, search: &Contour) -> Result<Eigenvalue> {
    let conj_contour = Contour { center: search.center.conj(), ..*search };
    let (count, _, r) = locate(|w| or_nan(adjoint_trace(p, alpha, w.conj())), &conj_contour)?;
    let c0 = r.root.conj();
    if !(c0.im > 0.0) {
        return Err(StabilityError::NewtonFailure(format!("root {c0} is not unstable")));
    }
    Ok(Eigenvalue { c0, operator: Operator::Adjoint, count, residual: r.residual, iterations: r.iterations })
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaEstimate {
    pub c0: C64,
    pub kappa: u32,
    /// `C_kappa` with `phi_c^{*,-}(0) ~ C_kappa (conj c - conj c0)^kappa`
    pub leading_coeff: C64,
    /// `|slope - kappa| / kappa`
    pub fit_quality: f64,
    /// slope of the circle-mean of `log|f|` against `log r`
    pub slope: f64,
    pub radii: Vec<f64>,
    pub coeff_per_radius: Vec<C64>,
    /// max relative deviation of `coeff_per_radius` from its mean
    pub coeff_spread: f64,
    /// first-order coefficient from one application of the S operator
    pub s_operator_coeff: Option<C64>,
}

fn circle<F: Fn(C64) -> C64 + Sync>(f: &F, c0: C64, r: f64) -> Vec<(C64, C64)> {
    (0..KAPPA_POINTS)
        .into_par_iter()
        .map(|k| {
            let c = c0 + C64::from_polar(r, 2.0 * PI * k as f64 / KAPPA_POINTS as f64);
            (c, f(c))
        })
        .collect()
}

/// Vanishing order and leading coefficient of a function analytic in `c`
/// at `c0`. The coefficient here is taken in powers of `c - c0`.
pub fn estimate_kappa_with<F: Fn(C64) -> C64 + Sync>(f: F, c0: C64) -> Result<KappaEstimate> {
    let contour = Contour::new(c0, KAPPA_RADII[0], KAPPA_POINTS)?;
    let kappa = winding_number(&f, &contour)?;
    if kappa < 1 {
        return Err(StabilityError::NoZero);
    }
    let mut logs = Vec::new();
    let mut coeffs = Vec::new();
    for &r in &KAPPA_RADII {
        let samples = circle(&f, c0, r);
        let mean_log = samples.iter().map(|(_, v)| v.norm().ln()).sum::<f64>() / samples.len() as f64;
        let coeff = samples.iter().map(|(c, v)| v / (c - c0).powi(kappa)).sum::<C64>() / samples.len() as f64;
        logs.push((r.ln(), mean_log));
        coeffs.push(coeff);
    }
    let slope = ls_slope(&logs);
    finish(c0, kappa as u32, slope, coeffs)
}

fn finish(c0: C64, kappa: u32, slope: f64, coeffs: Vec<C64>) -> Result<KappaEstimate> {
    let fit_quality = (slope - kappa as f64).abs() / kappa as f64;
    if fit_quality > 0.25 {
        return Err(StabilityError::Mismatch(format!("winding gives kappa = {kappa}, slope fit gives {slope:.4}")));
    }
    let mean = coeffs.iter().sum::<C64>() / coeffs.len() as f64;
    let coeff_spread = coeffs.iter().map(|c| (c - mean).norm()).fold(0.0, f64::max) / mean.norm();
    Ok(KappaEstimate {
        c0,
        kappa,
        leading_coeff: *coeffs.last().unwrap(),
        fit_quality,
        slope,
        radii: KAPPA_RADII.to_vec(),
        coeff_per_radius: coeffs,
        coeff_spread,
        s_operator_coeff: None,
    })
}

pub(crate) fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    ls_fit(pts).0
}

/// Least-squares line `(slope, intercept)`.
pub fn ls_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// kappa from the winding of `phi_c^-(0)` on a small circle, slope from
/// circle means of `log|phi_c^-(0)|` at three radii, and `C_kappa` from the
/// adjoint trace in powers of `conj(c) - conj(c0)`.
pub fn estimate_kappa(p: &ShearProfile, alpha: f64, c0: C64) -> Result<KappaEstimate> {
    let base = estimate_kappa_with(|c| or_nan(boundary_trace(p, alpha, c)), c0)?;
    let k = base.kappa as i32;
    let coeffs: Vec<C64> = KAPPA_RADII
        .iter()
        .map(|&r| {
            let s = circle(&|c| or_nan(adjoint_trace(p, alpha, c)), c0, r);
            s.iter().map(|(c, v)| v / (c - c0).conj().powi(k)).sum::<C64>() / s.len() as f64
        })
        .collect();
    let mut est = finish(c0, base.kappa, base.slope, coeffs)?;
    if est.kappa == 1 {
        est.s_operator_coeff = Some(s_operator_coefficient(p, alpha, c0)?);
    }
    Ok(est)
}

/// `lim (S_{c;c0} phi*^-_{c0})(0) / (conj c - conj c0)
///   = 2 phi*^+(0) int phi*^- U' phi*^-' / ((U - conj c0)^2 J*) dx`.
pub fn s_operator_coefficient(p: &ShearProfile, alpha: f64, c0: C64) -> Result<C64> {
    let s = SpectralParams::inviscid(alpha, c0);
    let grid = default_grid(p, alpha);
    let m = fundamental_solution_on(p, &s, Kind::Decaying, Operator::Adjoint, Method::Integration, grid.clone())?;
    let g = fundamental_solution_on(p, &s, Kind::Growing, Operator::Adjoint, Method::Integration, grid.clone())?;
    let u = profile_samples(p, &grid, 2);
    let cb = c0.conj();
    let integrand: Vec<C64> = (0..grid.len())
        .map(|j| {
            let jstar = m.values[0][j] * g.values[1][j] - m.values[1][j] * g.values[0][j];
            m.values[0][j] * u[1][j] * m.values[1][j] / ((u[0][j] - cb).powi(2) * jstar)
        })
        .collect();
    Ok(2.0 * g.values[0][0] * grid.integrate(&integrand))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_double_zero() {
        let c0 = C64::new(0.3, 0.1);
        let e = estimate_kappa_with(|c| (c - c0).powi(2) * (1.0 + c), c0).unwrap();
        assert_eq!(e.kappa, 2);
        assert!((e.slope - 2.0).abs() < 1e-6);
        assert!((e.leading_coeff - (1.0 + c0)).norm() < 1e-8);
    }

    #[test]
    fn slope_of_line() {
        assert!((ls_slope(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]) - 2.0).abs() < 1e-14);
    }
}
