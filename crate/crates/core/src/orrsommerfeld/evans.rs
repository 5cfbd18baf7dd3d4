use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use super::exact::{exact_decaying, exact_wall_traces};
use super::slow::slow_mode_expansion;
use super::mu_at;
use crate::odecore::{annulus_radii, winding_number, Contour, Grid, ImplicitCount};
use crate::profiles::{ShearProfile, SpectralParams};
use crate::rayleigh::ls_fit;
use crate::rayleigh::{boundary_trace, default_grid, estimate_kappa, estimate_kappa_with, Kind, Operator};
use crate::{Result, StabilityError};

/// Smallest admissible fast Navier-row entry.
const FAST_ROW_MIN: f64 = 1e-14;
/// Slack of the annulus used to confirm the zero count.
const ANNULUS_EPS: f64 = 0.5;
const ANNULUS_POINTS: usize = 64;
const NEWTON_MAX: usize = 40;

/// `phi'(0) - nu^gamma phi''(0)`.
pub fn navier_row(v: &[C64; 4], nu: f64, gamma: f64) -> C64 {
    v[1] - nu.powf(gamma) * v[2]
}

/// The boundary matrix `[[s(0), f(0)], [N s, N f]]` of the decaying slow and
/// fast solutions and its determinant.
#[derive(Debug, Clone, Serialize)]
pub struct EvansSample {
    pub params: SpectralParams,
    pub operator: Operator,
    pub value: C64,
    /// `value / N f`, continuous as `nu -> 0`
    pub regularized: C64,
    pub matrix_entries: [[C64; 2]; 2],
    pub slow_wall: [C64; 4],
    pub fast_wall: [C64; 4],
}

impl EvansSample {
    pub fn from_traces(params: SpectralParams, operator: Operator, slow: [C64; 4], fast: [C64; 4]) -> Result<Self> {
        let (nu, g) = (params.nu, params.gamma);
        let m = [[slow[0], fast[0]], [navier_row(&slow, nu, g), navier_row(&fast, nu, g)]];
        if !(m[1][1].norm() >= FAST_ROW_MIN) {
            return Err(StabilityError::InvalidArgument(format!(
                "fast Navier-row entry {:e} too small to regularize",
                m[1][1].norm()
            )));
        }
        let value = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        Ok(EvansSample { params, operator, value, regularized: value / m[1][1], matrix_entries: m, slow_wall: slow, fast_wall: fast })
    }

    /// Scale of the entries entering `regularized`.
    pub fn row_scale(&self) -> f64 {
        let m = &self.matrix_entries;
        m[0][0].norm() + (m[1][0] / m[1][1]).norm() * m[0][1].norm()
    }
}

pub fn evans(p: &ShearProfile, s: &SpectralParams, which: Operator) -> Result<EvansSample> {
    let (slow, fast) = exact_wall_traces(p, s, which)?;
    EvansSample::from_traces(*s, which, slow, fast)
}

/// Evans samples on a rectangular grid of `c`, evaluated in parallel.
pub fn evans_scan(
    p: &ShearProfile,
    s: &SpectralParams,
    re: (f64, f64),
    im: (f64, f64),
    n: (usize, usize),
    which: Operator,
) -> Vec<(C64, Result<EvansSample>)> {
    let pts: Vec<C64> = (0..n.1)
        .flat_map(|j| {
            (0..n.0).map(move |i| {
                let fr = if n.0 > 1 { i as f64 / (n.0 - 1) as f64 } else { 0.0 };
                let fi = if n.1 > 1 { j as f64 / (n.1 - 1) as f64 } else { 0.0 };
                C64::new(re.0 + fr * (re.1 - re.0), im.0 + fi * (im.1 - im.0))
            })
        })
        .collect();
    pts.par_iter().map(|&c| (c, evans(p, &s.with_c(c), which))).collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ViscousEigenvalue {
    pub c: C64,
    pub operator: Operator,
    pub regularized_abs: f64,
    pub row_scale: f64,
    pub iterations: usize,
}

/// The regularized Evans function as a function of the variable in which
/// it is analytic: `c` (original) or `w = conj c` (adjoint).
fn analytic_evans<'a>(p: &'a ShearProfile, s: &'a SpectralParams, which: Operator) -> impl Fn(C64) -> Result<C64> + Sync + 'a {
    move |z: C64| {
        let c = if which == Operator::Adjoint { z.conj() } else { z };
        Ok(evans(p, &s.with_c(c), which)?.regularized)
    }
}

/// Newton on the regularized Evans function from `s.c`, stopping once the
/// step falls below `1e-12 |c|`.
pub fn find_viscous_eigenvalue(p: &ShearProfile, s: &SpectralParams, which: Operator) -> Result<ViscousEigenvalue> {
    let f = analytic_evans(p, s, which);
    let to_z = |c: C64| if which == Operator::Adjoint { c.conj() } else { c };
    let mut z = to_z(s.c);
    let mut fz = f(z)?;
    for it in 1..=NEWTON_MAX {
        let h = 1e-7 * z.norm().max(1.0);
        let d = (f(z + h)? - f(z - h)?) / (2.0 * h);
        if !(d.norm() > 0.0) {
            return Err(StabilityError::NewtonFailure(format!("zero derivative at {}", to_z(z))));
        }
        let step = fz / d;
        z -= step;
        if !(z.im.abs() > 0.0) || z.norm() > 1e3 {
            return Err(StabilityError::NewtonFailure(format!("iterate left the domain: {}", to_z(z))));
        }
        fz = f(z)?;
        if step.norm() < 1e-12 * z.norm().max(1.0) {
            let c = to_z(z);
            let e = evans(p, &s.with_c(c), which)?;
            return Ok(ViscousEigenvalue { c, operator: which, regularized_abs: e.regularized.norm(), row_scale: e.row_scale(), iterations: it });
        }
    }
    Err(StabilityError::NewtonFailure(format!("no convergence from {}", s.c)))
}

/// `O_gamma(nu)`: the Navier-row quotient at `c0`, with the slow solution
/// fixed by matching the third wall derivative of the order-1 slow expansion.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OGamma {
    pub nu: f64,
    pub gamma: f64,
    pub value: C64,
    pub slow_row: C64,
    pub fast_row: C64,
    /// `-mu(0) (1 + nu^gamma mu(0))`
    pub fast_row_asymptotic: C64,
    /// multiple of the fast solution added to the exact slow solution
    pub admixture: C64,
}

pub fn o_gamma(p: &ShearProfile, s_at_c0: &SpectralParams, which: Operator) -> Result<OGamma> {
    let s = s_at_c0;
    let (slow, fast) = exact_wall_traces(p, s, which)?;
    let grid = default_grid(p, s.alpha);
    let expansion = slow_mode_expansion(p, s, 1, Kind::Decaying, which, grid)?;
    let target = expansion.wall();
    let beta = (target[3] - slow[3]) / fast[3];
    let tilde: [C64; 4] = std::array::from_fn(|k| slow[k] + beta * fast[k]);
    let slow_row = navier_row(&tilde, s.nu, s.gamma);
    let fast_row = navier_row(&fast, s.nu, s.gamma);
    if !(fast_row.norm() >= FAST_ROW_MIN) {
        return Err(StabilityError::InvalidArgument("fast Navier row vanishes".into()));
    }
    let mu0 = mu_at(p.u(0.0), s, which)?;
    Ok(OGamma {
        nu: s.nu,
        gamma: s.gamma,
        value: slow_row / fast_row,
        slow_row,
        fast_row,
        fast_row_asymptotic: -mu0 * (1.0 + s.nu.powf(s.gamma) * mu0),
        admixture: beta,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackSample {
    pub nu: f64,
    pub c: C64,
    pub gap: f64,
    pub evans_abs: f64,
    pub o_gamma: C64,
    /// predicted `|O / A|^{1/kappa}`
    pub predicted_gap: f64,
    /// zero counts on the annulus `[(1 - eps) r, (1 + eps) r]`, `r = |O / A|^{1/kappa}`
    pub count: Option<ImplicitCount>,
    /// why the count could not be made (e.g. the circle leaves the
    /// half plane where the fast exponent exists)
    pub count_error: Option<String>,
    pub kappa_check: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenvalueTrack {
    pub c0: C64,
    pub kappa: u32,
    pub operator: Operator,
    pub gamma: f64,
    /// leading coefficient of the inviscid trace used for the seeds
    pub trace_coeff: C64,
    pub samples: Vec<TrackSample>,
    /// slope of `log |c_nu - c0|` against `log nu`
    pub fitted_rate: f64,
    pub fitted_prefactor: f64,
    /// set when Newton failed and the track was cut short
    pub truncated: Option<String>,
}

/// Winding number with the contour samples evaluated in parallel.
fn parallel_count<F: Fn(C64) -> Result<C64> + Sync>(f: &F, c0: C64, r: f64, sign: i32) -> Result<i32> {
    let contour = Contour::new(c0, r, ANNULUS_POINTS)?;
    let pts: Vec<C64> = (0..ANNULUS_POINTS).map(|k| contour.point(2.0 * PI * k as f64 / ANNULUS_POINTS as f64)).collect();
    let vals: Vec<C64> = pts.par_iter().map(|&c| f(c)).collect::<Result<_>>()?;
    let lookup = |c: C64| match pts.iter().position(|&q| q == c) {
        Some(k) => vals[k],
        None => f(c).unwrap_or(C64::new(f64::NAN, f64::NAN)),
    };
    Ok(sign * winding_number(lookup, &contour)?)
}

/// Eigenvalue path `nu -> c_nu` issuing from the Rayleigh eigenvalue `c0`.
pub fn track_eigenvalues(
    p: &ShearProfile,
    alpha: f64,
    c0: C64,
    nu_grid: &[f64],
    gamma: f64,
    which: Operator,
) -> Result<EigenvalueTrack> {
    if nu_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(StabilityError::InvalidArgument("nu grid must be strictly decreasing".into()));
    }
    let est = estimate_kappa(p, alpha, c0)?;
    let kappa = est.kappa;
    let coeff = match which {
        Operator::Adjoint => est.leading_coeff,
        Operator::Original => estimate_kappa_with(|c| boundary_trace(p, alpha, c).unwrap_or(C64::new(f64::NAN, f64::NAN)), c0)?.leading_coeff,
    };
    let displacement = |o: C64| {
        let d = (o / coeff).powf(1.0 / kappa as f64);
        if which == Operator::Adjoint { d.conj() } else { d }
    };
    let mut samples: Vec<TrackSample> = Vec::new();
    let mut truncated = None;
    let mut prev: Option<(C64, C64)> = None;
    for &nu in nu_grid {
        let s0 = SpectralParams::viscous(alpha, c0, nu, gamma);
        let og = match o_gamma(p, &s0, which) {
            Ok(v) => v,
            Err(e) => {
                truncated = Some(format!("nu = {nu:e}: {e}"));
                break;
            }
        };
        let d = displacement(og.value);
        let seed = match prev {
            None => c0 + d,
            Some((c_prev, d_prev)) => c_prev + d - d_prev,
        };
        let root = match find_viscous_eigenvalue(p, &s0.with_c(seed), which) {
            Ok(r) => r,
            Err(e) => {
                truncated = Some(format!("nu = {nu:e}: {e}"));
                break;
            }
        };
        let f = analytic_evans(p, &s0, which);
        let (r_in, r_out) = annulus_radii(og.value.norm(), coeff.norm(), kappa, ANNULUS_EPS);
        let sign = if which == Operator::Adjoint { -1 } else { 1 };
        let g = |c: C64| f(if which == Operator::Adjoint { c.conj() } else { c });
        let counted = parallel_count(&g, c0, r_out, sign)
            .and_then(|outer| Ok(ImplicitCount { outer, inner: parallel_count(&g, c0, r_in, sign)?, annulus: 0 }));
        let (count, count_error) = match counted {
            Ok(mut c) => {
                c.annulus = c.outer - c.inner;
                (Some(c), None)
            }
            Err(e) => (None, Some(e.to_string())),
        };
        samples.push(TrackSample {
            nu,
            c: root.c,
            gap: (root.c - c0).norm(),
            evans_abs: root.regularized_abs,
            o_gamma: og.value,
            predicted_gap: d.norm(),
            count,
            count_error,
            kappa_check: count.is_some_and(|c| c.annulus == kappa as i32 && c.inner == 0),
        });
        prev = Some((root.c, d));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.nu.ln(), s.gap.ln())).collect();
    let (fitted_rate, intercept) = if pts.len() >= 2 { ls_fit(&pts) } else { (f64::NAN, f64::NAN) };
    Ok(EigenvalueTrack {
        c0,
        kappa,
        operator: which,
        gamma,
        trace_coeff: coeff,
        samples,
        fitted_rate,
        fitted_prefactor: intercept.exp(),
        truncated,
    })
}

/// Adjoint and original eigenmodes at `c` (an eigenvalue at `nu`), both
/// with far-field slow amplitude 1 and vanishing at the wall, and the sup
/// distance between the adjoint mode and
/// `(U_inf - conj c) conj(phi) / (U - conj c)`.
#[derive(Debug, Clone, Serialize)]
pub struct EigenmodeComparison {
    pub c: C64,
    pub nu: f64,
    pub sup_distance: f64,
    pub sup_adjoint: f64,
}

/// Adjoint and original eigenmodes at `c`, each the decaying combination
/// vanishing at the wall.
fn eigenmodes(p: &ShearProfile, s_at_c: &SpectralParams, grid: &Arc<Grid>) -> Result<(Vec<C64>, Vec<C64>)> {
    let adj = exact_decaying(p, s_at_c, Operator::Adjoint, grid.clone())?;
    let orig = exact_decaying(p, s_at_c, Operator::Original, grid.clone())?;
    let mode = |e: &super::ExactDecaying| -> Vec<C64> {
        let beta = -e.slow[0][0] / e.fast[0][0];
        e.slow[0].iter().zip(&e.fast[0]).map(|(a, b)| a + beta * b).collect()
    };
    Ok((mode(&adj), mode(&orig)))
}

pub fn eigenmode_comparison(p: &ShearProfile, s_at_c: &SpectralParams, grid: Arc<Grid>) -> Result<EigenmodeComparison> {
    let (ma, mo) = eigenmodes(p, s_at_c, &grid)?;
    let cb = s_at_c.c.conj();
    let amp = p.u_inf - cb;
    let diff: Vec<C64> = (0..grid.len()).map(|i| ma[i] - amp * mo[i].conj() / (p.u(grid.y[i]) - cb)).collect();
    Ok(EigenmodeComparison { c: s_at_c.c, nu: s_at_c.nu, sup_distance: Grid::sup_norm(&diff), sup_adjoint: Grid::sup_norm(&ma) })
}

/// `int phi phi*` for the eigenmodes at `c_nu`, with the adjoint mode
/// rescaled to `conj(phi) / (U - conj c)` in the far field, and the lower
/// bound `Im c int |phi|^2 / |U - c|^2 - int |phi| |phi* - conj(phi)/(U - conj c)|`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EigenmodePairing {
    pub c: C64,
    pub nu: f64,
    pub pairing: C64,
    /// `Im c int |phi|^2 / |U - c|^2`
    pub weighted_norm: f64,
    pub sup_distance: f64,
    /// `int |phi| |phi* - conj(phi)/(U - conj c)|`
    pub defect: f64,
    pub lower_bound: f64,
}

pub fn eigenmode_pairing(p: &ShearProfile, s_at_c: &SpectralParams, grid: Arc<Grid>) -> Result<EigenmodePairing> {
    let (ma, mo) = eigenmodes(p, s_at_c, &grid)?;
    let c = s_at_c.c;
    let scale = 1.0 / (p.u_inf - c.conj());
    let adj: Vec<C64> = ma.iter().map(|v| v * scale).collect();
    let n = grid.len();
    let pairing = grid.integrate(&(0..n).map(|i| mo[i] * adj[i]).collect::<Vec<_>>());
    let weighted: Vec<f64> = (0..n).map(|i| mo[i].norm_sqr() / (p.u(grid.y[i]) - c).norm_sqr()).collect();
    let weighted_norm = c.im * grid.integrate_real(&weighted);
    let diff: Vec<C64> = (0..n).map(|i| adj[i] - mo[i].conj() / (p.u(grid.y[i]) - c.conj())).collect();
    let sup_distance = Grid::sup_norm(&diff);
    let defect = grid.integrate_real(&mo.iter().zip(&diff).map(|(a, b)| a.norm() * b.norm()).collect::<Vec<_>>());
    Ok(EigenmodePairing { c, nu: s_at_c.nu, pairing, weighted_norm, sup_distance, defect, lower_bound: weighted_norm - defect })
}

/// `int psi conj(phi)` against the original eigenmode at `c_nu`; vanishes
/// when `psi` lies in the image of `Orr*` on functions satisfying the
/// Dirichlet and Navier conditions.
pub fn viscous_image_test(p: &ShearProfile, s_at_c: &SpectralParams, psi: &[C64], grid: Arc<Grid>) -> Result<crate::rayleigh::ImageTest> {
    if psi.len() != grid.len() {
        return Err(StabilityError::Mismatch(format!("psi has {} samples, grid has {}", psi.len(), grid.len())));
    }
    let (_, mo) = eigenmodes(p, s_at_c, &grid)?;
    let integral = grid.integrate(&psi.iter().zip(&mo).map(|(a, b)| a * b.conj()).collect::<Vec<_>>());
    let norm_psi = grid.l2_norm(psi);
    let norm_kernel = grid.l2_norm(&mo);
    Ok(crate::rayleigh::ImageTest { integral, norm_psi, norm_kernel, ratio: integral.norm() / (norm_psi * norm_kernel) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_scales_with_basis() {
        let s = SpectralParams::viscous(1.0, C64::new(0.2, 0.1), 1e-4, 10.0);
        let sl = [C64::new(1.0, 0.5), C64::new(-1.0, 0.2), C64::new(0.3, 0.0), C64::new(0.1, 0.1)];
        let f = [C64::new(1.0, 0.0), C64::new(-50.0, 10.0), C64::new(2400.0, 0.0), C64::new(-1e5, 3.0)];
        let a = EvansSample::from_traces(s, Operator::Adjoint, sl, f).unwrap();
        let lam = C64::new(2.0, -3.0);
        let b = EvansSample::from_traces(s, Operator::Adjoint, sl.map(|v| v * lam), f).unwrap();
        assert!((b.value - lam * a.value).norm() < 1e-12 * a.value.norm());
        let e = a.matrix_entries;
        assert_eq!(a.value, e[0][0] * e[1][1] - e[0][1] * e[1][0]);
    }
}
