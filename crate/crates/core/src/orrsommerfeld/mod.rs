//! Viscous layer: the fast exponent, WKB fast modes, slow expansions in
//! powers of the viscosity, exact decaying solutions, the Evans function
//! with the Navier boundary row, and eigenvalue tracking in `nu`.

mod evans;
mod exact;
mod slow;
mod wkb;

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::odecore::{Grid, Mesh};
use crate::profiles::{ShearProfile, SpectralParams};
use crate::rayleigh::{profile_samples, MeshFunction, Operator};
use crate::{Result, StabilityError};

pub use evans::{
    eigenmode_comparison, eigenmode_pairing, evans, evans_scan, find_viscous_eigenvalue, navier_row, o_gamma, track_eigenvalues, viscous_image_test,
    EigenmodeComparison, EigenmodePairing, EigenvalueTrack, EvansSample, OGamma, TrackSample, ViscousEigenvalue,
};
pub(crate) use exact::fourth;
pub use exact::{exact_decaying, exact_wall_traces, ExactDecaying, EXACT_TOL};
pub use slow::{slow_mode_expansion, SlowExpansion};
pub use wkb::{wkb_fast_mode, WkbExpansion};

/// `mu*` (adjoint) or `mu` (original) on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct FastExponent {
    pub params: SpectralParams,
    pub operator: Operator,
    #[serde(skip)]
    pub grid: Arc<Grid>,
    pub mu_values: Vec<C64>,
    /// always the principal square root
    pub branch: &'static str,
}

/// `mu*^2 = |alpha| (alpha nu - i (U - conj c)) / nu`; the original exponent
/// uses the conjugate radicand.
pub fn mu_at(u: f64, s: &SpectralParams, op: Operator) -> Result<C64> {
    let a = s.alpha;
    let rad = match op {
        Operator::Adjoint => C64::new(a * s.nu, 0.0) - C64::i() * (u - s.c.conj()),
        Operator::Original => C64::new(a * s.nu, 0.0) + C64::i() * (u - s.c),
    };
    if !(rad.re > 0.0) {
        return Err(StabilityError::InvalidArgument(format!(
            "fast exponent radicand has real part {:e} <= 0 (alpha nu + Im c must be positive)",
            rad.re
        )));
    }
    Ok((a.abs() / s.nu).sqrt() * rad.sqrt())
}

pub fn mu_star(p: &ShearProfile, s: &SpectralParams, which: Operator, grid: Arc<Grid>) -> Result<FastExponent> {
    s.check_viscous()?;
    let mu_values = grid.y.iter().map(|&y| mu_at(p.u(y), s, which)).collect::<Result<Vec<_>>>()?;
    Ok(FastExponent { params: *s, operator: which, grid, mu_values, branch: "principal" })
}

/// Graded mesh resolving the boundary layer: first cell `0.25/|mu(0)|`.
pub fn fast_mesh(p: &ShearProfile, s: &SpectralParams) -> Result<Mesh> {
    let mu0 = mu_at(0.0, s, Operator::Adjoint)?.norm();
    let h0 = (0.05 / p.eta0).min(0.25 / mu0);
    let h_max = (1.0 / p.eta0).min(0.5 / s.alpha.abs()).max(h0);
    Mesh::geometric(p.y_max, h0, 1.07, h_max)
}

pub fn fast_grid(p: &ShearProfile, s: &SpectralParams) -> Result<Arc<Grid>> {
    Ok(Arc::new(Grid::new(fast_mesh(p, s)?)))
}

/// How the derivative rows fed to [`apply_operator_viscous`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DerivativeSource {
    ClosedForm,
    /// repeated piecewise-polynomial differentiation of the samples
    Numerical,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViscousApplication {
    pub values: Vec<C64>,
    pub source: DerivativeSource,
    /// set when numerical fourth derivatives are used at `nu < 1e-6`
    pub quality_flag: bool,
}

/// Completes missing derivative rows (up to the fourth) by numerical differentiation.
pub fn with_numerical_derivatives(f: &MeshFunction) -> MeshFunction {
    let mut rows = f.rows.clone();
    while rows.len() < 5 {
        let next = f.grid.differentiate(rows.last().unwrap());
        rows.push(next);
    }
    MeshFunction { grid: f.grid.clone(), rows }
}

/// `Orr_{c,nu} f = (U - c) Lap f - U'' f - (nu/(i alpha)) Lap^2 f` or
/// `Orr*_{c,nu} f = (U - conj c) Lap f + 2 U' f' + (nu/(i alpha)) Lap^2 f`,
/// using rows 0..=4 of `f`.
pub fn apply_operator_viscous(
    p: &ShearProfile,
    s: &SpectralParams,
    which: Operator,
    f: &MeshFunction,
    source: DerivativeSource,
) -> Result<ViscousApplication> {
    if f.rows.len() < 5 {
        return Err(StabilityError::InvalidArgument("viscous operator needs rows 0..=4".into()));
    }
    let grid = &f.grid;
    let u = profile_samples(p, grid, 3);
    let a2 = s.alpha * s.alpha;
    let vf = s.visc_factor();
    let values = (0..grid.len())
        .map(|j| {
            let r = |k: usize| f.rows[k][j];
            let lap = r(2) - a2 * r(0);
            let lap2 = r(4) - 2.0 * a2 * r(2) + a2 * a2 * r(0);
            match which {
                Operator::Original => (u[0][j] - s.c) * lap - u[2][j] * r(0) - vf * lap2,
                Operator::Adjoint => (u[0][j] - s.c.conj()) * lap + 2.0 * u[1][j] * r(1) + vf * lap2,
            }
        })
        .collect();
    Ok(ViscousApplication { values, source, quality_flag: source == DerivativeSource::Numerical && s.nu < 1e-6 })
}

/// `+1` for the adjoint operator, `-1` for the original: the sign of the
/// `(nu/(i alpha)) Lap^2` term.
pub(crate) fn visc_sign(op: Operator) -> f64 {
    match op {
        Operator::Adjoint => 1.0,
        Operator::Original => -1.0,
    }
}
