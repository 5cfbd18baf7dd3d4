use num_complex::Complex64 as C64;
use serde::Serialize;

use super::fundamental::{fundamental_solution_on, FundamentalSolution};
use super::{Kind, MeshFunction, Method, Operator};
use crate::profiles::{ShearProfile, SpectralParams};
use crate::Result;

/// Decaying original solution at an eigenvalue, far-field normalized.
pub fn eigenmode(p: &ShearProfile, s_at_c0: &SpectralParams, grid: std::sync::Arc<crate::odecore::Grid>) -> Result<FundamentalSolution> {
    fundamental_solution_on(p, s_at_c0, Kind::Decaying, Operator::Original, Method::Integration, grid)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ImageTest {
    pub integral: C64,
    pub norm_psi: f64,
    /// norm of the kernel element paired against
    pub norm_kernel: f64,
    /// `|integral| / (norm_psi norm_kernel)`
    pub ratio: f64,
}

impl ImageTest {
    pub fn is_member(&self, tol: f64) -> bool {
        self.ratio < tol
    }
}

/// Pairs `psi` with the kernel of the operator dual to `op`:
/// for `Adjoint`, `int conj(phi_{c0}) psi`; for `Original`,
/// `int phi_{c0} / (U - c0) psi` (the conjugate adjoint eigenmode).
pub fn image_test(p: &ShearProfile, s_at_c0: &SpectralParams, psi: &MeshFunction, op: Operator) -> Result<ImageTest> {
    let grid = psi.grid.clone();
    let phi = eigenmode(p, s_at_c0, grid.clone())?;
    let weight: Vec<C64> = (0..grid.len())
        .map(|j| match op {
            Operator::Adjoint => phi.values[0][j],
            Operator::Original => (phi.values[0][j] / (p.u(grid.y[j]) - s_at_c0.c)).conj(),
        })
        .collect();
    let integrand: Vec<C64> = weight.iter().zip(&psi.rows[0]).map(|(w, v)| w.conj() * v).collect();
    let integral = grid.integrate(&integrand);
    let norm_psi = grid.l2_norm(&psi.rows[0]);
    let norm_kernel = grid.l2_norm(&weight);
    Ok(ImageTest { integral, norm_psi, norm_kernel, ratio: integral.norm() / (norm_psi * norm_kernel) })
}
