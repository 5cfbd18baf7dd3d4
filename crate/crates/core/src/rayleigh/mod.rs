//! Inviscid layer: fundamental solutions of the Rayleigh operator and its
//! adjoint, Wronskians, Green functions, eigenvalues and image tests.

pub(crate) mod eigen;
pub(crate) mod fundamental;
mod green;
mod image;

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::odecore::{Grid, Mesh};
use crate::profiles::{ShearProfile, SpectralParams};
use crate::{Result, StabilityError};

pub use eigen::{
    adjoint_trace, boundary_trace, estimate_kappa, estimate_kappa_with, find_adjoint_eigenvalue, find_eigenvalue,
    default_contour, ls_fit, s_operator_coefficient, Eigenvalue, KappaEstimate,
};
pub use fundamental::{
    adjoint_from_original, apply_operator, decaying_trace, fundamental_solution, fundamental_solution_on,
    t_operator_apply, wronskian, FundamentalSolution, SeriesInfo, WronskianReport, SOLVE_TOL,
};
pub use green::{build_green, build_green_on, green_apply, GreenApplication, GreenKind, InviscidGreen};
pub use image::{eigenmode, image_test, ImageTest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Kind {
    Decaying,
    Growing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Operator {
    /// `Ray_c` (or `Orr_{c,nu}`)
    Original,
    /// `Ray*_c` (or `Orr*_{c,nu}`)
    Adjoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Series,
    Integration,
}

/// Samples of a function and its first derivatives on a grid.
/// `rows[k][j]` is the `k`-th derivative at `grid.y[j]`.
#[derive(Debug, Clone)]
pub struct MeshFunction {
    pub grid: Arc<Grid>,
    pub rows: Vec<Vec<C64>>,
}

impl MeshFunction {
    /// `f(y, k)` must return the `k`-th derivative at `y`.
    pub fn from_fn<F: Fn(f64, usize) -> C64>(grid: Arc<Grid>, n_rows: usize, f: F) -> Self {
        let rows = (0..n_rows).map(|k| grid.y.iter().map(|&y| f(y, k)).collect()).collect();
        MeshFunction { grid, rows }
    }

    pub fn values(&self) -> &[C64] {
        &self.rows[0]
    }

    pub fn conj(&self) -> MeshFunction {
        let rows = self.rows.iter().map(|r| r.iter().map(|v| v.conj()).collect()).collect();
        MeshFunction { grid: self.grid.clone(), rows }
    }

    pub fn scale(&self, s: C64) -> MeshFunction {
        let rows = self.rows.iter().map(|r| r.iter().map(|v| v * s).collect()).collect();
        MeshFunction { grid: self.grid.clone(), rows }
    }
}

/// Graded mesh used when the caller does not supply one: fine near the wall,
/// cells capped at `min(1/eta0, 0.5/|alpha|)`.
pub fn default_mesh(p: &ShearProfile, alpha: f64) -> Mesh {
    let h0 = 0.05 / p.eta0;
    let h_max = (1.0 / p.eta0).min(0.5 / alpha.abs()).max(h0);
    Mesh::geometric(p.y_max, h0, 1.07, h_max).expect("default mesh parameters are valid")
}

pub fn default_grid(p: &ShearProfile, alpha: f64) -> Arc<Grid> {
    Arc::new(Grid::new(default_mesh(p, alpha)))
}

/// `U^{(k)}` for `k = 0..n` at every grid point, `out[k][j]`.
pub fn profile_samples(p: &ShearProfile, grid: &Grid, n: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; grid.len()]; n];
    let mut buf = vec![0.0; n];
    for (j, &y) in grid.y.iter().enumerate() {
        p.derivatives_into(y, &mut buf);
        for k in 0..n {
            out[k][j] = buf[k];
        }
    }
    out
}

/// The phase speed entering the operator: `c` for the original, `conj(c)` for the adjoint.
pub fn shifted_c(s: &SpectralParams, op: Operator) -> C64 {
    match op {
        Operator::Original => s.c,
        Operator::Adjoint => s.c.conj(),
    }
}

pub(crate) fn check_no_critical_layer(p: &ShearProfile, s: &SpectralParams, grid: &Grid) -> Result<()> {
    s.check()?;
    let inf = grid.y.iter().map(|&y| (p.u(y) - s.c).norm()).fold(f64::INFINITY, f64::min);
    if !(inf > 1e-8) {
        return Err(StabilityError::InvalidArgument(format!(
            "critical layer: inf |U - c| = {inf:e} at c = {}",
            s.c
        )));
    }
    Ok(())
}
