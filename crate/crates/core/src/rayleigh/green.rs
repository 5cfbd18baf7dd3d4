use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::fundamental::{fundamental_solution_on, FundamentalSolution};
use super::{default_grid, profile_samples, shifted_c, Kind, MeshFunction, Method, Operator};
use crate::odecore::Grid;
use crate::profiles::{ShearProfile, SpectralParams};
use crate::{Result, StabilityError};

/// Threshold on `|phi^-(0)|` below which the Dirichlet Green function is refused.
pub const COLLISION_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GreenKind {
    Interior,
    Dirichlet,
    Ivp,
}

/// `G(x, y) = a^-(x) phi^-(y) + a^+(x) phi^+(y)`, with one coefficient
/// pair for `x < y` (`left`) and one for `x > y` (`right`).
#[derive(Debug, Clone)]
pub struct InviscidGreen {
    pub kind: GreenKind,
    pub operator: Operator,
    pub params: SpectralParams,
    pub minus: FundamentalSolution,
    pub plus: FundamentalSolution,
    pub left: [Vec<C64>; 2],
    pub right: [Vec<C64>; 2],
}

pub fn build_green(p: &ShearProfile, s: &SpectralParams, kind: GreenKind, op: Operator) -> Result<InviscidGreen> {
    build_green_on(p, s, kind, op, default_grid(p, s.alpha))
}

pub fn build_green_on(
    p: &ShearProfile,
    s: &SpectralParams,
    kind: GreenKind,
    op: Operator,
    grid: Arc<Grid>,
) -> Result<InviscidGreen> {
    let minus = fundamental_solution_on(p, s, Kind::Decaying, op, Method::Integration, grid.clone())?;
    let plus = fundamental_solution_on(p, s, Kind::Growing, op, Method::Integration, grid.clone())?;
    let u = profile_samples(p, &grid, 1);
    let cc = shifted_c(s, op);
    let n = grid.len();
    let zero = C64::new(0.0, 0.0);
    let mut left = [vec![zero; n], vec![zero; n]];
    let mut right = [vec![zero; n], vec![zero; n]];
    let (m0, p0) = (minus.values[0][0], plus.values[0][0]);
    if kind == GreenKind::Dirichlet && m0.norm() < COLLISION_THRESHOLD {
        return Err(StabilityError::EigenvalueCollision { re: s.c.re, im: s.c.im, trace: m0.norm() });
    }
    for j in 0..n {
        let (fm, fp) = (minus.values[0][j], plus.values[0][j]);
        let pj = (u[0][j] - cc) * (fm * plus.values[1][j] - minus.values[1][j] * fp);
        match kind {
            GreenKind::Interior | GreenKind::Dirichlet => {
                left[0][j] = -fp / pj;
                right[1][j] = -fm / pj;
                if kind == GreenKind::Dirichlet {
                    let d = fm * p0 / (pj * m0);
                    left[0][j] += d;
                    right[0][j] += d;
                }
            }
            GreenKind::Ivp => {
                left[0][j] = -fp / pj;
                left[1][j] = fm / pj;
            }
        }
    }
    Ok(InviscidGreen { kind, operator: op, params: *s, minus, plus, left, right })
}

impl InviscidGreen {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.minus.grid
    }

    /// `(G(x_i, y_j), d_y G(x_i, y_j))`; on the diagonal the `x < y` side is used.
    pub fn value(&self, ix: usize, jy: usize) -> (C64, C64) {
        let co = if ix <= jy { &self.left } else { &self.right };
        let g = co[0][ix] * self.minus.values[0][jy] + co[1][ix] * self.plus.values[0][jy];
        let dg = co[0][ix] * self.minus.values[1][jy] + co[1][ix] * self.plus.values[1][jy];
        (g, dg)
    }

    /// `d_y G(y-, y) - d_y G(y+, y)` at grid point `j`.
    pub fn derivative_jump(&self, j: usize) -> C64 {
        let d = |co: &[Vec<C64>; 2]| co[0][j] * self.minus.values[1][j] + co[1][j] * self.plus.values[1][j];
        d(&self.left) - d(&self.right)
    }

    /// `G(y-, y) - G(y+, y)` at grid point `j`.
    pub fn value_jump(&self, j: usize) -> C64 {
        let d = |co: &[Vec<C64>; 2]| co[0][j] * self.minus.values[0][j] + co[1][j] * self.plus.values[0][j];
        d(&self.left) - d(&self.right)
    }

    /// Slice `x -> (G(x, y0), d_y G(x, y0))` at the grid point nearest `y0`.
    pub fn slice(&self, y0: f64) -> Vec<(f64, C64, C64)> {
        let g = self.grid();
        let jy = g.nearest(y0);
        (0..g.len()).map(|ix| {
            let (v, d) = self.value(ix, jy);
            (g.y[ix], v, d)
        }).collect()
    }

    /// Homogeneous solution with `phi(0) = a`, `phi'(0) = b`.
    pub fn homogeneous(&self, a: C64, b: C64) -> MeshFunction {
        let (m, p) = (&self.minus.values, &self.plus.values);
        let det = m[0][0] * p[1][0] - m[1][0] * p[0][0];
        let km = (a * p[1][0] - b * p[0][0]) / det;
        let kp = (b * m[0][0] - a * m[1][0]) / det;
        let rows = (0..3).map(|r| m[r].iter().zip(&p[r]).map(|(x, y)| km * x + kp * y).collect()).collect();
        MeshFunction { grid: self.grid().clone(), rows }
    }
}

#[derive(Debug, Clone)]
pub struct GreenApplication {
    /// `f, f', f''` of `f(y) = int G(x, y) psi(x) dx`
    pub f: MeshFunction,
    /// `operator(f) - psi` at interior mesh nodes
    pub residual: Vec<C64>,
    pub residual_sup: f64,
}

/// `f(y) = int_0^{y_max} G(x, y) psi(x) dx` through cumulative integrals on
/// either side of `y`, plus the residual `sup |operator(f) - psi|` with
/// `f''` from numerical differentiation of `f'`.
pub fn green_apply(p: &ShearProfile, g: &InviscidGreen, psi: &[C64]) -> Result<GreenApplication> {
    let grid = g.grid().clone();
    let n = grid.len();
    if psi.len() != n {
        return Err(StabilityError::Mismatch(format!("psi has {} samples, grid has {n}", psi.len())));
    }
    if let Some(v) = psi.iter().find(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(StabilityError::InvalidArgument(format!("nonfinite sample {v}")));
    }
    let prod = |co: &Vec<C64>| -> Vec<C64> { co.iter().zip(psi).map(|(a, b)| a * b).collect() };
    let lm = grid.cumulative(&prod(&g.left[0]));
    let lp = grid.cumulative(&prod(&g.left[1]));
    let rm = grid.tail(&prod(&g.right[0]));
    let rp = grid.tail(&prod(&g.right[1]));
    let (m, pl) = (&g.minus.values, &g.plus.values);
    let f: Vec<C64> = (0..n).map(|j| m[0][j] * (lm[j] + rm[j]) + pl[0][j] * (lp[j] + rp[j])).collect();
    let df: Vec<C64> = (0..n).map(|j| m[1][j] * (lm[j] + rm[j]) + pl[1][j] * (lp[j] + rp[j])).collect();
    let d2f = grid.differentiate(&df);
    let u = profile_samples(p, &grid, 3);
    let cc = shifted_c(&g.params, g.operator);
    let a2 = g.params.alpha * g.params.alpha;
    let last = n - 1;
    let residual: Vec<C64> = grid
        .node_indices()
        .filter(|&j| j > 0 && j < last)
        .map(|j| {
            let lap = d2f[j] - a2 * f[j];
            let op = match g.operator {
                Operator::Original => (u[0][j] - cc) * lap - u[2][j] * f[j],
                Operator::Adjoint => (u[0][j] - cc) * lap + 2.0 * u[1][j] * df[j],
            };
            op - psi[j]
        })
        .collect();
    let residual_sup = Grid::sup_norm(&residual);
    Ok(GreenApplication { f: MeshFunction { grid, rows: vec![f, df, d2f] }, residual, residual_sup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::make_profile;

    #[test]
    fn jumps_and_boundary_values() {
        let p = make_profile("cubic_exp", &[1.0]).unwrap();
        let s = SpectralParams::inviscid(1.0, C64::new(0.5, 0.2));
        for op in [Operator::Original, Operator::Adjoint] {
            let cc = shifted_c(&s, op);
            for kind in [GreenKind::Interior, GreenKind::Dirichlet, GreenKind::Ivp] {
                let g = build_green(&p, &s, kind, op).unwrap();
                let grid = g.grid().clone();
                for j in (1..10).map(|k| grid.nearest(k as f64 * 1.3)) {
                    let expect = 1.0 / (p.u(grid.y[j]) - cc);
                    assert!((g.derivative_jump(j) - expect).norm() < 1e-7 * expect.norm());
                    assert!(g.value_jump(j).norm() < 1e-9);
                }
                if kind == GreenKind::Dirichlet {
                    assert!((1..grid.len()).all(|ix| g.value(ix, 0).0.norm() < 1e-10));
                }
                if kind == GreenKind::Ivp {
                    assert!((1..grid.len()).all(|ix| g.value(ix, 0).0.norm() < 1e-12 && g.value(ix, 0).1.norm() < 1e-12));
                }
            }
        }
    }

    #[test]
    fn zero_source_gives_zero() {
        let p = make_profile("cubic_exp", &[1.0]).unwrap();
        let s = SpectralParams::inviscid(1.0, C64::new(0.5, 0.2));
        let g = build_green(&p, &s, GreenKind::Interior, Operator::Adjoint).unwrap();
        let z = vec![C64::new(0.0, 0.0); g.grid().len()];
        let r = green_apply(&p, &g, &z).unwrap();
        assert_eq!(Grid::sup_norm(&r.f.rows[0]), 0.0);
    }
}
