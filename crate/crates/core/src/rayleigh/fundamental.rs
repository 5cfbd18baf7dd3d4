use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{check_no_critical_layer, default_grid, profile_samples, shifted_c, Kind, MeshFunction, Method, Operator};
use crate::odecore::{integrate_system, Grid};
use crate::profiles::{ShearProfile, SpectralParams};
use crate::{Result, StabilityError};

/// Relative tolerance of every Rayleigh integration.
pub const SOLVE_TOL: f64 = 1e-12;
/// Contraction bound required of the T operator on the series tail.
const SERIES_BOUND: f64 = 0.5;
const SERIES_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesInfo {
    pub ybar: f64,
    pub iterations: usize,
    /// last measured ratio of successive increments
    pub contraction_ratio: f64,
    /// a priori bound `sup|pref| / (2 alpha) int_ybar |K|`
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Normalization {
    /// `phi(y_max) e^{+-alpha y_max} = 1`
    FarFieldUnit,
    /// inherited from another solution (e.g. `conj(phi)/(U - conj c)`)
    Derived,
}

#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub params: SpectralParams,
    pub kind: Kind,
    pub operator: Operator,
    pub method: Method,
    pub grid: Arc<Grid>,
    /// `phi, phi', phi'', phi'''` at every grid point
    pub values: [Vec<C64>; 4],
    pub normalization: Normalization,
    pub series: Option<SeriesInfo>,
}

/// Writes `(A, B)` with `phi'' = A phi + B phi'`; `d` holds `U, U', U''`.
fn second_order(op: Operator, a2: f64, d: &[f64], cc: C64) -> (C64, C64) {
    let w = 1.0 / (d[0] - cc);
    match op {
        Operator::Original => (a2 + d[2] * w, C64::new(0.0, 0.0)),
        Operator::Adjoint => (C64::new(a2, 0.0), -2.0 * d[1] * w),
    }
}

/// `(A', B')`; `d` holds `U .. U'''`.
fn second_order_deriv(op: Operator, d: &[f64], cc: C64) -> (C64, C64) {
    let w = 1.0 / (d[0] - cc);
    match op {
        Operator::Original => (d[3] * w - d[2] * d[1] * w * w, C64::new(0.0, 0.0)),
        Operator::Adjoint => (C64::new(0.0, 0.0), -2.0 * d[2] * w + 2.0 * d[1] * d[1] * w * w),
    }
}

impl FundamentalSolution {
    pub fn y(&self) -> &[f64] {
        &self.grid.y
    }

    pub fn as_mesh_function(&self) -> MeshFunction {
        MeshFunction { grid: self.grid.clone(), rows: self.values.to_vec() }
    }

    /// `(phi(0), phi'(0))`
    pub fn at_wall(&self) -> (C64, C64) {
        (self.values[0][0], self.values[1][0])
    }

    /// `|phi(y) e^{+-alpha y}|` at the mesh nodes (minus sign for growing).
    pub fn tail_amplitude(&self) -> Vec<f64> {
        let a = self.params.alpha.abs();
        let sgn = if self.kind == Kind::Decaying { 1.0 } else { -1.0 };
        self.grid.node_indices().map(|j| self.values[0][j].norm() * (sgn * a * self.grid.y[j]).exp()).collect()
    }

    /// Largest relative defect of the second-order equation at interior
    /// nodes, with `phi''` from numerical differentiation of `phi'`.
    pub fn equation_residual(&self, p: &ShearProfile) -> f64 {
        let d2 = self.grid.differentiate(&self.values[1]);
        let cc = shifted_c(&self.params, self.operator);
        let a2 = self.params.alpha * self.params.alpha;
        let mut d = [0.0; 3];
        let last = self.grid.len() - 1;
        let mut worst = 0.0f64;
        for j in self.grid.node_indices().filter(|&j| j > 0 && j < last) {
            p.derivatives_into(self.grid.y[j], &mut d);
            let (a, b) = second_order(self.operator, a2, &d, cc);
            let ode = a * self.values[0][j] + b * self.values[1][j];
            let scale = self.values[0][j].norm() + self.values[1][j].norm() + ode.norm();
            worst = worst.max((d2[j] - ode).norm() / scale);
        }
        worst
    }
}

/// Fills `phi''` and `phi'''` from the equation given `phi` and `phi'`.
fn complete_rows(p: &ShearProfile, s: &SpectralParams, op: Operator, grid: &Grid, phi: Vec<C64>, dphi: Vec<C64>) -> [Vec<C64>; 4] {
    let cc = shifted_c(s, op);
    let a2 = s.alpha * s.alpha;
    let mut d2 = vec![C64::new(0.0, 0.0); grid.len()];
    let mut d3 = d2.clone();
    let mut d = [0.0; 4];
    for (j, &y) in grid.y.iter().enumerate() {
        p.derivatives_into(y, &mut d);
        let (a, b) = second_order(op, a2, &d, cc);
        let (da, db) = second_order_deriv(op, &d, cc);
        d2[j] = a * phi[j] + b * dphi[j];
        d3[j] = da * phi[j] + (a + db) * dphi[j] + b * d2[j];
    }
    [phi, dphi, d2, d3]
}

fn integrate_rayleigh(
    p: &ShearProfile,
    s: &SpectralParams,
    op: Operator,
    span: (f64, f64),
    init: [C64; 2],
    outputs: &[f64],
) -> Result<crate::odecore::Trajectory> {
    let cc = shifted_c(s, op);
    let a2 = s.alpha * s.alpha;
    integrate_system(
        |y, u, du| {
            let mut d = [0.0; 3];
            p.derivatives_into(y, &mut d);
            let (a, b) = second_order(op, a2, &d, cc);
            du[0] = u[1];
            du[1] = a * u[0] + b * u[1];
        },
        span,
        &init,
        SOLVE_TOL,
        outputs,
    )
}

/// `(phi^-(0), phi^-'(0))` of the decaying solution seeded with
/// `e^{-alpha y}` at `y_max`, without storing the trajectory.
pub fn decaying_trace(p: &ShearProfile, s: &SpectralParams, op: Operator) -> Result<[C64; 2]> {
    let a = s.alpha.abs();
    let e = (-a * p.y_max).exp();
    let t = integrate_rayleigh(p, s, op, (p.y_max, 0.0), [C64::new(e, 0.0), C64::new(-a * e, 0.0)], &[0.0])?;
    let st = t.states.last().ok_or(StabilityError::NonFinite(0.0))?;
    Ok([st[0], st[1]])
}

fn scatter(grid: &Grid, traj: &crate::odecore::Trajectory, phi: &mut [C64], dphi: &mut [C64]) {
    for (y, st) in traj.ys.iter().zip(&traj.states) {
        let j = grid.y.partition_point(|&v| v < *y);
        phi[j] = st[0];
        dphi[j] = st[1];
    }
}

pub fn fundamental_solution(
    p: &ShearProfile,
    s: &SpectralParams,
    kind: Kind,
    op: Operator,
    method: Method,
) -> Result<FundamentalSolution> {
    fundamental_solution_on(p, s, kind, op, method, default_grid(p, s.alpha))
}

pub fn fundamental_solution_on(
    p: &ShearProfile,
    s: &SpectralParams,
    kind: Kind,
    op: Operator,
    method: Method,
    grid: Arc<Grid>,
) -> Result<FundamentalSolution> {
    check_no_critical_layer(p, s, &grid)?;
    let a = s.alpha.abs();
    let n = grid.len();
    let y_max = grid.y_max();
    let zero = C64::new(0.0, 0.0);
    let mut phi = vec![zero; n];
    let mut dphi = vec![zero; n];
    let mut series = None;
    match method {
        Method::Integration => {
            let traj = match kind {
                Kind::Decaying => {
                    let e = (-a * y_max).exp();
                    integrate_rayleigh(p, s, op, (y_max, 0.0), [C64::new(e, 0.0), C64::new(-a * e, 0.0)], &grid.y)?
                }
                // forward integration is dominated by the growing mode
                Kind::Growing => integrate_rayleigh(p, s, op, (0.0, y_max), [C64::new(1.0, 0.0), C64::new(a, 0.0)], &grid.y)?,
            };
            scatter(&grid, &traj, &mut phi, &mut dphi);
        }
        Method::Series => {
            let (jbar, info) = series_tail(p, s, kind, op, &grid, &mut phi, &mut dphi)?;
            if jbar > 0 {
                let traj = integrate_rayleigh(p, s, op, (grid.y[jbar], 0.0), [phi[jbar], dphi[jbar]], &grid.y[..jbar])?;
                scatter(&grid, &traj, &mut phi, &mut dphi);
            }
            series = Some(info);
        }
    }
    let sgn = if kind == Kind::Decaying { 1.0 } else { -1.0 };
    let amp = phi[n - 1] * (sgn * a * y_max).exp();
    if !(amp.norm() > 0.0) || !amp.re.is_finite() {
        return Err(StabilityError::NonFinite(y_max));
    }
    for j in 0..n {
        phi[j] /= amp;
        dphi[j] /= amp;
    }
    let values = complete_rows(p, s, op, &grid, phi, dphi);
    Ok(FundamentalSolution {
        params: *s,
        kind,
        operator: op,
        method,
        grid,
        values,
        normalization: Normalization::FarFieldUnit,
        series,
    })
}

/// Pointwise data of the T operator: prefactor, its log-derivative and the kernel.
pub(crate) struct TData {
    pub pref: Vec<C64>,
    pub pref_ratio: Vec<C64>,
    pub kernel: Vec<C64>,
}

pub(crate) fn t_data(p: &ShearProfile, s: &SpectralParams, op: Operator, grid: &Grid) -> TData {
    let u = profile_samples(p, grid, 3);
    let cc = shifted_c(s, op);
    let n = grid.len();
    let mut t = TData { pref: vec![C64::new(1.0, 0.0); n], pref_ratio: vec![C64::new(0.0, 0.0); n], kernel: vec![C64::new(0.0, 0.0); n] };
    for j in 0..n {
        let w = 1.0 / (u[0][j] - cc);
        match op {
            Operator::Original => t.kernel[j] = u[2][j] * w,
            Operator::Adjoint => {
                t.pref[j] = w;
                t.pref_ratio[j] = -u[1][j] * w;
                t.kernel[j] = C64::new(u[2][j], 0.0);
            }
        }
    }
    t
}

/// `(T phi, (T phi)')` for samples `phi` supported on `j >= jbar`.
pub(crate) fn t_apply_raw(grid: &Grid, td: &TData, a: f64, jbar: usize, phi: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let n = grid.len();
    let g: Vec<C64> = (0..n).map(|j| if j >= jbar { td.kernel[j] * phi[j] } else { C64::new(0.0, 0.0) }).collect();
    let theta: Vec<C64> = grid.y.iter().map(|&y| C64::new(a * y, 0.0)).collect();
    let (l, r) = grid.exp_sweeps(&theta, &g);
    let mut t = vec![C64::new(0.0, 0.0); n];
    let mut dt = t.clone();
    for j in jbar..n {
        t[j] = td.pref[j] / (2.0 * a) * (l[j] + r[j]);
        dt[j] = td.pref_ratio[j] * t[j] + td.pref[j] * 0.5 * (r[j] - l[j]);
    }
    (t, dt)
}

/// Applies `T_{alpha; ybar}` to `phi` (row 0 used). The result vanishes
/// below `ybar`, which is snapped to the nearest mesh node.
pub fn t_operator_apply(
    p: &ShearProfile,
    s: &SpectralParams,
    ybar: f64,
    phi: &MeshFunction,
    op: Operator,
) -> Result<MeshFunction> {
    let grid = &phi.grid;
    if !(ybar < grid.y_max()) {
        return Err(StabilityError::InvalidArgument(format!("ybar = {ybar} must be below y_max")));
    }
    let jbar = grid.nearest_node(ybar.max(0.0));
    let td = t_data(p, s, op, grid);
    let (t, dt) = t_apply_raw(grid, &td, s.alpha.abs(), jbar, &phi.rows[0]);
    Ok(MeshFunction { grid: grid.clone(), rows: vec![t, dt] })
}

/// First node from which the a priori contraction bound of T is at most 1/2.
pub(crate) fn series_start(grid: &Grid, td: &TData, a: f64) -> Result<(usize, f64)> {
    let n = grid.len();
    let abs_k: Vec<C64> = td.kernel.iter().map(|k| C64::new(k.norm(), 0.0)).collect();
    let tail_k = grid.tail(&abs_k);
    let mut sup_pref = vec![0.0f64; n];
    let mut acc = 0.0f64;
    for j in (0..n).rev() {
        acc = acc.max(td.pref[j].norm());
        sup_pref[j] = acc;
    }
    let last = n - 1;
    grid.node_indices()
        .filter(|&j| j < last)
        .map(|j| (j, sup_pref[j] / (2.0 * a) * tail_k[j].re))
        .find(|&(_, b)| b <= SERIES_BOUND)
        .ok_or(StabilityError::SeriesDivergence { ratio: f64::NAN })
}

/// Adds `sum_{j >= 1} (-T)^j seed` to `phi`, `dphi` (which hold the seed on
/// `j >= jbar`). Sizes are measured relative to `weight`.
/// Returns `(iterations, last increment ratio)`.
pub(crate) fn neumann(
    grid: &Grid,
    td: &TData,
    a: f64,
    jbar: usize,
    seed: &[C64],
    weight: &[f64],
    phi: &mut [C64],
    dphi: &mut [C64],
) -> Result<(usize, f64)> {
    let n = grid.len();
    let weighted_sup = |v: &[C64]| (jbar..n).map(|j| v[j].norm() / weight[j]).fold(0.0, f64::max);
    let mut inc = seed.to_vec();
    let mut prev = weighted_sup(&inc);
    let mut ratio = 0.0;
    for it in 1..=SERIES_MAX_ITER {
        let (t, dt) = t_apply_raw(grid, td, a, jbar, &inc);
        for j in jbar..n {
            inc[j] = -t[j];
            phi[j] -= t[j];
            dphi[j] -= dt[j];
        }
        let size = weighted_sup(&inc);
        ratio = if prev > 0.0 { size / prev } else { 0.0 };
        if it >= 4 && ratio >= 1.0 {
            return Err(StabilityError::SeriesDivergence { ratio });
        }
        prev = size;
        if size <= 1e-16 * weighted_sup(phi) {
            return Ok((it, ratio));
        }
    }
    Err(StabilityError::SeriesDivergence { ratio })
}

/// Neumann series `sum (-T)^j psi0` on `[ybar, y_max]`; fills `phi`, `dphi` there.
fn series_tail(
    p: &ShearProfile,
    s: &SpectralParams,
    kind: Kind,
    op: Operator,
    grid: &Grid,
    phi: &mut [C64],
    dphi: &mut [C64],
) -> Result<(usize, SeriesInfo)> {
    let a = s.alpha.abs();
    let n = grid.len();
    let td = t_data(p, s, op, grid);
    let sgn = if kind == Kind::Decaying { -1.0 } else { 1.0 };
    let (jbar, bound) = series_start(grid, &td, a)?;
    let psi0: Vec<C64> = grid.y.iter().zip(&td.pref).map(|(&y, pr)| pr * (sgn * a * y).exp()).collect();
    for j in jbar..n {
        phi[j] = psi0[j];
        dphi[j] = (sgn * a + td.pref_ratio[j]) * psi0[j];
    }
    let weight: Vec<f64> = psi0.iter().map(|v| v.norm()).collect();
    let (iterations, ratio) = neumann(grid, &td, a, jbar, &psi0, &weight, phi, dphi)?;
    Ok((jbar, SeriesInfo { ybar: grid.y[jbar], iterations, contraction_ratio: ratio, bound }))
}

/// Applies `Ray_c` (original) or `Ray*_c` (adjoint) using rows 0..=2 of `f`.
pub fn apply_operator(p: &ShearProfile, s: &SpectralParams, op: Operator, f: &MeshFunction) -> Vec<C64> {
    let grid = &f.grid;
    let u = profile_samples(p, grid, 3);
    let cc = shifted_c(s, op);
    let a2 = s.alpha * s.alpha;
    (0..grid.len())
        .map(|j| {
            let lap = f.rows[2][j] - a2 * f.rows[0][j];
            match op {
                Operator::Original => (u[0][j] - cc) * lap - u[2][j] * f.rows[0][j],
                Operator::Adjoint => (u[0][j] - cc) * lap + 2.0 * u[1][j] * f.rows[1][j],
            }
        })
        .collect()
}

/// `conj(phi)/(U - conj c)`: maps original solutions to adjoint ones.
pub fn adjoint_from_original(p: &ShearProfile, fs: &FundamentalSolution) -> Result<FundamentalSolution> {
    if fs.operator != Operator::Original {
        return Err(StabilityError::Mismatch("expected an original-operator solution".into()));
    }
    let cb = fs.params.c.conj();
    let grid = &fs.grid;
    let n = grid.len();
    let mut rows: [Vec<C64>; 4] = Default::default();
    for r in rows.iter_mut() {
        r.resize(n, C64::new(0.0, 0.0));
    }
    let mut d = [0.0; 4];
    for j in 0..n {
        p.derivatives_into(grid.y[j], &mut d);
        let q = 1.0 / (d[0] - cb);
        let q1 = -d[1] * q * q;
        let q2 = -d[2] * q * q + 2.0 * d[1] * d[1] * q * q * q;
        let q3 = -d[3] * q * q + 6.0 * d[1] * d[2] * q * q * q - 6.0 * d[1].powi(3) * q * q * q * q;
        let f: Vec<C64> = (0..4).map(|k| fs.values[k][j].conj()).collect();
        rows[0][j] = f[0] * q;
        rows[1][j] = f[1] * q + f[0] * q1;
        rows[2][j] = f[2] * q + 2.0 * f[1] * q1 + f[0] * q2;
        rows[3][j] = f[3] * q + 3.0 * f[2] * q1 + 3.0 * f[1] * q2 + f[0] * q3;
    }
    Ok(FundamentalSolution {
        params: fs.params,
        kind: fs.kind,
        operator: Operator::Adjoint,
        method: fs.method,
        grid: grid.clone(),
        values: rows,
        normalization: Normalization::Derived,
        series: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WronskianReport {
    pub operator: Operator,
    /// `J = phi^- phi^+' - phi^-' phi^+` at every grid point
    pub j_values: Vec<C64>,
    /// `J` (original) or `(U - c)^2 conj(J*)` (adjoint); constant in theory
    pub weighted: Vec<C64>,
    pub constancy_defect: f64,
    /// mean of `weighted` divided by `|alpha|`
    pub c_alpha: C64,
}

impl WronskianReport {
    /// Max relative deviation from the mean over grid points with `y <= y_end`.
    pub fn defect_on(&self, y: &[f64], y_end: f64) -> f64 {
        let vals: Vec<C64> = self.weighted.iter().zip(y).filter(|(_, &yy)| yy <= y_end).map(|(w, _)| *w).collect();
        relative_spread(&vals)
    }
}

fn relative_spread(v: &[C64]) -> f64 {
    let mean = v.iter().sum::<C64>() / v.len() as f64;
    v.iter().map(|w| (w - mean).norm()).fold(0.0, f64::max) / mean.norm()
}

pub fn wronskian(p: &ShearProfile, minus: &FundamentalSolution, plus: &FundamentalSolution) -> Result<WronskianReport> {
    if minus.params != plus.params || minus.operator != plus.operator || !Arc::ptr_eq(&minus.grid, &plus.grid) && minus.grid.y != plus.grid.y {
        return Err(StabilityError::Mismatch("wronskian needs solutions with equal params, operator and grid".into()));
    }
    let n = minus.grid.len();
    let j_values: Vec<C64> = (0..n)
        .map(|j| minus.values[0][j] * plus.values[1][j] - minus.values[1][j] * plus.values[0][j])
        .collect();
    let weighted: Vec<C64> = match minus.operator {
        Operator::Original => j_values.clone(),
        Operator::Adjoint => {
            let c = minus.params.c;
            j_values.iter().zip(&minus.grid.y).map(|(jv, &y)| (p.u(y) - c).powi(2) * jv.conj()).collect()
        }
    };
    let constancy_defect = relative_spread(&weighted);
    let mean = weighted.iter().sum::<C64>() / n as f64;
    Ok(WronskianReport {
        operator: minus.operator,
        j_values,
        weighted,
        constancy_defect,
        c_alpha: mean / minus.params.alpha.abs(),
    })
}
