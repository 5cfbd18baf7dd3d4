use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::visc_sign;
use crate::jet::Jet;
use crate::odecore::{integrate_system, Grid};
use crate::profiles::{ShearProfile, SpectralParams};
use crate::rayleigh::fundamental::{neumann, series_start, t_data};
use crate::rayleigh::{fundamental_solution_on, shifted_c, Kind, Method, MeshFunction, Operator, SOLVE_TOL};
use crate::{Result, StabilityError};

/// `phi^s_N = sum_{k <= N} nu^k psi^k`, with `psi^0` the inviscid
/// fundamental solution and
/// `Ray psi^k = -sigma (1/(i alpha)) Lap^2 psi^{k-1}` (`sigma = +1` adjoint, `-1` original).
#[derive(Debug, Clone, Serialize)]
pub struct SlowExpansion {
    pub params: SpectralParams,
    pub operator: Operator,
    pub order: usize,
    pub sign: Kind,
    #[serde(skip)]
    pub grid: Arc<Grid>,
    /// `terms_hat[k][r][i]`: `r`-th derivative (`r <= 4`) of `psi^k / nu^k` at node `i`
    pub terms_hat: Vec<Vec<Vec<C64>>>,
    /// start of the series tail (the T operator contracts beyond it)
    pub ybar: f64,
    /// `(iterations, last ratio)` of the Neumann series for each `k >= 1`
    pub series: Vec<(usize, f64)>,
    /// `sup |sum_k nu^k (Ray psi^k - F^k)|` at interior nodes, with the
    /// second derivative of `psi^k` from numerical differentiation
    pub identity_defect: f64,
    /// sup over nodes of `nu^k` times the summed moduli of the individual
    /// terms of `Ray psi^k` and of the forcing
    pub identity_scale: f64,
}

impl SlowExpansion {
    /// `psi^k` (rows 0..=4) at the expansion's `nu`.
    pub fn term(&self, k: usize) -> MeshFunction {
        let f = self.params.nu.powi(k as i32);
        let rows = self.terms_hat[k].iter().map(|r| r.iter().map(|v| v * f).collect()).collect();
        MeshFunction { grid: self.grid.clone(), rows }
    }

    /// `phi^s_N` (rows 0..=4).
    pub fn sum(&self) -> MeshFunction {
        let mut acc = self.term(0);
        for k in 1..=self.order {
            let t = self.term(k);
            for (ra, rb) in acc.rows.iter_mut().zip(&t.rows) {
                for (a, b) in ra.iter_mut().zip(rb) {
                    *a += b;
                }
            }
        }
        acc
    }

    /// Operator residual of the partial sum, `sigma (nu/(i alpha)) Lap^2 psi^N`.
    pub fn residual(&self) -> Vec<C64> {
        let t = self.term(self.order);
        let a2 = self.params.alpha * self.params.alpha;
        let f = visc_sign(self.operator) * self.params.visc_factor();
        (0..self.grid.len()).map(|i| f * (t.rows[4][i] - 2.0 * a2 * t.rows[2][i] + a2 * a2 * t.rows[0][i])).collect()
    }

    /// `sup |residual| / sup |phi^s_N|`.
    pub fn relative_residual(&self) -> f64 {
        Grid::sup_norm(&self.residual()) / Grid::sup_norm(&self.sum().rows[0])
    }

    /// `(phi(0), phi'(0), phi''(0), phi'''(0))` of the partial sum.
    pub fn wall(&self) -> [C64; 4] {
        let s = self.sum();
        [s.rows[0][0], s.rows[1][0], s.rows[2][0], s.rows[3][0]]
    }
}

/// Pointwise jets of the whole chain `psi^0 .. psi^m` from `(psi^k, psi^k')`.
struct Chain<'a> {
    p: &'a ShearProfile,
    op: Operator,
    cc: C64,
    a2: f64,
    /// `-sigma / (i alpha)`
    force: C64,
}

impl Chain<'_> {
    fn jets(&self, y: f64, states: &[(C64, C64)], len: usize) -> Vec<Jet> {
        let u = Jet::from_real(&self.p.taylor(y, len - 1));
        let pinv = u.add_const(-self.cc).recip();
        let (a, b) = match self.op {
            Operator::Original => ((&u.deriv().deriv() * &pinv).add_const(C64::new(self.a2, 0.0)), Jet::zero(len)),
            Operator::Adjoint => (Jet::constant(C64::new(self.a2, 0.0), len), (&u.deriv() * &pinv).scale(C64::new(-2.0, 0.0))),
        };
        let mut out: Vec<Jet> = Vec::with_capacity(states.len());
        for (k, &(v, d)) in states.iter().enumerate() {
            let g = if k == 0 {
                Jet::zero(len)
            } else {
                let f = bilap(&out[k - 1], self.a2).scale(self.force);
                &f * &pinv
            };
            out.push(solve_jet(&a, &b, &g, v, d));
        }
        out
    }

    /// `F^k / nu^k` value at a point.
    fn forcing(&self, prev: &Jet) -> C64 {
        bilap(prev, self.a2).scale(self.force).value()
    }
}

/// `f'''' - 2 a2 f'' + a2^2 f` as a jet.
fn bilap(f: &Jet, a2: f64) -> Jet {
    let d2 = f.deriv().deriv();
    let d4 = d2.deriv().deriv();
    &(&d4 - &d2.scale(C64::new(2.0 * a2, 0.0))) + &f.scale(C64::new(a2 * a2, 0.0))
}

/// Taylor solution of `psi'' = A psi + B psi' + G` with `psi = v`, `psi' = d`.
fn solve_jet(a: &Jet, b: &Jet, g: &Jet, v: C64, d: C64) -> Jet {
    let n = a.len();
    let mut s = Jet::zero(n);
    s.0[0] = v;
    if n > 1 {
        s.0[1] = d;
    }
    for m in 0..n.saturating_sub(2) {
        let mut acc = g.0[m];
        for i in 0..=m {
            acc += a.0[i] * s.0[m - i] + b.0[i] * (m - i + 1) as f64 * s.0[m - i + 1];
        }
        s.0[m + 2] = acc / ((m + 2) * (m + 1)) as f64;
    }
    s
}

/// Slow expansion of order `order` on `grid`: each `psi^k` is a Neumann
/// series in the T operator on the tail `[ybar, y_max]` and the solution of
/// a backward initial value problem (carried jointly for all `k`) on `[0, ybar]`.
pub fn slow_mode_expansion(
    p: &ShearProfile,
    s: &SpectralParams,
    order: usize,
    sign: Kind,
    op: Operator,
    grid: Arc<Grid>,
) -> Result<SlowExpansion> {
    s.check_viscous()?;
    let base = fundamental_solution_on(p, s, sign, op, Method::Integration, grid.clone())?;
    let n = grid.len();
    let a = s.alpha.abs();
    let a2 = s.alpha * s.alpha;
    let chain = Chain { p, op, cc: shifted_c(s, op), a2, force: -visc_sign(op) / (C64::i() * s.alpha) };
    let td = t_data(p, s, op, &grid);
    let (jbar, _) = series_start(&grid, &td, a).map_err(|e| match e {
        StabilityError::SeriesDivergence { .. } => {
            StabilityError::InvalidArgument("T operator does not contract on any tail of the mesh".into())
        }
        other => other,
    })?;
    let sgn = if sign == Kind::Decaying { -1.0 } else { 1.0 };
    let weight: Vec<f64> = grid.y.iter().map(|&y| (sgn * a * y).exp()).collect();
    let fkern: Vec<C64> = match op {
        Operator::Adjoint => vec![C64::new(1.0, 0.0); n],
        Operator::Original => grid.y.iter().map(|&y| 1.0 / (p.u(y) - s.c)).collect(),
    };
    let theta: Vec<C64> = grid.y.iter().map(|&y| C64::new(a * y, 0.0)).collect();

    // states[k][i] = (psi^k, psi^k')
    let zero = C64::new(0.0, 0.0);
    let mut states: Vec<Vec<(C64, C64)>> = vec![(0..n).map(|i| (base.values[0][i], base.values[1][i])).collect()];
    let mut series = Vec::new();
    for k in 1..=order {
        let len = 2 * (k - 1) + 5;
        let mut g = vec![zero; n];
        for i in jbar..n {
            let st: Vec<(C64, C64)> = states.iter().map(|lv| lv[i]).collect();
            let jets = chain.jets(grid.y[i], &st, len);
            g[i] = chain.forcing(&jets[k - 1]) * fkern[i];
        }
        let (l, r) = grid.exp_sweeps(&theta, &g);
        let mut seed = vec![zero; n];
        let mut phi = vec![zero; n];
        let mut dphi = vec![zero; n];
        for i in jbar..n {
            seed[i] = -td.pref[i] / (2.0 * a) * (l[i] + r[i]);
            phi[i] = seed[i];
            dphi[i] = td.pref_ratio[i] * seed[i] - td.pref[i] * 0.5 * (r[i] - l[i]);
        }
        series.push(neumann(&grid, &td, a, jbar, &seed, &weight, &mut phi, &mut dphi)?);
        states.push((0..n).map(|i| (phi[i], dphi[i])).collect());
    }

    // head: all levels together, backward from ybar
    if jbar > 0 && order > 0 {
        let init: Vec<C64> = states.iter().flat_map(|lv| [lv[jbar].0, lv[jbar].1]).collect();
        let len = 2 * order + 3;
        let traj = integrate_system(
            |y, u, du| {
                let st: Vec<(C64, C64)> = (0..=order).map(|k| (u[2 * k], u[2 * k + 1])).collect();
                let jets = chain.jets(y, &st, len);
                for k in 0..=order {
                    du[2 * k] = u[2 * k + 1];
                    du[2 * k + 1] = jets[k].derivative_value(2);
                }
            },
            (grid.y[jbar], 0.0),
            &init,
            SOLVE_TOL,
            &grid.y[..jbar],
        )?;
        for (y, st) in traj.ys.iter().zip(&traj.states) {
            let i = grid.y.partition_point(|&v| v < *y);
            for k in 1..=order {
                states[k][i] = (st[2 * k], st[2 * k + 1]);
            }
        }
    }

    // rows 0..=4 from the chain jets
    let len = 2 * order + 5;
    let mut terms_hat = vec![vec![vec![zero; n]; 5]; order + 1];
    let mut forcing = vec![vec![zero; n]; order + 1];
    for i in 0..n {
        let st: Vec<(C64, C64)> = states.iter().map(|lv| lv[i]).collect();
        let jets = chain.jets(grid.y[i], &st, len);
        for k in 0..=order {
            for r in 0..5 {
                terms_hat[k][r][i] = jets[k].derivative_value(r);
            }
            if k > 0 {
                forcing[k][i] = chain.forcing(&jets[k - 1]);
            }
        }
    }
    for r in 0..2 {
        terms_hat[0][r] = base.values[r].clone();
    }

    let u = crate::rayleigh::profile_samples(p, &grid, 3);
    let cc = shifted_c(s, op);
    let mut defect = vec![zero; n];
    let mut magnitude = vec![0.0; n];
    for k in 0..=order {
        let d2 = grid.differentiate(&terms_hat[k][1]);
        let f = s.nu.powi(k as i32);
        for i in 0..n {
            let lap = d2[i] - a2 * terms_hat[k][0][i];
            let ray = match op {
                Operator::Original => (u[0][i] - cc) * lap - u[2][i] * terms_hat[k][0][i],
                Operator::Adjoint => (u[0][i] - cc) * lap + 2.0 * u[1][i] * terms_hat[k][1][i],
            };
            defect[i] += f * (ray - forcing[k][i]);
            let t = &terms_hat[k];
            let parts = (u[0][i] - cc).norm() * (d2[i].norm() + a2 * t[0][i].norm())
                + 2.0 * u[1][i].abs() * t[1][i].norm()
                + u[2][i].abs() * t[0][i].norm();
            magnitude[i] += f * (parts + forcing[k][i].norm());
        }
    }
    let last = n - 1;
    let interior = || grid.node_indices().filter(|&i| i > 0 && i < last);
    let identity_defect = interior().map(|i| defect[i].norm()).fold(0.0, f64::max);
    let identity_scale = interior().map(|i| magnitude[i]).fold(0.0, f64::max);
    let ybar = grid.y[jbar];
    Ok(SlowExpansion { params: *s, operator: op, order, sign, grid, terms_hat, ybar, series, identity_defect, identity_scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::make_profile;
    use crate::rayleigh::default_grid;

    fn setup(nu: f64) -> (ShearProfile, SpectralParams) {
        (make_profile("cubic_exp", &[1.0, 0.25]).unwrap(), SpectralParams::viscous(1.0, C64::new(0.3, 0.15), nu, 10.0))
    }

    #[test]
    fn jet_solution_of_exponential() {
        // psi'' = psi: Taylor coefficients of e^y
        let n = 7;
        let s = solve_jet(&Jet::constant(C64::new(1.0, 0.0), n), &Jet::zero(n), &Jet::zero(n), C64::new(1.0, 0.0), C64::new(1.0, 0.0));
        for k in 0..n {
            assert!((s.derivative_value(k) - 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn base_term_and_identity() {
        let (p, s) = setup(1e-3);
        let g = default_grid(&p, 1.0);
        for op in [Operator::Adjoint, Operator::Original] {
            for sign in [Kind::Decaying, Kind::Growing] {
                let e = slow_mode_expansion(&p, &s, 2, sign, op, g.clone()).unwrap();
                let f = fundamental_solution_on(&p, &s, sign, op, Method::Integration, g.clone()).unwrap();
                assert_eq!(e.terms_hat[0][0], f.values[0]);
                assert!(e.identity_defect < 1e-6 * e.identity_scale, "{op:?} {sign:?} {} vs {}", e.identity_defect, e.identity_scale);
            }
        }
    }

    #[test]
    fn terms_scale_with_nu() {
        let (p, s) = setup(1e-3);
        let g = default_grid(&p, 1.0);
        let ratio = |nu: f64| {
            let e = slow_mode_expansion(&p, &s.with_nu(nu), 1, Kind::Decaying, Operator::Adjoint, g.clone()).unwrap();
            Grid::sup_norm(&e.term(1).rows[0]) / Grid::sup_norm(&e.term(0).rows[0]) / nu
        };
        let (r3, r4) = (ratio(1e-3), ratio(1e-4));
        assert!((r3 / r4 - 1.0).abs() < 1e-6);
    }
}
