use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::mu_at;
use crate::odecore::{integrate_with_hook, Grid, StepOptions};
use crate::profiles::{ShearProfile, SpectralParams};
use crate::rayleigh::Operator;
use crate::{Result, StabilityError};

/// Relative tolerance of the viscous integrations.
pub const EXACT_TOL: f64 = 1e-11;
/// Derivatives of the profile below this are treated as zero past `y_far`.
const FAR_TOL: f64 = 1e-13;

/// The two decaying solutions of `Orr` or `Orr*`.
///
/// `slow` is normalized like the inviscid decaying solution
/// (`e^{-|alpha| y}` in the far field, up to an admixture of the fast
/// solution); `fast` has `fast(0) = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct ExactDecaying {
    pub params: SpectralParams,
    pub operator: Operator,
    /// far-field fast rate
    pub mu_inf: C64,
    /// start of the constant-coefficient region
    pub y_far: f64,
    pub slow_wall: [C64; 4],
    pub fast_wall: [C64; 4],
    #[serde(skip)]
    pub grid: Option<Arc<Grid>>,
    /// `slow[k][i]`: `k`-th derivative at node `i` (`k <= 3`)
    #[serde(skip)]
    pub slow: Vec<Vec<C64>>,
    #[serde(skip)]
    pub fast: Vec<Vec<C64>>,
    pub steps: usize,
}

/// `phi''''` from `phi..phi'''` and the profile derivatives `d = (U, U', U'')`.
pub(crate) fn fourth(op: Operator, s: &SpectralParams, d: &[f64; 3], f: [C64; 4]) -> C64 {
    let a2 = s.alpha * s.alpha;
    let lap = f[2] - a2 * f[0];
    let k = C64::i() * s.alpha / s.nu;
    let base = 2.0 * a2 * f[2] - a2 * a2 * f[0];
    match op {
        Operator::Adjoint => base - k * ((d[0] - s.c.conj()) * lap + 2.0 * d[1] * f[1]),
        Operator::Original => base + k * ((d[0] - s.c) * lap - d[2] * f[0]),
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

struct Sweep {
    lam: f64,
    mu_inf: C64,
    y_far: f64,
    /// per hook call: `(r, beta, q)`
    factors: Vec<(f64, C64, f64)>,
    /// initial log norms of the seeds `(slow, fast)`
    log0: (f64, f64),
    /// `(y, hook count, state)` of every recorded output
    outputs: Vec<(f64, usize, Vec<C64>)>,
    steps: usize,
    /// normalized seeds at `y_far`
    init: Vec<C64>,
}

/// Backward integration from `y_far` to 0 in the scaled variables
/// `z_k = phi^{(k)} / lam^k`. After every step the fast solution is
/// renormalized and removed from the slow one (Gram-Schmidt), so that the
/// slow solution is not swamped; the removed multiples are reconciled
/// afterwards so the slow output is a single exact solution.
fn sweep(p: &ShearProfile, s: &SpectralParams, op: Operator, outputs: &[f64]) -> Result<Sweep> {
    s.check_viscous()?;
    let mu_inf = mu_at(p.u_inf, s, op)?;
    let lam = mu_inf.norm().max(1.0);
    let a = s.alpha.abs();
    let y_far = p.far_field_start(FAR_TOL).min(p.y_max);
    let e = (-a * y_far).exp();
    let mut init = vec![C64::new(0.0, 0.0); 8];
    for k in 0..4 {
        init[k] = C64::new(e * (-a / lam).powi(k as i32), 0.0);
        init[4 + k] = (-mu_inf / lam).powi(k as i32);
    }
    let (ns, nf) = (norm(&init[..4]), norm(&init[4..]));
    for k in 0..4 {
        init[k] /= ns;
        init[4 + k] /= nf;
    }
    let mut factors = Vec::new();
    let mut hooks = 0usize;
    let mut recorded: Vec<usize> = Vec::new();
    let inside: Vec<f64> = outputs.iter().copied().filter(|&y| y <= y_far).collect();
    let n_initial = inside.iter().filter(|&&y| (y - y_far).abs() <= 1e-14 * y_far.max(1.0)).count().min(1);
    recorded.extend(std::iter::repeat(0).take(n_initial));
    let traj = integrate_with_hook(
        |y, u, du| {
            let mut d = [0.0; 3];
            p.derivatives_into(y, &mut d);
            for base in [0, 4] {
                let f = [u[base], lam * u[base + 1], lam * lam * u[base + 2], lam.powi(3) * u[base + 3]];
                du[base] = lam * u[base + 1];
                du[base + 1] = lam * u[base + 2];
                du[base + 2] = lam * u[base + 3];
                du[base + 3] = fourth(op, s, &d, f) / lam.powi(3);
            }
        },
        (y_far, 0.0),
        &init.clone(),
        EXACT_TOL,
        &inside,
        StepOptions::default(),
        |_, u, at_output| {
            let r = norm(&u[4..]);
            for v in &mut u[4..] {
                *v /= r;
            }
            let beta = dot(&u[4..], &u[..4]);
            for k in 0..4 {
                let fk = u[4 + k];
                u[k] -= beta * fk;
            }
            let q = norm(&u[..4]);
            for v in &mut u[..4] {
                *v /= q;
            }
            factors.push((r, beta, q));
            hooks += 1;
            if at_output {
                recorded.push(hooks);
            }
        },
    )?;
    if traj.states.len() != recorded.len() {
        return Err(StabilityError::Mismatch("output bookkeeping".into()));
    }
    let outputs = traj.ys.iter().zip(recorded).zip(traj.states).map(|((&y, m), st)| (y, m, st)).collect();
    Ok(Sweep { lam, mu_inf, y_far, factors, log0: (ns.ln(), nf.ln()), outputs, steps: traj.steps, init })
}

impl Sweep {
    /// `C_m` for `m = 0..=M` (`C_M = 0`, `C_{m-1} = (C_m q_m + beta_m) / r_m`).
    fn admixture(&self) -> Vec<C64> {
        let m = self.factors.len();
        let mut c = vec![C64::new(0.0, 0.0); m + 1];
        for k in (1..=m).rev() {
            let (r, beta, q) = self.factors[k - 1];
            c[k - 1] = (c[k] * q + beta) / r;
        }
        c
    }

    /// Cumulative `(log sigma_m, log rho_m)`.
    fn logs(&self) -> Vec<(f64, f64)> {
        let mut out = vec![self.log0];
        for &(r, _, q) in &self.factors {
            let (ls, lr) = *out.last().unwrap();
            out.push((ls + q.ln(), lr + r.ln()));
        }
        out
    }

    fn unscale(&self, z: &[C64]) -> [C64; 4] {
        [z[0], z[1] * self.lam, z[2] * self.lam.powi(2), z[3] * self.lam.powi(3)]
    }
}

/// `(slow, fast)` at the wall: value and first three derivatives.
pub fn exact_wall_traces(p: &ShearProfile, s: &SpectralParams, op: Operator) -> Result<([C64; 4], [C64; 4])> {
    let sw = sweep(p, s, op, &[0.0])?;
    wall_from(&sw)
}

fn wall_from(sw: &Sweep) -> Result<([C64; 4], [C64; 4])> {
    let (_, m, st) = sw.outputs.last().ok_or(StabilityError::NonFinite(0.0))?;
    let logs = sw.logs();
    let (ls, _) = logs[*m];
    let slow = sw.unscale(&st[..4]).map(|v| v * ls.exp());
    let f = sw.unscale(&st[4..]);
    let f0 = f[0];
    if !(f0.norm() > 0.0) {
        return Err(StabilityError::NonFinite(0.0));
    }
    Ok((slow, f.map(|v| v / f0)))
}

/// Both decaying solutions on `grid`.
pub fn exact_decaying(p: &ShearProfile, s: &SpectralParams, op: Operator, grid: Arc<Grid>) -> Result<ExactDecaying> {
    let mut outs = grid.y.clone();
    if outs[0] != 0.0 {
        outs.insert(0, 0.0);
    }
    let sw = sweep(p, s, op, &outs)?;
    let (slow_wall, fast_wall) = wall_from(&sw)?;
    let c = sw.admixture();
    let logs = sw.logs();
    let (_, lr_end) = logs[sw.factors.len()];
    let (_, _, st_end) = sw.outputs.last().unwrap();
    let f_end0 = sw.unscale(&st_end[4..])[0];
    let n = grid.len();
    let zero = C64::new(0.0, 0.0);
    let mut slow = vec![vec![zero; n]; 4];
    let mut fast = vec![vec![zero; n]; 4];
    for (y, m, st) in &sw.outputs {
        let i = grid.y.partition_point(|v| v < y);
        if i >= n || grid.y[i] != *y {
            continue;
        }
        let (ls, lr) = logs[*m];
        let sv = sw.unscale(&st[..4]);
        let fv = sw.unscale(&st[4..]);
        let ffac = (lr - lr_end).exp() / f_end0;
        for k in 0..4 {
            slow[k][i] = ls.exp() * (sv[k] - c[*m] * fv[k]);
            fast[k][i] = fv[k] * ffac;
        }
    }
    // constant-coefficient continuation beyond y_far
    let a = s.alpha.abs();
    let (ls0, lr0) = logs[0];
    let f_seed = sw.unscale(&sw.init[4..]);
    let mu = sw.mu_inf;
    let ffac0 = (lr0 - lr_end).exp() / f_end0;
    for i in 0..n {
        let y = grid.y[i];
        if y <= sw.y_far {
            continue;
        }
        let ef = (-mu * (y - sw.y_far)).exp();
        for k in 0..4 {
            let slow_exp = C64::new((-a).powi(k as i32) * (-a * y).exp(), 0.0);
            let fk = f_seed[0] * ef * (-mu).powi(k as i32);
            slow[k][i] = slow_exp - ls0.exp() * c[0] * fk;
            fast[k][i] = fk * ffac0;
        }
    }
    Ok(ExactDecaying {
        params: *s,
        operator: op,
        mu_inf: sw.mu_inf,
        y_far: sw.y_far,
        slow_wall,
        fast_wall,
        grid: Some(grid),
        slow,
        fast,
        steps: sw.steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orrsommerfeld::fast_grid;
    use crate::profiles::make_profile;

    #[test]
    fn constant_flow_closed_form() {
        let p = ShearProfile::uniform(0.0);
        let s = SpectralParams::viscous(1.0, C64::new(0.2, 0.1), 1e-3, 10.0);
        let (sl, f) = exact_wall_traces(&p, &s, Operator::Adjoint).unwrap();
        let m = mu_at(0.0, &s, Operator::Adjoint).unwrap();
        assert!((sl[1] + 1.0).norm() < 1e-12 && (sl[0] - 1.0).norm() < 1e-12);
        assert!((f[1] + m).norm() < 1e-10 * m.norm());
    }

    #[test]
    fn solutions_satisfy_equation() {
        let p = make_profile("cubic_exp", &[1.0, 0.25]).unwrap();
        let s = SpectralParams::viscous(1.0, C64::new(0.25, 0.1), 1e-4, 10.0);
        let g = fast_grid(&p, &s).unwrap();
        for op in [Operator::Adjoint, Operator::Original] {
            let e = exact_decaying(&p, &s, op, g.clone()).unwrap();
            for rows in [&e.slow, &e.fast] {
                let mut all: Vec<Vec<C64>> = rows.clone();
                let d4: Vec<C64> = (0..g.len())
                    .map(|i| {
                        let d = [p.u(g.y[i]), p.u1(g.y[i]), p.u2(g.y[i])];
                        fourth(op, &s, &d, [all[0][i], all[1][i], all[2][i], all[3][i]])
                    })
                    .collect();
                all.push(d4);
                // the third derivative row should match numerical differentiation of the second
                let num = g.differentiate(&all[2]);
                let scale = Grid::sup_norm(&all[3]);
                let err = (0..g.len()).filter(|&i| g.y[i] < 20.0).map(|i| (num[i] - all[3][i]).norm()).fold(0.0, f64::max);
                assert!(err < 1e-6 * scale, "{op:?} err {err:e} scale {scale:e}");
            }
            let w = exact_wall_traces(&p, &s, op).unwrap();
            assert!((w.0[0] - e.slow[0][0]).norm() < 1e-12 * w.0[0].norm().max(1.0));
            assert!((e.fast[0][0] - 1.0).norm() < 1e-12);
        }
    }
}
