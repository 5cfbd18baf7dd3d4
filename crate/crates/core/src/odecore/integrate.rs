use num_complex::Complex64 as C64;

use crate::error::{Result, StabilityError};

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct StepOptions {
    /// Largest step magnitude allowed.
    pub h_max: f64,
    /// First trial step magnitude; `None` picks one from the span.
    pub h_init: Option<f64>,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions { h_max: f64::INFINITY, h_init: None }
    }
}

/// States recorded at the requested output points, in integration order.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub ys: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    pub steps: usize,
}

/// Integrates `u' = rhs(y, u)` from `span.0` to `span.1` (either direction)
/// and records the state at every point of `outputs` inside the span.
pub fn integrate_system<F>(rhs: F, span: (f64, f64), init: &[C64], tol: f64, outputs: &[f64]) -> Result<Trajectory>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    integrate_with_hook(rhs, span, init, tol, outputs, StepOptions::default(), |_, _, _| {})
}

/// As [`integrate_system`], calling `hook(y, state, at_output)` after every
/// accepted step. The hook may rescale the state (it is linear-system
/// friendly); recorded outputs reflect the state after the hook.
pub fn integrate_with_hook<F, H>(
    mut rhs: F,
    span: (f64, f64),
    init: &[C64],
    tol: f64,
    outputs: &[f64],
    opts: StepOptions,
    mut hook: H,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    H: FnMut(f64, &mut [C64], bool),
{
    if !(1e-13..=1e-6).contains(&tol) {
        return Err(StabilityError::BadTolerance(tol));
    }
    let (ya, yb) = span;
    let dir = if yb >= ya { 1.0 } else { -1.0 };
    let len = (yb - ya).abs();
    let inside = |y: f64| (y - ya) * dir >= -1e-14 * len.max(1.0) && (yb - y) * dir >= -1e-14 * len.max(1.0);
    let mut targets: Vec<f64> = outputs.iter().copied().filter(|&y| inside(y)).collect();
    targets.sort_by(|a, b| (dir * a).partial_cmp(&(dir * b)).unwrap());
    targets.dedup();

    let n = init.len();
    let mut u = init.to_vec();
    let mut y = ya;
    let mut traj = Trajectory { ys: Vec::new(), states: Vec::new(), steps: 0 };
    let mut next_target = 0;
    while next_target < targets.len() && ((targets[next_target] - y) * dir).abs() <= 1e-14 * len.max(1.0) {
        traj.ys.push(targets[next_target]);
        traj.states.push(u.clone());
        next_target += 1;
    }
    if len == 0.0 {
        return Ok(traj);
    }

    let mut k = vec![vec![C64::new(0.0, 0.0); n]; 7];
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    let mut unew = vec![C64::new(0.0, 0.0); n];
    let mut h = opts.h_init.unwrap_or(len / 100.0).min(opts.h_max).min(len);
    rhs(y, &u, &mut k[0]);
    if k[0].iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(StabilityError::NonFinite(y));
    }

    loop {
        let remaining = (yb - y) * dir;
        if remaining <= 1e-14 * len.max(1.0) {
            break;
        }
        let mut stop = yb;
        let mut hits_target = false;
        if next_target < targets.len() {
            stop = targets[next_target];
            hits_target = true;
        }
        let to_stop = (stop - y) * dir;
        let mut step = h.min(opts.h_max);
        let mut clipped = false;
        if step >= to_stop * (1.0 - 1e-12) {
            step = to_stop;
            clipped = true;
        }
        if step < 1e-13 * y.abs().max(1.0) && !clipped {
            return Err(StabilityError::StepUnderflow { y, h: step });
        }
        let hs = dir * step;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = u[i];
                for j in 0..s {
                    if A[s][j] != 0.0 {
                        acc += k[j][i] * (hs * A[s][j]);
                    }
                }
                tmp[i] = acc;
            }
            rhs(y + C[s] * hs, &tmp, &mut k[s]);
        }
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..n {
            let mut acc = u[i];
            let mut e = C64::new(0.0, 0.0);
            for s in 0..7 {
                acc += k[s][i] * (hs * B[s]);
                e += k[s][i] * (hs * E[s]);
            }
            unew[i] = acc;
            err = err.max(e.norm());
            scale = scale.max(u[i].norm()).max(acc.norm());
        }
        if !err.is_finite() || unew.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            if step < 1e-13 * y.abs().max(1.0) {
                return Err(StabilityError::NonFinite(y));
            }
            h = 0.25 * step;
            continue;
        }
        let ratio = if scale > 0.0 { err / (tol * scale) } else { 0.0 };
        if ratio <= 1.0 {
            y = if clipped { stop } else { y + hs };
            std::mem::swap(&mut u, &mut unew);
            traj.steps += 1;
            let at_output = clipped && hits_target;
            hook(y, &mut u, at_output);
            if at_output {
                traj.ys.push(y);
                traj.states.push(u.clone());
                next_target += 1;
            }
            // The hook may rescale the state, so the FSAL stage is recomputed.
            rhs(y, &u, &mut k[0]);
            let fac = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
            h = if clipped { h.max(step * fac).min(5.0 * h) } else { step * fac };
        } else {
            let fac = (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.9);
            h = step * fac;
            if h < 1e-13 * y.abs().max(1.0) {
                return Err(StabilityError::StepUnderflow { y, h });
            }
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backward_exponential() {
        let e30 = (-30.0f64).exp();
        let init = [C64::new(e30, 0.0), C64::new(-e30, 0.0)];
        let t = integrate_system(
            |_, u, du| {
                du[0] = u[1];
                du[1] = u[0];
            },
            (30.0, 0.0),
            &init,
            1e-12,
            &[0.0, 10.0],
        )
        .unwrap();
        assert_eq!(t.ys, vec![10.0, 0.0]);
        assert!((t.states[1][0].re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_rhs_is_constant() {
        let v = [C64::new(1.0, 2.0), C64::new(-3.0, 0.5)];
        let t = integrate_system(|_, _, du| du.fill(C64::new(0.0, 0.0)), (0.0, 5.0), &v, 1e-10, &[1.0, 5.0]).unwrap();
        assert_eq!(t.states[1], v.to_vec());
    }

    #[test]
    fn oscillator_accuracy() {
        let t = integrate_system(
            |_, u, du| {
                du[0] = u[1];
                du[1] = -u[0] * 4.0;
            },
            (0.0, 10.0),
            &[C64::new(0.0, 0.0), C64::new(2.0, 0.0)],
            1e-10,
            &[10.0],
        )
        .unwrap();
        assert!((t.states[0][0].re - (20.0f64).sin()).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let r = integrate_system(|_, _, _| {}, (0.0, 1.0), &[C64::new(1.0, 0.0)], 1e-3, &[]);
        assert!(matches!(r, Err(StabilityError::BadTolerance(_))));
    }
}
