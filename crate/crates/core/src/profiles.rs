//! Shear profiles `U_s(y)` on the half line and their hypotheses.
//!
//! Every family exposes exact derivatives of arbitrary order, which the
//! Taylor-jet and WKB code relies on.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Result, StabilityError};

/// Default truncation point of the half line.
pub const DEFAULT_Y_MAX: f64 = 30.0;
/// Number of uniform points used by [`validate_assumptions`].
pub const VALIDATION_POINTS: usize = 2001;
/// Highest derivative order precomputed for the tanh family.
const TANH_MAX_ORDER: usize = 32;

#[derive(Debug, Clone)]
enum Family {
    /// `u_inf (1 - e^{-y/delta})^p`
    CubicExp { delta: f64, power: u32 },
    /// `u_inf tanh(y/delta)^p`; `terms[k]` lists `(coef, a, b)` with
    /// `d^k/dy^k tanh^p = sum coef t^a q^b / delta^k`, `q = sech^2`.
    TanhCubed { delta: f64, terms: Vec<Vec<(f64, i32, i32)>> },
    Table(QuinticSpline),
    Uniform,
}

/// A parallel shear flow together with the data the theory needs.
#[derive(Debug, Clone)]
pub struct ShearProfile {
    pub name: String,
    pub u_inf: f64,
    pub eta0: f64,
    pub y_max: f64,
    family: Family,
}

impl ShearProfile {
    /// Constant flow `U_s = value`; useful for closed-form checks.
    pub fn uniform(value: f64) -> Self {
        ShearProfile {
            name: "uniform".into(),
            u_inf: value,
            eta0: 1.0,
            y_max: DEFAULT_Y_MAX,
            family: Family::Uniform,
        }
    }

    pub fn with_y_max(mut self, y_max: f64) -> Self {
        self.y_max = y_max;
        self
    }

    pub fn u(&self, y: f64) -> f64 {
        self.deriv(y, 0)
    }
    pub fn u1(&self, y: f64) -> f64 {
        self.deriv(y, 1)
    }
    pub fn u2(&self, y: f64) -> f64 {
        self.deriv(y, 2)
    }
    pub fn u3(&self, y: f64) -> f64 {
        self.deriv(y, 3)
    }
    pub fn u4(&self, y: f64) -> f64 {
        self.deriv(y, 4)
    }

    /// `k`-th derivative of the velocity at `y`.
    pub fn deriv(&self, y: f64, k: usize) -> f64 {
        match &self.family {
            Family::Uniform => {
                if k == 0 {
                    self.u_inf
                } else {
                    0.0
                }
            }
            Family::CubicExp { delta, power } => cubic_exp_deriv(self.u_inf, *delta, *power, y, k),
            Family::TanhCubed { delta, terms } => {
                if k >= terms.len() {
                    return f64::NAN;
                }
                let x = y / delta;
                let t = x.tanh();
                let q = 1.0 / x.cosh().powi(2);
                let s: f64 = terms[k]
                    .iter()
                    .map(|&(coef, a, b)| coef * t.powi(a) * q.powi(b))
                    .sum();
                self.u_inf * s / delta.powi(k as i32)
            }
            Family::Table(spline) => spline.eval(y, k),
        }
    }

    /// Derivatives `U^{(0..=n)}(y)`.
    pub fn derivatives(&self, y: f64, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n + 1];
        self.derivatives_into(y, &mut out);
        out
    }

    /// Fills `out[k] = U^{(k)}(y)`, sharing the exponential between orders.
    pub fn derivatives_into(&self, y: f64, out: &mut [f64]) {
        match &self.family {
            Family::CubicExp { delta, power } => {
                let s = (-y / delta).exp();
                let mut sm = [0.0; 13];
                let mut acc = 1.0;
                for m in 1..=*power as usize {
                    acc *= s;
                    sm[m] = acc;
                }
                for (k, slot) in out.iter_mut().enumerate() {
                    *slot = if k == 0 {
                        self.u_inf * (-(-y / delta).exp_m1()).powi(*power as i32)
                    } else if y == 0.0 && k < *power as usize {
                        0.0
                    } else {
                        let mut v = 0.0;
                        for m in 1..=*power {
                            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                            v += binomial(*power, m) * sign * (-(m as f64) / delta).powi(k as i32) * sm[m as usize];
                        }
                        self.u_inf * v
                    };
                }
            }
            _ => {
                for (k, slot) in out.iter_mut().enumerate() {
                    *slot = self.deriv(y, k);
                }
            }
        }
    }

    /// Taylor coefficients `U^{(k)}(y)/k!` for `k = 0..=n`.
    pub fn taylor(&self, y: f64, n: usize) -> Vec<f64> {
        let mut fact = 1.0;
        (0..=n)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                self.deriv(y, k) / fact
            })
            .collect()
    }

    /// Smallest grid point beyond which `|U^{(k)}| <= tol` for `k = 1..=4`.
    pub fn far_field_start(&self, tol: f64) -> f64 {
        let n = 3000;
        let h = self.y_max / n as f64;
        let mut start = self.y_max;
        for i in (0..=n).rev() {
            let y = i as f64 * h;
            if (1..=4).any(|k| self.deriv(y, k).abs() > tol) {
                break;
            }
            start = y;
        }
        start
    }

    /// Largest derivative order with a nonzero closed form (tables are quintic).
    pub fn max_smooth_order(&self) -> usize {
        match self.family {
            Family::Table(_) => 5,
            Family::TanhCubed { .. } => TANH_MAX_ORDER,
            _ => usize::MAX,
        }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn cubic_exp_deriv(u_inf: f64, delta: f64, power: u32, y: f64, k: usize) -> f64 {
    if k == 0 {
        return u_inf * (-(-y / delta).exp_m1()).powi(power as i32);
    }
    if y == 0.0 && (k as u32) < power {
        return 0.0;
    }
    let s = (-y / delta).exp();
    let mut acc = 0.0;
    for m in 1..=power {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        acc += binomial(power, m) * sign * (-(m as f64) / delta).powi(k as i32) * s.powi(m as i32);
    }
    u_inf * acc
}

fn tanh_terms(power: i32, max_order: usize) -> Vec<Vec<(f64, i32, i32)>> {
    let mut out = vec![vec![(1.0, power, 0)]];
    for _ in 0..max_order {
        let prev = out.last().unwrap();
        let mut next: Vec<(f64, i32, i32)> = Vec::new();
        let mut push = |c: f64, a: i32, b: i32| {
            if c == 0.0 {
                return;
            }
            match next.iter_mut().find(|t| t.1 == a && t.2 == b) {
                Some(t) => t.0 += c,
                None => next.push((c, a, b)),
            }
        };
        // d(t^a q^b) = a t^{a-1} q^{b+1} - 2b t^{a+1} q^b
        for &(c, a, b) in prev {
            if a > 0 {
                push(c * a as f64, a - 1, b + 1);
            }
            if b > 0 {
                push(-2.0 * c * b as f64, a + 1, b);
            }
        }
        next.retain(|t| t.0 != 0.0);
        out.push(next);
    }
    out
}

/// Interpolating quintic spline with `s' = s'' = 0` at both ends.
#[derive(Debug, Clone)]
pub struct QuinticSpline {
    knots: Vec<f64>,
    /// Monomial coefficients per interval in the local variable `t = y - knot`.
    coefs: Vec<[f64; 6]>,
}

impl QuinticSpline {
    pub fn new(ys: &[f64], us: &[f64]) -> Result<Self> {
        let n = ys.len() - 1;
        if n < 1 || ys.windows(2).any(|w| w[1] <= w[0]) {
            return Err(StabilityError::InvalidParams(
                "table abscissae must be strictly increasing with at least two entries".into(),
            ));
        }
        let dim = 6 * n;
        let mut a = nalgebra::DMatrix::<f64>::zeros(dim, dim);
        let mut b = nalgebra::DVector::<f64>::zeros(dim);
        let mut row = 0;
        // derivative `d` of t^j at t
        let dpow = |j: usize, d: usize, t: f64| -> f64 {
            if d > j {
                return 0.0;
            }
            let mut c = 1.0;
            for i in 0..d {
                c *= (j - i) as f64;
            }
            c * t.powi((j - d) as i32)
        };
        for i in 0..n {
            let h = ys[i + 1] - ys[i];
            for j in 0..6 {
                a[(row, 6 * i + j)] = dpow(j, 0, 0.0);
                a[(row + 1, 6 * i + j)] = dpow(j, 0, h);
            }
            b[row] = us[i];
            b[row + 1] = us[i + 1];
            row += 2;
            if i + 1 < n {
                for d in 1..=4 {
                    for j in 0..6 {
                        a[(row, 6 * i + j)] = dpow(j, d, h);
                        a[(row, 6 * (i + 1) + j)] = -dpow(j, d, 0.0);
                    }
                    row += 1;
                }
            }
        }
        let hl = ys[n] - ys[n - 1];
        for d in 1..=2 {
            for j in 0..6 {
                a[(row, j)] = dpow(j, d, 0.0);
                a[(row + 1, 6 * (n - 1) + j)] = dpow(j, d, hl);
            }
            row += 2;
        }
        debug_assert_eq!(row, dim);
        let sol = a
            .lu()
            .solve(&b)
            .ok_or_else(|| StabilityError::InvalidParams("spline system is singular".into()))?;
        let coefs = (0..n)
            .map(|i| {
                let mut c = [0.0; 6];
                c.copy_from_slice(&sol.as_slice()[6 * i..6 * i + 6]);
                c
            })
            .collect();
        Ok(QuinticSpline { knots: ys.to_vec(), coefs })
    }

    pub fn eval(&self, y: f64, k: usize) -> f64 {
        let n = self.coefs.len();
        let last = self.knots[n];
        if y >= last {
            return if k == 0 {
                let c = &self.coefs[n - 1];
                let h = last - self.knots[n - 1];
                (0..6).map(|j| c[j] * h.powi(j as i32)).sum()
            } else {
                0.0
            };
        }
        let i = match self.knots.partition_point(|&kn| kn <= y) {
            0 => 0,
            p => (p - 1).min(n - 1),
        };
        let t = y - self.knots[i];
        let c = &self.coefs[i];
        let mut acc = 0.0;
        for j in k..6 {
            let mut f = 1.0;
            for m in 0..k {
                f *= (j - m) as f64;
            }
            acc += c[j] * f * t.powi((j - k) as i32);
        }
        acc
    }
}

/// Builds a profile, enforcing `u(0) = u'(0) = u''(0) = 0`.
///
/// Parameters by family:
/// * `cubic_exp`: `[u_inf, delta = 1, power = 3]`
/// * `tanh_cubed`: `[u_inf, delta = 1, power = 3]`
/// * `custom_table`: interleaved pairs `[y0, u0, y1, u1, ...]` with `y0 = u0 = 0`
pub fn make_profile(name: &str, params: &[f64]) -> Result<ShearProfile> {
    let p = build_profile(name, params)?;
    let scale = p.u_inf.abs().max(1.0);
    for k in 0..=2 {
        let v = p.deriv(0.0, k);
        if v.abs() > 1e-14 * scale {
            return Err(StabilityError::InvalidParams(format!(
                "derivative {k} at the wall is {v:e}, expected 0"
            )));
        }
    }
    Ok(p)
}

/// Like [`make_profile`] but skips the wall conditions, so that
/// `profile-validate` can report on them instead of refusing.
pub fn build_profile(name: &str, params: &[f64]) -> Result<ShearProfile> {
    if params.iter().any(|v| !v.is_finite()) {
        return Err(StabilityError::InvalidParams("nonfinite parameter".into()));
    }
    let get = |i: usize, default: f64| params.get(i).copied().unwrap_or(default);
    match name {
        "cubic_exp" | "tanh_cubed" => {
            if params.len() > 3 {
                return Err(StabilityError::InvalidParams(format!(
                    "{name} takes at most 3 parameters"
                )));
            }
            let u_inf = get(0, 1.0);
            let delta = get(1, 1.0);
            let power = get(2, 3.0);
            if u_inf == 0.0 || delta <= 0.0 {
                return Err(StabilityError::InvalidParams(
                    "need u_inf != 0 and delta > 0".into(),
                ));
            }
            if power < 1.0 || power.fract() != 0.0 || power > 12.0 {
                return Err(StabilityError::InvalidParams(
                    "power must be an integer in 1..=12".into(),
                ));
            }
            let (family, eta0) = if name == "cubic_exp" {
                (Family::CubicExp { delta, power: power as u32 }, 1.0 / delta)
            } else {
                let terms = tanh_terms(power as i32, TANH_MAX_ORDER);
                (Family::TanhCubed { delta, terms }, 2.0 / delta)
            };
            Ok(ShearProfile { name: name.into(), u_inf, eta0, y_max: DEFAULT_Y_MAX, family })
        }
        "custom_table" => {
            if params.len() < 6 || params.len() % 2 != 0 {
                return Err(StabilityError::InvalidParams(
                    "custom_table needs at least three (y, u) pairs".into(),
                ));
            }
            let ys: Vec<f64> = params.iter().step_by(2).copied().collect();
            let us: Vec<f64> = params.iter().skip(1).step_by(2).copied().collect();
            if ys[0] != 0.0 {
                return Err(StabilityError::InvalidParams("table must start at y = 0".into()));
            }
            let spline = QuinticSpline::new(&ys, &us)?;
            let u_inf = *us.last().unwrap();
            let y_max = DEFAULT_Y_MAX.max(*ys.last().unwrap());
            Ok(ShearProfile { name: name.into(), u_inf, eta0: 1.0, y_max, family: Family::Table(spline) })
        }
        other => Err(StabilityError::UnknownFamily(other.into())),
    }
}

/// Wavenumber, phase speed, viscosity and Navier exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralParams {
    pub alpha: f64,
    pub c: C64,
    pub nu: f64,
    pub gamma: f64,
}

impl SpectralParams {
    pub fn inviscid(alpha: f64, c: C64) -> Self {
        SpectralParams { alpha, c, nu: 0.0, gamma: 0.0 }
    }

    pub fn viscous(alpha: f64, c: C64, nu: f64, gamma: f64) -> Self {
        SpectralParams { alpha, c, nu, gamma }
    }

    pub fn with_c(self, c: C64) -> Self {
        SpectralParams { c, ..self }
    }

    pub fn with_nu(self, nu: f64) -> Self {
        SpectralParams { nu, ..self }
    }

    pub fn check(&self) -> Result<()> {
        if self.alpha == 0.0 || self.alpha.fract() != 0.0 {
            return Err(StabilityError::InvalidArgument(format!(
                "alpha must be a nonzero integer, got {}",
                self.alpha
            )));
        }
        if !(self.nu >= 0.0) || !self.c.re.is_finite() || !self.c.im.is_finite() {
            return Err(StabilityError::InvalidArgument("bad c or nu".into()));
        }
        Ok(())
    }

    /// Viscous operations need `nu > 0` and `alpha` well below `nu^{-1/2}`.
    pub fn check_viscous(&self) -> Result<()> {
        self.check()?;
        if self.nu <= 0.0 {
            return Err(StabilityError::InvalidArgument("viscous operation with nu <= 0".into()));
        }
        if self.alpha.abs() > self.nu.powf(-0.45) {
            return Err(StabilityError::InvalidArgument(format!(
                "|alpha| = {} exceeds nu^(-0.45)",
                self.alpha.abs()
            )));
        }
        Ok(())
    }

    /// `nu / (i alpha)`
    pub fn visc_factor(&self) -> C64 {
        C64::new(0.0, -self.nu / self.alpha)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub eta0_declared: f64,
    pub eta0_fit: f64,
    pub inf_u_minus_c: f64,
    /// `max_y |U^{(k)}(y)| e^{eta0 y}` for `k = 1..=4`
    pub decay_constants: [f64; 4],
    pub checks: Vec<AssumptionCheck>,
    pub pass: bool,
}

/// Least-squares slope of `log|u'|` over the points of `[2, y_max]` where
/// `u'` is representable.
fn fit_decay_rate(p: &ShearProfile) -> f64 {
    let n = VALIDATION_POINTS;
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let y = 2.0 + (p.y_max - 2.0) * i as f64 / (n - 1) as f64;
        let v = p.u1(y).abs();
        if v < 1e-290 || !v.is_finite() {
            continue;
        }
        let l = v.ln();
        sx += y;
        sy += l;
        sxx += y * y;
        sxy += y * l;
        m += 1.0;
    }
    if m < 2.0 {
        return f64::INFINITY;
    }
    -(m * sxy - sx * sy) / (m * sxx - sx * sx)
}

/// Checks the wall conditions, exponential decay and the critical-layer
/// exclusion for a given phase speed. Failures are reported, not raised.
pub fn validate_assumptions(p: &ShearProfile, s: &SpectralParams) -> ValidationReport {
    let n = VALIDATION_POINTS;
    let ys: Vec<f64> = (0..n).map(|i| p.y_max * i as f64 / (n - 1) as f64).collect();
    let scale = p.u_inf.abs().max(1.0);
    let mut checks = Vec::new();

    let wall: Vec<f64> = (0..=2).map(|k| p.deriv(0.0, k)).collect();
    let bad: Vec<String> = wall
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > 1e-14 * scale)
        .map(|(k, v)| format!("u{k}(0) = {v:e}"))
        .collect();
    checks.push(AssumptionCheck {
        name: "vanishing_at_wall".into(),
        pass: bad.is_empty(),
        detail: if bad.is_empty() { "u, u1, u2 vanish at y = 0".into() } else { bad.join(", ") },
    });

    let mut decay_constants = [0.0; 4];
    for (k, slot) in decay_constants.iter_mut().enumerate() {
        *slot = ys
            .iter()
            .map(|&y| p.deriv(y, k + 1).abs() * (p.eta0 * y).exp())
            .fold(0.0, f64::max);
    }
    let eta0_fit = fit_decay_rate(p);
    let finite = decay_constants.iter().all(|c| c.is_finite());
    let rate_ok = eta0_fit >= 0.9 * p.eta0;
    checks.push(AssumptionCheck {
        name: "exponential_decay".into(),
        pass: finite && rate_ok,
        detail: format!("fitted eta0 = {eta0_fit:.6}, declared {}", p.eta0),
    });

    let tail_start = (0.8 * n as f64) as usize;
    let tail: Vec<f64> = ys[tail_start..].iter().map(|&y| p.u1(y)).collect();
    let monotone = tail.iter().all(|&d| d >= 0.0) || tail.iter().all(|&d| d <= 0.0);
    let u_end = p.u(p.y_max);
    let bounded = ys.iter().all(|&y| p.u(y).is_finite());
    let limit_ok = (u_end - p.u_inf).abs() <= 1e-8 * scale;
    checks.push(AssumptionCheck {
        name: "monotone_limit".into(),
        pass: monotone && bounded && limit_ok,
        detail: format!("u(y_max) = {u_end:.15}, u_inf = {}", p.u_inf),
    });

    let inf_u_minus_c = ys.iter().map(|&y| (C64::new(p.u(y), 0.0) - s.c).norm()).fold(f64::INFINITY, f64::min);
    let (umin, umax) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
        let u = p.u(y);
        (lo.min(u), hi.max(u.max(p.u_inf)))
    });
    let crosses = s.c.im == 0.0 && s.c.re >= umin && s.c.re <= umax;
    checks.push(AssumptionCheck {
        name: "no_critical_layer".into(),
        pass: !crosses && inf_u_minus_c > 1e-12,
        detail: format!("inf |U - c| = {inf_u_minus_c:e}"),
    });

    let pass = checks.iter().all(|c| c.pass);
    ValidationReport { eta0_declared: p.eta0, eta0_fit, inf_u_minus_c, decay_constants, checks, pass }
}

/// Pointwise coefficients of the Rayleigh and Orr-Sommerfeld operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorCoeffs {
    pub u_minus_c: C64,
    pub u_minus_cbar: C64,
    pub u1: f64,
    pub u2: f64,
    /// `nu / (i alpha)`
    pub visc: C64,
}

pub fn eval_operator_coeffs(p: &ShearProfile, s: &SpectralParams, y: f64) -> Result<OperatorCoeffs> {
    if !(0.0..=p.y_max).contains(&y) {
        return Err(StabilityError::OutOfDomain { y, y_max: p.y_max });
    }
    let u = p.u(y);
    Ok(OperatorCoeffs {
        u_minus_c: u - s.c,
        u_minus_cbar: u - s.c.conj(),
        u1: p.u1(y),
        u2: p.u2(y),
        visc: s.visc_factor(),
    })
}
