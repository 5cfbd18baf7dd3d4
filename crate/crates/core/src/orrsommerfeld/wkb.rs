use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::visc_sign;
use crate::jet::Jet;
use crate::odecore::Grid;
use crate::profiles::{ShearProfile, SpectralParams};
use crate::rayleigh::{shifted_c, Kind, Operator};
use crate::{Result, StabilityError};

/// Polynomial in `eps = sqrt(nu)` whose coefficients are jets in `y`.
#[derive(Clone)]
struct EpsSeries(Vec<Jet>);

impl EpsSeries {
    fn zero(order: usize, len: usize) -> Self {
        EpsSeries(vec![Jet::zero(len); order + 1])
    }

    fn constant(j: Jet, order: usize) -> Self {
        let len = j.len();
        let mut s = EpsSeries::zero(order, len);
        s.0[0] = j;
        s
    }

    fn mul(&self, o: &EpsSeries) -> EpsSeries {
        let n = self.0.len();
        let mut out = EpsSeries::zero(n - 1, self.0[0].len());
        for i in 0..n {
            for k in 0..n - i {
                out.0[i + k] = &out.0[i + k] + &(&self.0[i] * &o.0[k]);
            }
        }
        out
    }

    fn add(&self, o: &EpsSeries) -> EpsSeries {
        EpsSeries(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    fn scale(&self, s: C64) -> EpsSeries {
        EpsSeries(self.0.iter().map(|a| a.scale(s)).collect())
    }

    fn deriv(&self) -> EpsSeries {
        EpsSeries(self.0.iter().map(|a| a.deriv()).collect())
    }

    /// Multiplication by `eps^m`.
    fn shift(&self, m: usize) -> EpsSeries {
        let n = self.0.len();
        let len = self.0[0].len();
        let mut out = EpsSeries::zero(n - 1, len);
        for k in m..n {
            out.0[k] = self.0[k - m].clone();
        }
        out
    }

    fn add_const(&self, v: C64) -> EpsSeries {
        let mut out = self.clone();
        out.0[0] = out.0[0].add_const(v);
        out
    }
}

/// `nu Op(e^{theta/eps}) / e^{theta/eps}` as a series in `eps`, with `T = theta'`:
/// `a (T^2 + eps T' - lam) + eps b1 T + eps^2 b0
///  + (sigma/(i alpha)) [(T^2 - lam)^2 + eps (6 T^2 T' - 2 lam T') + eps^2 (4 T T'' + 3 T'^2) + eps^3 T''']`.
fn wkb_defect(t: &EpsSeries, co: &Coeffs, order: usize) -> EpsSeries {
    let t1 = t.deriv();
    let t2 = t1.deriv();
    let t3 = t2.deriv();
    let tt = t.mul(t);
    let tl = tt.add_const(-co.lam);
    let a = EpsSeries::constant(co.a.clone(), order);
    let b1 = EpsSeries::constant(co.b1.clone(), order);
    let b0 = EpsSeries::constant(co.b0.clone(), order);
    let mut f = a.mul(&tl.add(&t1.shift(1)));
    f = f.add(&b1.mul(t).shift(1)).add(&b0.shift(2));
    let visc = tl
        .mul(&tl)
        .add(&tt.scale(C64::new(6.0, 0.0)).add_const(-2.0 * co.lam).mul(&t1).shift(1))
        .add(&t.mul(&t2).scale(C64::new(4.0, 0.0)).add(&t1.mul(&t1).scale(C64::new(3.0, 0.0))).shift(2))
        .add(&t3.shift(3));
    f.add(&visc.scale(co.visc))
}

struct Coeffs {
    /// `U - c` or `U - conj c`
    a: Jet,
    /// coefficient of `phi'`: `2 U'` (adjoint) or 0
    b1: Jet,
    /// coefficient of `phi`: `-U''` (original) or 0
    b0: Jet,
    lam: C64,
    /// `sigma / (i alpha)`
    visc: C64,
}

fn coeffs(p: &ShearProfile, s: &SpectralParams, op: Operator, y: f64, len: usize) -> Coeffs {
    let u = Jet::from_real(&p.taylor(y, len - 1));
    let a = u.add_const(-shifted_c(s, op));
    let up = u.deriv();
    let (b1, b0) = match op {
        Operator::Adjoint => (up.scale(C64::new(2.0, 0.0)), Jet::zero(len)),
        Operator::Original => (Jet::zero(len), up.deriv().scale(C64::new(-1.0, 0.0))),
    };
    Coeffs {
        a,
        b1,
        b0,
        lam: C64::new(s.nu * s.alpha * s.alpha, 0.0),
        visc: visc_sign(op) / (C64::i() * s.alpha),
    }
}

/// WKB fast mode `exp(theta/sqrt(nu))`, `theta' = sum_{j <= 2N} theta'_j nu^{j/2}`.
#[derive(Debug, Clone, Serialize)]
pub struct WkbExpansion {
    pub params: SpectralParams,
    pub operator: Operator,
    pub order: usize,
    /// `Decaying` is the `-` mode, `Growing` the `+` mode
    pub sign: Kind,
    #[serde(skip)]
    pub grid: Arc<Grid>,
    /// `theta_prime[j][i] = theta'_j(y_i)`
    pub theta_prime: Vec<Vec<C64>>,
    /// `log phi = theta / sqrt(nu)`, with `phi(0) = 1`
    pub log_phi: Vec<C64>,
    /// `phi^{(k)} / phi` for `k = 1..=4`
    pub ratios: [Vec<C64>; 4],
    /// `Op(phi) / phi` in closed form
    pub residual_ratio: Vec<C64>,
    /// `theta'_1` from the first-order formula written in terms of
    /// `theta'_0, theta''_0` (adjoint only)
    pub theta1_printed: Option<Vec<C64>>,
}

impl WkbExpansion {
    /// `phi` on the grid (may overflow for the growing mode).
    pub fn values(&self) -> Vec<C64> {
        self.log_phi.iter().map(|l| l.exp()).collect()
    }

    /// `phi^{(k)}` for `k = 0..=4`, scaled by `exp(-shift)`.
    pub fn rows_scaled(&self, shift: f64) -> Vec<Vec<C64>> {
        let base: Vec<C64> = self.log_phi.iter().map(|l| (l - shift).exp()).collect();
        let mut rows = vec![base.clone()];
        for r in &self.ratios {
            rows.push(r.iter().zip(&base).map(|(a, b)| a * b).collect());
        }
        rows
    }

    /// `sup |Op phi| / sup |phi|`, evaluated in log scale.
    pub fn relative_residual(&self) -> f64 {
        let m = self.log_phi.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        self.residual_ratio
            .iter()
            .zip(&self.log_phi)
            .map(|(r, l)| r.norm() * (l.re - m).exp())
            .fold(0.0, f64::max)
    }
}

/// Builds the fast mode by matching powers of `sqrt(nu)`: `theta'_0` solves
/// the quadratic leading balance, and each further `theta'_k` is the
/// `nu^{k/2}` coefficient of the defect divided by the linearization
/// `-Q'(theta'_0)`. All `y`-derivatives are carried as exact jets.
pub fn wkb_fast_mode(p: &ShearProfile, s: &SpectralParams, order: usize, sign: Kind, op: Operator, grid: Arc<Grid>) -> Result<WkbExpansion> {
    s.check_viscous()?;
    let k_max = 2 * order;
    let len = k_max + 5;
    let eps = s.nu.sqrt();
    let sg = if sign == Kind::Decaying { -1.0 } else { 1.0 };
    let n = grid.len();
    let mut theta_prime = vec![vec![C64::new(0.0, 0.0); n]; k_max + 1];
    let mut total = vec![Jet::zero(len); n];
    let mut printed = vec![C64::new(0.0, 0.0); n];
    let mut residual_ratio = vec![C64::new(0.0, 0.0); n];
    let mut ratios: [Vec<C64>; 4] = Default::default();
    for r in ratios.iter_mut() {
        r.resize(n, C64::new(0.0, 0.0));
    }
    let a2 = s.alpha * s.alpha;
    for (i, &y) in grid.y.iter().enumerate() {
        let co = coeffs(p, s, op, y, len);
        // leading balance: a + visc (T0^2 - lam) = 0
        let rad = co.a.scale(-1.0 / co.visc).add_const(co.lam);
        if !(rad.value().re > 0.0) {
            return Err(StabilityError::InvalidArgument(format!(
                "leading WKB radicand {} has nonpositive real part at y = {y}",
                rad.value()
            )));
        }
        let t0 = rad.sqrt_with(sg * rad.value().sqrt());
        let dq = &co.a.scale(C64::new(2.0, 0.0)) * &t0;
        let dq = &dq + &(&t0.scale(4.0 * co.visc) * &(&t0 * &t0).add_const(-co.lam));
        let dq_inv = dq.recip();
        let mut t = EpsSeries::zero(k_max, len);
        t.0[0] = t0.clone();
        for k in 1..=k_max {
            let f = wkb_defect(&t, &co, k_max);
            t.0[k] = (&f.0[k] * &dq_inv).scale(C64::new(-1.0, 0.0));
        }
        let mut sum = Jet::zero(len);
        let mut ek = 1.0;
        for k in 0..=k_max {
            theta_prime[k][i] = t.0[k].value();
            sum = &sum + &t.0[k].scale(C64::new(ek, 0.0));
            ek *= eps;
        }
        // phi^{(m)}/phi from r1 = theta'/eps, r_{m+1} = r_m' + r1 r_m
        let r1 = sum.scale(C64::new(1.0 / eps, 0.0));
        let mut r = r1.clone();
        for m in 0..4 {
            ratios[m][i] = r.value();
            if m < 3 {
                r = &r.deriv() + &(&r1 * &r);
            }
        }
        let [q1, q2, _, q4] = [ratios[0][i], ratios[1][i], ratios[2][i], ratios[3][i]];
        residual_ratio[i] = co.a.value() * (q2 - a2)
            + co.b1.value() * q1
            + co.b0.value()
            + co.visc * s.nu * (q4 - 2.0 * a2 * q2 + a2 * a2);
        if op == Operator::Adjoint {
            let (th0, th0d) = (t0.value(), t0.derivative_value(1));
            let ia = C64::i() * s.alpha;
            let up = p.u1(y);
            let num = -ia * up * th0 + ia * co.a.value() * th0d - 6.0 * th0 * th0d - 2.0 * co.lam * th0d;
            printed[i] = -num / (2.0 * ia * co.a.value());
        }
        total[i] = sum;
    }
    let tv: Vec<C64> = total.iter().map(|j| j.value()).collect();
    let log_phi: Vec<C64> = grid.cumulative(&tv).into_iter().map(|v| v / eps).collect();
    Ok(WkbExpansion {
        params: *s,
        operator: op,
        order,
        sign,
        grid,
        theta_prime,
        log_phi,
        ratios,
        residual_ratio,
        theta1_printed: (op == Operator::Adjoint).then_some(printed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orrsommerfeld::{fast_grid, mu_at};
    use crate::profiles::make_profile;

    fn setup(nu: f64) -> (ShearProfile, SpectralParams) {
        (make_profile("cubic_exp", &[1.0, 0.25]).unwrap(), SpectralParams::viscous(1.0, C64::new(0.25, 0.1), nu, 10.0))
    }

    #[test]
    fn leading_order_is_mu_star() {
        let (p, s) = setup(1e-4);
        let g = fast_grid(&p, &s).unwrap();
        let w = wkb_fast_mode(&p, &s, 1, Kind::Decaying, Operator::Adjoint, g.clone()).unwrap();
        for (i, &y) in g.y.iter().enumerate() {
            let mu = mu_at(p.u(y), &s, Operator::Adjoint).unwrap();
            assert!((w.theta_prime[0][i] / (-s.nu.sqrt()) - mu).norm() < 1e-12 * mu.norm());
        }
        assert!((w.log_phi[0]).norm() == 0.0);
    }

    #[test]
    fn first_order_sum() {
        let (p, s) = setup(1e-3);
        let g = fast_grid(&p, &s).unwrap();
        let m = wkb_fast_mode(&p, &s, 1, Kind::Decaying, Operator::Adjoint, g.clone()).unwrap();
        let pl = wkb_fast_mode(&p, &s, 1, Kind::Growing, Operator::Adjoint, g.clone()).unwrap();
        let pm = m.theta1_printed.as_ref().unwrap();
        let pp = pl.theta1_printed.as_ref().unwrap();
        for (i, &y) in g.y.iter().enumerate() {
            let target = -3.0 * p.u1(y) / (p.u(y) - s.c.conj());
            assert!((pm[i] + pp[i] - target).norm() < 1e-10);
        }
    }

    #[test]
    fn residual_decreases_deep_in_the_asymptotic_regime() {
        let res = |n: usize, nu: f64| {
            let (p, s) = setup(nu);
            let g = fast_grid(&p, &s).unwrap();
            wkb_fast_mode(&p, &s, n, Kind::Decaying, Operator::Adjoint, g).unwrap().relative_residual()
        };
        for n in 0..3 {
            assert!(res(n, 1e-8) < res(n, 1e-7));
        }
        assert!(res(2, 1e-8) < 1e-2 * res(0, 1e-8));
    }
}
