//! Property tests for structural invariants.

use proptest::prelude::*;
use shearstab::jet::Jet;
use shearstab::odecore::{annulus_radii, convolution_exp, lemma_exp_bound, newton_root, winding_number, Contour, ExpBoundCase};
use shearstab::orrsommerfeld::mu_at;
use shearstab::profiles::{make_profile, SpectralParams};
use shearstab::rayleigh::{
    build_green, fundamental_solution, green_apply, wronskian, GreenKind, Kind, Method, Operator,
};
use shearstab::C64;

fn thin() -> shearstab::profiles::ShearProfile {
    make_profile("cubic_exp", &[1.0, 0.25]).unwrap()
}

proptest! {
    #[test]
    fn cubic_exp_is_monotone_and_bounded(u_inf in 0.5f64..2.0, delta in 0.2f64..2.0, y in 0.0f64..20.0) {
        let p = make_profile("cubic_exp", &[u_inf, delta]).unwrap();
        let u = p.u(y);
        prop_assert!((0.0..=u_inf).contains(&u));
        prop_assert!(p.u1(y) >= 0.0);
        let h = 1e-5;
        let fd = (p.u(y + h) - p.u((y - h).max(0.0))) / (y + h - (y - h).max(0.0));
        prop_assert!((fd - p.u1(y)).abs() < 1e-6 * (1.0 + p.u1(y).abs()));
        for k in 0..=2 {
            prop_assert!(p.deriv(0.0, k).abs() < 1e-14);
        }
    }

    #[test]
    fn adjoint_fast_exponent_is_conjugate(u in 0.0f64..1.0, re in 0.0f64..1.0, im in 0.01f64..0.5, e in 2.0f64..6.0) {
        let s = SpectralParams::viscous(1.0, C64::new(re, im), 10f64.powf(-e), 10.0);
        let a = mu_at(u, &s, Operator::Adjoint).unwrap();
        let o = mu_at(u, &s, Operator::Original).unwrap();
        prop_assert!((a - o.conj()).norm() <= 1e-12 * a.norm());
        prop_assert!(a.re > 0.0);
    }

    #[test]
    fn jet_division_by_itself_is_one(coefs in prop::collection::vec(-2.0f64..2.0, 2..8), c0 in 0.5f64..3.0) {
        let mut v = coefs;
        v[0] = c0;
        let j = Jet::from_real(&v);
        let q = j.div(&j);
        prop_assert!((q.value() - 1.0).norm() < 1e-12);
        for k in 1..q.len() {
            prop_assert!(q.0[k].norm() < 1e-10);
        }
    }

    #[test]
    fn winding_counts_enclosed_roots(roots in prop::collection::vec((0.0f64..std::f64::consts::TAU, 0.0f64..2.0), 1..5)) {
        let roots: Vec<C64> = roots.iter().map(|&(t, r)| C64::from_polar(r, t)).filter(|z| (z.norm() - 1.0).abs() > 0.1).collect();
        let inside = roots.iter().filter(|z| z.norm() < 1.0).count() as i32;
        let f = |z: C64| roots.iter().fold(C64::new(1.0, 0.0), |acc, r| acc * (z - r));
        let n = winding_number(f, &Contour::new(C64::new(0.0, 0.0), 1.0, 128).unwrap()).unwrap();
        prop_assert_eq!(n, inside);
    }

    #[test]
    fn newton_finds_quadratic_roots(re in -1.0f64..1.0, im in -1.0f64..1.0) {
        let r = C64::new(re, im);
        let f = |z: C64| (z - r) * (z + r + 3.0);
        let out = newton_root(f, r + C64::new(0.05, -0.03), 1e-13).unwrap();
        prop_assert!((out.root - r).norm() < 1e-10);
    }

    #[test]
    fn annulus_brackets_the_unperturbed_radius(g in 1e-8f64..1.0, a in 0.1f64..10.0, kappa in 1u32..4, eps in 0.05f64..0.9) {
        let (r_in, r_out) = annulus_radii(g, a, kappa, eps);
        let r = (g / a).powf(1.0 / kappa as f64);
        prop_assert!(r_in < r && r < r_out);
        prop_assert!((r_in.powi(kappa as i32) * a / g - (1.0 - eps)).abs() < 1e-12);
    }

    #[test]
    fn non_resonant_exp_bound_holds(alpha in 0.5f64..3.0, t2 in -0.9f64..3.0, t1 in 0.0f64..1.0, y in 0.0f64..30.0) {
        let eta2 = alpha * t2;
        prop_assume!((eta2 - alpha).abs() > 1e-3 * alpha);
        let eta1 = eta2.min(alpha) - t1 * alpha;
        let (bound, case) = lemma_exp_bound(alpha, eta1, eta2).unwrap();
        prop_assert!(case != ExpBoundCase::Resonant);
        let v = (eta1 * y).exp() * convolution_exp(alpha, eta2, y).unwrap();
        prop_assert!(v <= bound * (1.0 + 1e-10), "{} > {}", v, bound);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn wronskian_constant_for_any_upper_c(re in 0.0f64..1.0, im in 0.05f64..0.5, adjoint in any::<bool>()) {
        let p = thin();
        let s = SpectralParams::inviscid(1.0, C64::new(re, im));
        let op = if adjoint { Operator::Adjoint } else { Operator::Original };
        let m = fundamental_solution(&p, &s, Kind::Decaying, op, Method::Integration).unwrap();
        let g = fundamental_solution(&p, &s, Kind::Growing, op, Method::Integration).unwrap();
        let w = wronskian(&p, &m, &g).unwrap();
        prop_assert!(w.defect_on(&m.grid.y, 25.0) < 1e-7);
    }

    #[test]
    fn green_application_is_linear(re in 0.0f64..1.0, im in 0.1f64..0.5, lre in -2.0f64..2.0, lim in -2.0f64..2.0) {
        let p = thin();
        let s = SpectralParams::inviscid(1.0, C64::new(re, im));
        let g = build_green(&p, &s, GreenKind::Interior, Operator::Original).unwrap();
        let y = g.grid().y.clone();
        let lam = C64::new(lre, lim);
        let a: Vec<C64> = y.iter().map(|&x| C64::new((-x).exp(), 0.0)).collect();
        let b: Vec<C64> = y.iter().map(|&x| C64::new(0.0, x * (-2.0 * x).exp())).collect();
        let ab: Vec<C64> = a.iter().zip(&b).map(|(u, v)| u + lam * v).collect();
        let (fa, fb, fab) = (green_apply(&p, &g, &a).unwrap(), green_apply(&p, &g, &b).unwrap(), green_apply(&p, &g, &ab).unwrap());
        let scale = fab.f.rows[0].iter().map(|v| v.norm()).fold(1e-300, f64::max);
        for j in 0..y.len() {
            let d = fab.f.rows[0][j] - fa.f.rows[0][j] - lam * fb.f.rows[0][j];
            prop_assert!(d.norm() < 1e-10 * scale);
        }
    }
}
