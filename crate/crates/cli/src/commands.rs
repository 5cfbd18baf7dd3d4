//! The subcommands. Each returns results, checks and tables; writing and
//! exit codes are handled by the dispatcher.

use std::time::Instant;

use num_complex::Complex64 as C64;
use serde_json::{json, Map, Value};
use shearstab::odecore::{integrate_system, newton_root, quadrature, winding_number, Contour, Grid, Mesh};
use shearstab::orrsommerfeld::{
    apply_operator_viscous, eigenmode_pairing, evans_scan, fast_grid, find_viscous_eigenvalue, mu_at, track_eigenvalues,
    viscous_image_test, DerivativeSource,
};
use shearstab::profiles::{eval_operator_coeffs, make_profile, validate_assumptions, ShearProfile, SpectralParams};
use shearstab::rayleigh::{
    apply_operator, build_green_on, default_grid, eigenmode, estimate_kappa, find_adjoint_eigenvalue, find_eigenvalue,
    fundamental_solution, green_apply, image_test, GreenKind, Kind, MeshFunction, Method, Operator,
};
use shearstab::viscgreen::{build_approx_green, correct_and_bc, verify_green, BoundaryCondition};
use shearstab::StabilityError;

use crate::config::RunConfig;
use crate::output::{complex, Check, RunReport, Table, Timing};

#[derive(Default)]
pub struct Outcome {
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub timings: Vec<Timing>,
}

impl Outcome {
    fn put(&mut self, key: &str, v: Value) {
        self.results.insert(key.into(), v);
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.push(Timing { stage: stage.into(), seconds: t.elapsed().as_secs_f64() });
        out
    }
}

type CmdResult = Result<Outcome, StabilityError>;

fn op_name(op: Operator) -> &'static str {
    match op {
        Operator::Original => "original",
        Operator::Adjoint => "adjoint",
    }
}

fn grid_for(cfg: &RunConfig, p: &ShearProfile) -> Result<std::sync::Arc<Grid>, StabilityError> {
    match cfg.mesh {
        Some(m) => Ok(std::sync::Arc::new(Grid::new(Mesh::geometric(p.y_max, m.h0, m.ratio, m.h_max)?))),
        None => Ok(default_grid(p, cfg.alpha)),
    }
}

fn strict_profile(cfg: &RunConfig) -> Result<ShearProfile, StabilityError> {
    cfg.profile(false).map_err(|e| StabilityError::InvalidParams(e.to_string()))
}

/// `d^k/dy^k [P(y) e^{-y}]` for a polynomial with coefficients `poly`.
fn poly_exp(poly: &[f64], y: f64, k: usize) -> f64 {
    let dp = |j: usize| -> f64 {
        poly.iter()
            .enumerate()
            .skip(j)
            .map(|(n, a)| a * ((n - j + 1)..=n).product::<usize>() as f64 * y.powi((n - j) as i32))
            .sum()
    };
    let mut binom = 1.0;
    let mut out = 0.0;
    for j in 0..=k {
        let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
        out += binom * dp(j) * sign;
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    out * (-y).exp()
}

pub fn profile_validate(cfg: &RunConfig) -> CmdResult {
    let mut o = Outcome::default();
    let p = cfg.profile(true).map_err(|e| StabilityError::InvalidParams(e.to_string()))?;
    let s = SpectralParams::inviscid(cfg.alpha, cfg.c_or(C64::new(0.5, 0.2)));
    let r = o.timed("validate", || validate_assumptions(&p, &s));
    o.put("eta0_declared", json!(r.eta0_declared));
    o.put("eta0_fit", json!(r.eta0_fit));
    o.put("inf_u_minus_c", json!(r.inf_u_minus_c));
    o.put("decay_constants", json!(r.decay_constants));
    for c in &r.checks {
        o.checks.push(Check::flag(&c.name, c.pass, c.detail.clone()));
    }
    let mut t = Table::new("profile", &["y", "u", "u1", "u2", "u3", "u4"]);
    let n = 301;
    for i in 0..n {
        let y = p.y_max * i as f64 / (n - 1) as f64;
        let d = p.derivatives(y, 4);
        t.push_f64(&[y, d[0], d[1], d[2], d[3], d[4]]);
    }
    o.tables.push(t);
    Ok(o)
}

pub fn rayleigh_eig(cfg: &RunConfig) -> CmdResult {
    let mut o = Outcome::default();
    let p = strict_profile(cfg)?;
    let contour = cfg.search_contour().map_err(|e| StabilityError::InvalidArgument(e.to_string()))?;
    let e = o.timed("eigenvalue", || find_eigenvalue(&p, cfg.alpha, &contour))?;
    let ea = o.timed("adjoint_eigenvalue", || find_adjoint_eigenvalue(&p, cfg.alpha, &contour))?;
    let k = o.timed("kappa", || estimate_kappa(&p, cfg.alpha, e.c0))?;
    o.put("c0", complex(e.c0));
    o.put("c0_adjoint", complex(ea.c0));
    o.put("count", json!(e.count));
    o.put("trace_residual", json!(e.residual));
    o.put("kappa", json!(k.kappa));
    o.put("leading_coeff", complex(k.leading_coeff));
    o.put("kappa_slope", json!(k.slope));
    let tol = &cfg.tolerances;
    o.checks.push(Check::below("eigenvalue_agreement", (e.c0 - ea.c0).norm(), tol.eigenvalue_agreement));
    o.checks.push(Check::below("kappa_fit", k.fit_quality, tol.kappa_fit));

    let s0 = SpectralParams::inviscid(cfg.alpha, e.c0);
    let grid = grid_for(cfg, &p)?;
    let phi = o.timed("eigenmode", || eigenmode(&p, &s0, grid.clone()))?;
    o.put("eigenmode_wall_value", complex(phi.values[0][0]));
    o.put("eigenmode_equation_residual", json!(phi.equation_residual(&p)));
    let mut t = Table::new("eigenmode", &["y", "re_phi", "im_phi", "re_dphi", "im_dphi", "re_ddphi", "im_ddphi"]);
    for j in 0..grid.len() {
        let v = |r: usize| phi.values[r][j];
        t.push_f64(&[grid.y[j], v(0).re, v(0).im, v(1).re, v(1).im, v(2).re, v(2).im]);
    }
    o.tables.push(t);
    Ok(o)
}

/// Test functions for the Green-function check, as `y -> psi(y)`.
fn green_test_functions() -> Vec<(&'static str, fn(f64) -> C64)> {
    vec![
        ("exp", |x| C64::new((-x).exp(), 0.0)),
        ("x_exp2", |x| C64::new(x * (-2.0 * x).exp(), 0.0)),
        ("i_exp_sin3", |x| C64::new(0.0, (-x).exp() * (3.0 * x).sin())),
        ("rational", |x| C64::new(1.0, 1.0) / (1.0 + x * x).powi(2)),
        ("sech2", |x| C64::new(1.0 / (x - 3.0).cosh().powi(2), 0.0)),
    ]
}

pub fn rayleigh_green_verify(cfg: &RunConfig) -> CmdResult {
    let mut o = Outcome::default();
    let p = strict_profile(cfg)?;
    let s = SpectralParams::inviscid(cfg.alpha, cfg.c_or(C64::new(0.5, 0.2)));
    let grid = grid_for(cfg, &p)?;
    let tol = cfg.tolerances.inviscid_green_residual;
    let mut sups = Map::new();
    for op in [Operator::Original, Operator::Adjoint] {
        let g = o.timed(&format!("build_{}", op_name(op)), || build_green_on(&p, &s, GreenKind::Interior, op, grid.clone()))?;
        let mut worst = 0.0f64;
        for (name, f) in green_test_functions() {
            let psi: Vec<C64> = grid.y.iter().map(|&y| f(y)).collect();
            let app = green_apply(&p, &g, &psi)?;
            worst = worst.max(app.residual_sup);
            o.checks.push(Check::below(&format!("residual_{}_{name}", op_name(op)), app.residual_sup, tol));
        }
        sups.insert(op_name(op).into(), json!(worst));
        if op == Operator::Original {
            let mut t = Table::new("green_slice", &["x", "re_g", "im_g", "re_dyg", "im_dyg"]);
            for (x, v, d) in g.slice(cfg.green.y0) {
                t.push_f64(&[x, v.re, v.im, d.re, d.im]);
            }
            o.tables.push(t);
        }
    }
    o.put("c", complex(s.c));
    o.put("y0", json!(grid.y[grid.nearest(cfg.green.y0)]));
    o.put("residual_sup", Value::Object(sups));
    Ok(o)
}

pub fn os_evans_scan(cfg: &RunConfig) -> CmdResult {
    let mut o = Outcome::default();
    let p = strict_profile(cfg)?;
    let sc = &cfg.scan;
    let s = SpectralParams::viscous(cfg.alpha, C64::new(sc.re[0], sc.im[0]), cfg.nu, cfg.gamma);
    s.check_viscous()?;
    let op: Operator = sc.operator.into();
    let samples =
        o.timed("scan", || evans_scan(&p, &s, (sc.re[0], sc.re[1]), (sc.im[0], sc.im[1]), (sc.n_re, sc.n_im), op));
    let mut t = Table::new("evans_scan", &["re_c", "im_c", "re_e", "im_e", "abs_e"]);
    let mut failed = Vec::new();
    let mut best: Option<(C64, f64)> = None;
    for (c, r) in &samples {
        match r {
            Ok(e) => {
                let v = e.regularized;
                t.push_f64(&[c.re, c.im, v.re, v.im, v.norm()]);
                if best.map_or(true, |(_, b)| v.norm() < b) {
                    best = Some((*c, v.norm()));
                }
            }
            Err(err) => {
                t.push_f64(&[c.re, c.im, f64::NAN, f64::NAN, f64::NAN]);
                failed.push(format!("{c}: {err}"));
            }
        }
    }
    o.tables.push(t);
    o.put("operator", json!(op_name(op)));
    o.put("nu", json!(cfg.nu));
    o.put("points", json!(samples.len()));
    o.put("failed", json!(failed.len()));
    if let Some((c, v)) = best {
        o.put("min_abs_e", json!(v));
        o.put("argmin_c", complex(c));
    }
    let detail = failed.first().cloned().unwrap_or_else(|| format!("{} points", samples.len()));
    o.checks.push(Check::flag("all_points_evaluated", failed.is_empty(), detail));
    Ok(o)
}

pub fn os_track(cfg: &RunConfig) -> CmdResult {
    let mut o = Outcome::default();
    let p = strict_profile(cfg)?;
    let contour = cfg.search_contour().map_err(|e| StabilityError::InvalidArgument(e.to_string()))?;
    let c0 = match cfg.c {
        Some(_) => cfg.c_or(C64::new(0.0, 0.0)),
        None => o.timed("rayleigh_eigenvalue", || find_eigenvalue(&p, cfg.alpha, &contour))?.c0,
    };
    let nus = cfg.nu_grid.values();
    let tr = o.timed("track_adjoint", || track_eigenvalues(&p, cfg.alpha, c0, &nus, cfg.gamma, Operator::Adjoint))?;
    let target = 1.0 / (2.0 * tr.kappa as f64);
    o.put("c0", complex(c0));
    o.put("kappa", json!(tr.kappa));
    o.put("fitted_rate", json!(tr.fitted_rate));
    o.put("fitted_prefactor", json!(tr.fitted_prefactor));
    o.put("target_rate", json!(target));
    o.put(
        "o_gamma_over_sqrt_nu",
        json!(tr.samples.iter().map(|s| s.o_gamma.norm() / s.nu.sqrt()).collect::<Vec<_>>()),
    );
    let tol = &cfg.tolerances;
    o.checks.push(Check::below("rate_relative", (tr.fitted_rate - target).abs() / target, tol.rate_relative));
    let bad: Vec<String> = tr
        .samples
        .iter()
        .filter(|s| !s.kappa_check)
        .map(|s| format!("nu = {:e}: {}", s.nu, s.count_error.clone().unwrap_or_else(|| format!("{:?}", s.count))))
        .collect();
    o.checks.push(Check::flag(
        "annulus_count_equals_kappa",
        bad.is_empty(),
        if bad.is_empty() { format!("{} samples", tr.samples.len()) } else { bad.join("; ") },
    ));
    o.checks.push(Check::flag(
        "track_complete",
        tr.truncated.is_none() && tr.samples.len() == nus.len(),
        tr.truncated.clone().unwrap_or_else(|| "all nu reached".into()),
    ));
    if cfg.compare_original {
        let to = o.timed("track_original", || track_eigenvalues(&p, cfg.alpha, c0, &nus, cfg.gamma, Operator::Original))?;
        let diff = tr.samples.iter().zip(&to.samples).map(|(a, b)| (a.c - b.c).norm()).fold(0.0, f64::max);
        let complete = to.samples.len() == tr.samples.len();
        o.put("max_adjoint_original_difference", json!(diff));
        o.checks.push(Check::below("adjoint_original_agreement", if complete { diff } else { f64::INFINITY }, tol.eigenvalue_agreement));
    }
    let mut t = Table::new("track", &["nu", "re_c_nu", "im_c_nu", "abs_gap", "evans_abs", "kappa_check"]);
    for s in &tr.samples {
        t.push_f64(&[s.nu, s.c.re, s.c.im, s.gap, s.evans_abs, if s.kappa_check { 1.0 } else { 0.0 }]);
    }
    o.tables.push(t);
    Ok(o)
}

pub fn os_green_verify(cfg: &RunConfig) -> CmdResult {
    let mut o = Outcome::default();
    let p = strict_profile(cfg)?;
    let s = SpectralParams::viscous(cfg.alpha, cfg.c_or(C64::new(0.5, 0.5)), cfg.nu, cfg.gamma);
    s.check_viscous()?;
    let tol = &cfg.tolerances;
    let g0 = o.timed("approximate", || build_approx_green(&p, &s))?;
    let n = g0.grid().len();
    let jump = (1..=10)
        .map(|q| q * (n - 1) / 11)
        .map(|i| (g0.jump(i) / g0.expected_jump() - 1.0).norm())
        .fold(0.0, f64::max);
    o.checks.push(Check::below("jump_relative", jump, tol.jump_relative));
    let g = o.timed("correct_and_bc", || correct_and_bc(&p, g0, cfg.green.terms, cfg.green.bc))?;
    o.put("c", complex(s.c));
    o.put("term_norms", json!(g.term_norms));
    let ratio = g.term_norms.windows(2).skip(1).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    if g.term_norms.len() > 2 {
        o.checks.push(Check::below("correction_ratio", ratio, tol.correction_ratio));
    }
    let (mut dir, mut nav) = (0.0f64, 0.0f64);
    for i in 0..n {
        let (d, v) = g.boundary_rows(i);
        dir = dir.max(d.norm());
        nav = nav.max(v.norm());
    }
    let scale = g.term_norms[0];
    o.put("boundary_dirichlet_sup", json!(dir));
    o.put("boundary_navier_sup", json!(nav));
    match cfg.green.bc {
        BoundaryCondition::None => {}
        BoundaryCondition::DirichletOnly => o.checks.push(Check::below("dirichlet_row", dir / scale, tol.boundary_residual)),
        BoundaryCondition::FullNavier => {
            o.checks.push(Check::below("dirichlet_row", dir / scale, tol.boundary_residual));
            o.checks.push(Check::below("navier_row", nav / scale, tol.boundary_residual));
        }
    }
    let grid = g.grid().clone();
    let phi: Vec<C64> = grid.y.iter().map(|&y| C64::new(y * y * (-y).exp(), 0.5 * (-2.0 * y).exp() * y)).collect();
    let v = o.timed("verify", || verify_green(&p, &g, &phi))?;
    o.put("verify_residual_sup", json!(v.residual_sup));
    o.put("theta0", json!(v.envelopes.iter().map(|e| e.theta0).collect::<Vec<_>>()));
    o.checks.push(Check::below("operator_residual", v.residual_sup / v.phi_sup, tol.viscous_green_residual));

    let col = g.y_cols.iter().enumerate().min_by(|a, b| {
        (grid.y[*a.1] - cfg.green.y0).abs().total_cmp(&(grid.y[*b.1] - cfg.green.y0).abs())
    });
    let col = col.map(|(k, _)| k).unwrap_or(0);
    o.put("y0", json!(grid.y[g.y_cols[col]]));
    let mut t = Table::new("os_green_slice", &["x", "re_g", "im_g", "re_dyg", "im_dyg"]);
    for i in 0..n {
        let (v, d) = (g.value(i, col, 0), g.value(i, col, 1));
        t.push_f64(&[grid.y[i], v.re, v.im, d.re, d.im]);
    }
    o.tables.push(t);
    Ok(o)
}

pub fn image_test_cmd(cfg: &RunConfig) -> CmdResult {
    let mut o = Outcome::default();
    let p = strict_profile(cfg)?;
    let tol = cfg.tolerances.image_membership;
    let contour = cfg.search_contour().map_err(|e| StabilityError::InvalidArgument(e.to_string()))?;
    let c0 = o.timed("rayleigh_eigenvalue", || find_eigenvalue(&p, cfg.alpha, &contour))?.c0;
    let s0 = SpectralParams::inviscid(cfg.alpha, c0);
    let grid = grid_for(cfg, &p)?;
    o.put("c0", complex(c0));

    let w = MeshFunction::from_fn(grid.clone(), 3, |y, k| C64::new(poly_exp(&[0.0, 0.0, 1.0], y, k), 0.0));
    for op in [Operator::Adjoint, Operator::Original] {
        let psi = MeshFunction { grid: grid.clone(), rows: vec![apply_operator(&p, &s0, op, &w)] };
        let r = image_test(&p, &s0, &psi, op)?;
        o.put(&format!("inviscid_image_{}", op_name(op)), json!(r.ratio));
        o.checks.push(Check::below(&format!("inviscid_image_element_{}", op_name(op)), r.ratio, tol));
    }
    let phi = eigenmode(&p, &s0, grid.clone())?;
    let psi = MeshFunction { grid: grid.clone(), rows: vec![phi.values[0].iter().map(|v| v.conj()).collect()] };
    let r = image_test(&p, &s0, &psi, Operator::Original)?;
    let weighted: Vec<f64> = (0..grid.len()).map(|j| phi.values[0][j].norm_sqr() / (p.u(grid.y[j]) - c0).norm_sqr()).collect();
    let bound = c0.im * grid.integrate_real(&weighted);
    o.put("inviscid_pairing", complex(r.integral));
    o.put("inviscid_lower_bound", json!(bound));
    o.checks.push(Check {
        name: "inviscid_non_member".into(),
        pass: bound > 0.0 && r.integral.norm() >= bound * (1.0 - 1e-9),
        value: Some(r.integral.norm()),
        tolerance: Some(bound),
        detail: format!("|pairing| = {:.6e} >= {bound:.6e}", r.integral.norm()),
    });

    let seed = SpectralParams::viscous(cfg.alpha, c0, cfg.nu, cfg.gamma);
    seed.check_viscous()?;
    let ev = o.timed("viscous_eigenvalue", || find_viscous_eigenvalue(&p, &seed, Operator::Original))?;
    let s = seed.with_c(ev.c);
    let vgrid = fast_grid(&p, &s)?;
    o.put("c_nu", complex(ev.c));
    let pr = o.timed("pairing", || eigenmode_pairing(&p, &s, vgrid.clone()))?;
    o.put("viscous_pairing", complex(pr.pairing));
    o.put("viscous_lower_bound", json!(pr.lower_bound));
    o.put("viscous_weighted_norm", json!(pr.weighted_norm));
    o.put("viscous_defect", json!(pr.defect));
    let floor = pr.lower_bound.max(0.0);
    o.checks.push(Check {
        name: "viscous_non_member".into(),
        pass: pr.pairing.norm() > floor,
        value: Some(pr.pairing.norm()),
        tolerance: Some(floor),
        detail: format!("|pairing| = {:.6e}, runtime lower bound {:.6e}", pr.pairing.norm(), pr.lower_bound),
    });
    // w(0) = 0 and w'(0) = nu^gamma w''(0)
    let ng = s.nu.powf(s.gamma);
    let poly = [0.0, 2.0 * ng / (1.0 + 2.0 * ng), 1.0];
    let w = MeshFunction::from_fn(vgrid.clone(), 5, |y, k| C64::new(poly_exp(&poly, y, k), 0.0));
    let psi = apply_operator_viscous(&p, &s, Operator::Adjoint, &w, DerivativeSource::ClosedForm)?.values;
    let r = viscous_image_test(&p, &s, &psi, vgrid)?;
    o.put("viscous_image_adjoint", json!(r.ratio));
    o.checks.push(Check::below("viscous_image_element_adjoint", r.ratio, tol));
    Ok(o)
}

/// The closed-form examples, each as one check.
pub fn selftest(_cfg: &RunConfig) -> CmdResult {
    let mut o = Outcome::default();
    let mut checks = Vec::new();
    let mut push = |name: &str, err: f64, tol: f64| checks.push(Check::below(name, err, tol));
    let cubic = make_profile("cubic_exp", &[1.0])?;
    push("cubic_exp_wall_derivatives", (0..=2).map(|k| cubic.deriv(0.0, k).abs()).fold(0.0, f64::max), 1e-15);
    push("cubic_exp_far_field", (cubic.u(30.0) - 1.0).abs(), 1e-12);

    let c = C64::new(0.5, 0.2);
    let r = validate_assumptions(&cubic, &SpectralParams::inviscid(1.0, c));
    let excluded = r.pass && r.inf_u_minus_c >= 0.2 - 1e-12;
    let r = validate_assumptions(&cubic, &SpectralParams::inviscid(1.0, C64::new(0.5, 0.0)));
    let detected = r.checks.iter().any(|c| c.name == "no_critical_layer" && !c.pass);

    let k = eval_operator_coeffs(&cubic, &SpectralParams::inviscid(1.0, c), 0.0)?;
    push("coeff_u_minus_c", (k.u_minus_c - C64::new(-0.5, -0.2)).norm(), 1e-15);
    push("coeff_u_minus_cbar", (k.u_minus_cbar - C64::new(-0.5, 0.2)).norm(), 1e-15);
    let vf = SpectralParams::viscous(2.0, c, 1e-3, 10.0).visc_factor();
    push("viscous_factor", (vf - C64::new(0.0, -5e-4)).norm(), 1e-18);

    let e30 = (-30.0f64).exp();
    let t = integrate_system(
        |_, u, du| {
            du[0] = u[1];
            du[1] = u[0];
        },
        (30.0, 0.0),
        &[C64::new(e30, 0.0), C64::new(-e30, 0.0)],
        1e-10,
        &[0.0],
    )?;
    push("backward_exponential", (t.states[0][0] - 1.0).norm(), 1e-8);

    let mesh = Mesh::geometric(30.0, 0.01, 1.1, 0.5)?;
    let v = quadrature(|x| C64::new((-x).exp(), 0.0), &mesh)?;
    push("quadrature_exp", (v - 1.0).norm(), 1e-10);
    let v = quadrature(|x| C64::new((-(x - 5.0f64).abs()).exp(), 0.0), &mesh.with_node(5.0))?;
    push("quadrature_abs_kernel", (v.re - (2.0 - (-5.0f64).exp())).abs(), 1e-10);

    let c0 = C64::new(0.3, 0.1);
    let n = winding_number(|z| (z - c0) * (z - c0), &Contour::new(c0, 0.1, 64)?)?;
    let winding = n == 2;
    let r = newton_root(|z| z * z + 1.0, C64::new(0.5, 0.8), 1e-14)?;
    push("newton_square_root", (r.root - C64::i()).norm(), 1e-12);

    let y = 1.0;
    let u = cubic.u(y);
    let s = SpectralParams::viscous(1.0, C64::new(u, 0.1), 0.01, 10.0);
    let mu = mu_at(u, &s, Operator::Adjoint)?;
    push("mu_star_real", (mu - C64::new(11f64.sqrt(), 0.0)).norm(), 1e-12);

    let zero = ShearProfile::uniform(0.0);
    let s = SpectralParams::inviscid(1.0, C64::new(0.3, 0.2));
    let f = fundamental_solution(&zero, &s, Kind::Decaying, Operator::Original, Method::Integration)?;
    let err = f.grid.y.iter().zip(&f.values[0]).map(|(&y, v)| (v - (-y).exp()).norm()).fold(0.0, f64::max);
    push("uniform_flow_decaying_solution", err, 1e-8);

    let mut t = Table::new("scan", &["a"]);
    for i in 0..41 * 41 {
        t.push_f64(&[i as f64]);
    }
    let lines = t.to_csv().lines().count();
    let empty = RunReport {
        command: "selftest".into(),
        version: String::new(),
        inputs: Value::Null,
        results: Map::new(),
        checks: Vec::new(),
        pass: true,
        timings: Vec::new(),
    };
    let back: Value = serde_json::from_str(&crate::output::to_json_string(&empty)).unwrap_or(Value::Null);
    let empty_ok = back["results"].as_object().is_some_and(|m| m.is_empty());
    o.checks = checks;
    o.checks.push(Check::flag("critical_layer_excluded", excluded, "c = 0.5+0.2i"));
    o.checks.push(Check::flag("critical_layer_detected", detected, "c = 0.5"));
    o.checks.push(Check::flag("winding_double_zero", winding, format!("count {n}")));
    o.checks.push(Check::flag("scan_csv_lines", lines == 1682, format!("{lines} lines for 41x41")));
    o.checks.push(Check::flag("empty_results_object", empty_ok, "results: {}"));
    Ok(o)
}
