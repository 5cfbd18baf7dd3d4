use shearstab::orrsommerfeld::navier_row;
use shearstab::profiles::{make_profile, ShearProfile, SpectralParams};
use shearstab::viscgreen::{build_approx_green, correct_and_bc, verify_green, BoundaryCondition, GreenStage, ViscousGreen};
use shearstab::C64;

fn profile() -> ShearProfile {
    make_profile("cubic_exp", &[1.0, 0.45]).unwrap()
}

fn green(bc: BoundaryCondition, terms: usize) -> ViscousGreen {
    let p = profile();
    let s = SpectralParams::viscous(1.0, C64::new(0.5, 0.5), 1e-3, 10.0);
    correct_and_bc(&p, build_approx_green(&p, &s).unwrap(), terms, bc).unwrap()
}

fn test_phi(g: &ViscousGreen) -> Vec<C64> {
    g.grid().y.iter().map(|&y| C64::new(y * y * (-y).exp(), 0.5 * y * (-2.0 * y).exp())).collect()
}

#[test]
fn full_navier_green_function() {
    let g = green(BoundaryCondition::FullNavier, 3);
    assert_eq!(g.stage, GreenStage::BoundaryCorrected);
    assert_eq!(g.term_norms.len(), 4);
    for w in g.term_norms.windows(2).skip(1) {
        assert!(w[1] < 0.1 * w[0], "{:?}", g.term_norms);
    }
    let scale = g.term_norms[0];
    for i in 0..g.grid().len() {
        let (d, n) = g.boundary_rows(i);
        assert!(d.norm() < 1e-8 * scale && n.norm() < 1e-8 * scale, "row {i}: {d} {n}");
    }
    let p = profile();
    let phi = test_phi(&g);
    let v = verify_green(&p, &g, &phi).unwrap();
    assert!(v.residual_sup < 1e-3 * v.phi_sup, "{}", v.residual_sup);
    assert!(v.envelopes.iter().all(|e| e.theta0 >= 0.5), "{:?}", v.envelopes);
    assert!(g.navier_functional(&phi).unwrap().norm() < 1e-6);

    let zero = vec![C64::new(0.0, 0.0); phi.len()];
    let v0 = verify_green(&p, &g, &zero).unwrap();
    assert_eq!(v0.residual_sup, 0.0);
}

#[test]
fn dirichlet_only_leaves_navier_row_free() {
    let g = green(BoundaryCondition::DirichletOnly, 2);
    let scale = g.term_norms[0];
    let (mut dir, mut nav) = (0.0f64, 0.0f64);
    for i in 0..g.grid().len() {
        let (d, n) = g.boundary_rows(i);
        dir = dir.max(d.norm());
        nav = nav.max(n.norm());
    }
    assert!(dir < 1e-8 * scale, "{dir}");
    assert!(nav > 1e-6 * scale, "{nav}");
}

#[test]
fn uncorrected_green_misses_the_wall() {
    let g = green(BoundaryCondition::None, 0);
    assert_eq!(g.stage, GreenStage::Approximate);
    let dir = (0..g.grid().len()).map(|i| g.boundary_rows(i).0.norm()).fold(0.0, f64::max);
    assert!(dir > 1e-6 * g.term_norms[0]);
    // the Navier row is linear in the wall data
    let v = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(5.0, 0.0)];
    assert!((navier_row(&v, 1e-2, 1.0) - C64::new(0.98, 0.0)).norm() < 1e-15);
}
