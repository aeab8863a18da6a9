//! Library results checked against independent computations and symmetries.

mod common;

use std::f64::consts::PI;

use common::{gradient_descent, mirror_x1, naive_terms, quarter_turn, rel_err};
use hopfion_core::ansatz::{hopfion_ansatz, AnsatzParams};
use hopfion_core::checkpoint::Checkpoint;
use hopfion_core::diagnostics::{core_curve, hopf_charge, hopf_potential};
use hopfion_core::energy;
use hopfion_core::lattice::LatticeSpec;
use hopfion_core::optimizer::{minimize, OptimizerConfig};
use hopfion_core::Error;

fn unit_hopfion(n: usize, edge: f64) -> (hopfion_core::lattice::DirectorField, hopfion_core::lattice::OneFormField) {
    hopfion_ansatz(&LatticeSpec::with_edge(n, edge).unwrap(), &AnsatzParams::with_charge(1)).unwrap()
}

#[test]
fn ansatz_energy_matches_plain_loops() {
    let (phi, c) = unit_hopfion(20, 6.0);
    let e = energy::evaluate(&phi, &c, 0.7).unwrap();
    let naive = naive_terms(&phi, &c, 0.7);
    assert!(rel_err(e.dirichlet, naive[0]) < 1e-12);
    assert!(rel_err(e.pullback, naive[1]) < 1e-12);
    assert_eq!(e.cross, 0.0);
}

#[test]
fn charge_flips_under_mirror_and_survives_rotations() {
    let (phi, _) = unit_hopfion(48, 6.0);
    let q = hopf_charge(&phi).unwrap();
    assert!((q - 1.0).abs() < 0.05, "{q}");
    let qm = hopf_charge(&mirror_x1(&phi)).unwrap();
    assert!((qm + q).abs() < 1e-9, "{qm} vs {q}");
    let qt = hopf_charge(&quarter_turn(&phi)).unwrap();
    assert!((qt - q).abs() < 1e-9, "{qt} vs {q}");
    // target rotation about the vacuum axis, and one that moves the vacuum
    let (s, c) = 0.7f64.sin_cos();
    let about_vacuum = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
    let tilt = [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]];
    // a reflection of the target keeps Q: the invariant is quadratic in the degree
    let target_mirror = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
    for rot in [about_vacuum, tilt, target_mirror] {
        let qr = hopf_charge(&phi.rotated(&rot)).unwrap();
        assert!((qr - q).abs() < 1e-9, "{qr} vs {q}");
    }
}

#[test]
fn unit_charge_on_desk_lattice() {
    let (phi, _) = unit_hopfion(64, 6.0);
    let q = hopf_charge(&phi).unwrap();
    assert!((q - 1.0).abs() < 0.05, "{q}");
}

#[test]
fn potential_is_divergence_free_and_converges_to_a_curl() {
    let mut residuals = Vec::new();
    for n in [24, 48, 64] {
        let (phi, _) = unit_hopfion(n, 6.0);
        let pot = hopf_potential(&phi).unwrap();
        let a_max = pot.a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(pot.divergence_supnorm() <= 1e-10 * a_max, "{}", pot.divergence_supnorm());
        assert!((pot.charge() - hopf_charge(&phi).unwrap()).abs() < 1e-12);
        residuals.push(pot.curl_residual());
    }
    assert!(residuals[1] < residuals[0] && residuals[2] < residuals[1], "{residuals:?}");
    assert!(residuals[2] <= 0.02, "{residuals:?}");
}

#[test]
fn ansatz_core_is_the_predicted_circle() {
    let params = AnsatzParams::with_charge(1);
    let spec = LatticeSpec::with_edge(96, 6.0).unwrap();
    let (phi, _) = hopfion_ansatz(&spec, &params).unwrap();
    let curve = core_curve(&phi);
    assert!(curve.closed && curve.is_reliable(spec.h()));
    let expected = 2.0 * PI * params.core_circle_radius();
    assert!(rel_err(curve.length, expected) < 0.03, "{} vs {expected}", curve.length);
}

/// The supercurrent relaxed against a frozen hopfion: a strictly convex
/// problem with a non-trivial minimum.
fn frozen_problem() -> (hopfion_core::lattice::DirectorField, hopfion_core::lattice::OneFormField, f64) {
    let (phi, c) = unit_hopfion(14, 6.0);
    (phi, c, 0.6)
}

fn frozen_config(depth: usize) -> OptimizerConfig {
    OptimizerConfig { memory_depth: depth, freeze_phi: true, grad_tolerance_factor: 1e-4, ..Default::default() }
}

#[test]
fn quasi_newton_agrees_with_fixed_step_descent() {
    let (phi, c, alpha) = frozen_problem();
    let lbfgs = minimize(&phi, &c, alpha, &frozen_config(10)).unwrap();
    assert!(lbfgs.converged);
    let h = phi.spec().h();
    let gd = gradient_descent(&phi, &c, alpha, true, 0.05 * h * h, 1e-4, 200_000, |_, _, _| {});
    assert!(gd.converged);
    assert!(lbfgs.energy.total < energy::evaluate(&phi, &c, alpha).unwrap().total);
    assert!(rel_err(lbfgs.energy.total, gd.energy.total) < 1e-6, "{} vs {}", lbfgs.energy.total, gd.energy.total);
    assert!(lbfgs.iterations * 10 < gd.iterations);
}

#[test]
fn memory_depth_changes_the_path_not_the_minimum() {
    let (phi, c, alpha) = frozen_problem();
    let energies: Vec<f64> = [1, 3, 10, 25]
        .iter()
        .map(|&m| {
            let r = minimize(&phi, &c, alpha, &frozen_config(m)).unwrap();
            assert!(r.converged, "depth {m}: {:?}", r.status);
            r.energy.total
        })
        .collect();
    for e in &energies {
        assert!(rel_err(*e, energies[0]) < 1e-6, "{energies:?}");
    }
}

#[test]
fn warm_start_from_a_minimiser_stops_at_once() {
    let (phi, c, alpha) = frozen_problem();
    let first = minimize(&phi, &c, alpha, &frozen_config(10)).unwrap();
    let again = minimize(&first.phi, &first.c, alpha, &frozen_config(10)).unwrap();
    assert!(again.converged);
    assert_eq!(again.iterations, 0);
    assert_eq!(again.energy.total, first.energy.total);
}

#[test]
fn evaluation_is_independent_of_thread_count() {
    let (phi, c) = unit_hopfion(24, 6.0);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let e = energy::evaluate(&phi, &c, 0.3).unwrap();
            let g = energy::gradient(&phi, &c, 0.3).unwrap();
            (e, g, hopf_charge(&phi).unwrap())
        })
    };
    let (e1, g1, q1) = run(1);
    let (e4, g4, q4) = run(4);
    assert_eq!(e1, e4);
    assert_eq!(g1, g4);
    assert_eq!(q1.to_bits(), q4.to_bits());
}

#[test]
fn checkpoint_for_another_lattice_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.ckpt");
    let (phi, c) = unit_hopfion(12, 6.0);
    Checkpoint::new(0.25, 1, phi, c).unwrap().save(&path).unwrap();
    let other = LatticeSpec::with_edge(16, 6.0).unwrap();
    assert!(matches!(Checkpoint::load_for(&path, &other), Err(Error::ShapeMismatch { expected: 16, found: 12 })));
    let shifted = LatticeSpec::new(12, 6.0 / 11.0, [0.0; 3]).unwrap();
    assert!(matches!(Checkpoint::load_for(&path, &shifted), Err(Error::Precondition(_))));
    let same = LatticeSpec::with_edge(12, 6.0).unwrap();
    assert_eq!(Checkpoint::load_for(&path, &same).unwrap().alpha, 0.25);
}
