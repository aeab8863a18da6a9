//! The lattice energy
//!
//! ```text
//! E = 1/8 |d phi|^2 + 1/8 |phi^* w|^2 + alpha/2 <dC, phi^* w> + 1/2 |dC|^2 + 1/2 |C|^2
//! ```
//!
//! built from forward differences, together with its exact gradient with
//! respect to every interior degree of freedom.
//!
//! The gradient is the adjoint of the discrete stencil, not a discretised
//! Euler-Lagrange operator. Each site's energy density depends on its own
//! value and its three forward neighbours; we first compute the partial
//! derivatives of the density with respect to the site value and to each
//! forward difference, then scatter them back to the sites they came from.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::lattice::{curl_at, jacobian_at, pullback_at, DirectorField, LatticeSpec, OneFormField};
use crate::vec3::{self, Vec3};

/// The five terms of the energy and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `1/8 |d phi|^2`
    pub dirichlet: f64,
    /// `1/8 |phi^* w|^2`
    pub pullback: f64,
    /// `alpha/2 <dC, phi^* w>`
    pub cross: f64,
    /// `1/2 |dC|^2`
    pub dc_sq: f64,
    /// `1/2 |C|^2`
    pub c_sq: f64,
    pub alpha: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn from_terms(dirichlet: f64, pullback: f64, cross: f64, dc_sq: f64, c_sq: f64, alpha: f64) -> Self {
        EnergyBreakdown {
            dirichlet,
            pullback,
            cross,
            dc_sq,
            c_sq,
            alpha,
            total: dirichlet + pullback + cross + dc_sq + c_sq,
        }
    }

    pub fn zero(alpha: f64) -> Self {
        Self::from_terms(0.0, 0.0, 0.0, 0.0, 0.0, alpha)
    }
}

/// The energy regrouped into manifestly non-negative pieces:
/// `1/8 |d phi|^2`, `(1-alpha)/8 |phi^* w|^2`, `(1-alpha)/2 |dC|^2`,
/// `alpha/2 |dC + phi^* w / 2|^2` and `1/2 |C|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub dirichlet: f64,
    pub pullback: f64,
    pub dc_sq: f64,
    pub completed_square: f64,
    pub c_sq: f64,
}

impl Decomposition {
    pub fn as_array(&self) -> [f64; 5] {
        [self.dirichlet, self.pullback, self.dc_sq, self.completed_square, self.c_sq]
    }

    pub fn sum(&self) -> f64 {
        self.dirichlet + self.pullback + self.dc_sq + self.completed_square + self.c_sq
    }
}

/// Gradient of the lattice energy. `grad_phi` is tangent to the sphere at
/// every site; both parts vanish on the boundary shell.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair {
    pub grad_phi: Vec<Vec3>,
    pub grad_c: Vec<Vec3>,
}

impl GradientPair {
    pub fn zeros(num_sites: usize) -> Self {
        GradientPair { grad_phi: vec![vec3::ZERO; num_sites], grad_c: vec![vec3::ZERO; num_sites] }
    }

    /// Euclidean inner product over all entries.
    pub fn dot(&self, other: &GradientPair) -> f64 {
        let phi: f64 = self.grad_phi.iter().zip(&other.grad_phi).map(|(&a, &b)| vec3::dot(a, b)).sum();
        let c: f64 = self.grad_c.iter().zip(&other.grad_c).map(|(&a, &b)| vec3::dot(a, b)).sum();
        phi + c
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

fn check_fields(phi: &DirectorField, c: &OneFormField) -> Result<LatticeSpec> {
    let spec = *phi.spec();
    if c.spec().n_points != spec.n_points {
        return Err(crate::Error::ShapeMismatch { expected: spec.n_points, found: c.spec().n_points });
    }
    Ok(spec)
}

/// Per-site squared quantities, summed in plane order.
#[derive(Debug, Clone, Copy, Default)]
struct SiteSums {
    grad_sq: f64,
    pull_sq: f64,
    cross: f64,
    curl_sq: f64,
    c_sq: f64,
    square: f64,
}

impl SiteSums {
    fn add(&mut self, o: &SiteSums) {
        self.grad_sq += o.grad_sq;
        self.pull_sq += o.pull_sq;
        self.cross += o.cross;
        self.curl_sq += o.curl_sq;
        self.c_sq += o.c_sq;
        self.square += o.square;
    }
}

#[inline]
fn site_sums(spec: &LatticeSpec, phi: &DirectorField, c: &OneFormField, idx: usize) -> SiteSums {
    let p = phi.values()[idx];
    let dphi = jacobian_at(spec, phi.values(), phi.vacuum(), idx);
    let f = pullback_at(p, &dphi);
    let dc = jacobian_at(spec, c.values(), vec3::ZERO, idx);
    let k = curl_at(&dc);
    SiteSums {
        grad_sq: vec3::norm_sq(dphi[0]) + vec3::norm_sq(dphi[1]) + vec3::norm_sq(dphi[2]),
        pull_sq: vec3::norm_sq(f),
        cross: vec3::dot(k, f),
        curl_sq: vec3::norm_sq(k),
        c_sq: vec3::norm_sq(c.values()[idx]),
        square: vec3::norm_sq(vec3::axpy(k, 0.5, f)),
    }
}

fn ordered_sums(phi: &DirectorField, c: &OneFormField) -> SiteSums {
    let spec = *phi.spec();
    let plane = spec.n_points * spec.n_points;
    let partials: Vec<SiteSums> = (0..spec.n_points)
        .into_par_iter()
        .map(|k| {
            let mut acc = SiteSums::default();
            for idx in k * plane..(k + 1) * plane {
                acc.add(&site_sums(&spec, phi, c, idx));
            }
            acc
        })
        .collect();
    let mut total = SiteSums::default();
    for p in &partials {
        total.add(p);
    }
    total
}

fn breakdown_from(s: &SiteSums, alpha: f64, vol: f64) -> EnergyBreakdown {
    EnergyBreakdown::from_terms(
        0.125 * s.grad_sq * vol,
        0.125 * s.pull_sq * vol,
        0.5 * alpha * s.cross * vol,
        0.5 * s.curl_sq * vol,
        0.5 * s.c_sq * vol,
        alpha,
    )
}

/// Evaluates the five energy terms.
pub fn evaluate(phi: &DirectorField, c: &OneFormField, alpha: f64) -> Result<EnergyBreakdown> {
    check_alpha(alpha)?;
    let spec = check_fields(phi, c)?;
    Ok(breakdown_from(&ordered_sums(phi, c), alpha, spec.cell_volume()))
}

/// Evaluates the non-negative regrouping of the energy. Its entries sum to
/// `evaluate(..).total` up to rounding.
pub fn evaluate_decomposed(phi: &DirectorField, c: &OneFormField, alpha: f64) -> Result<Decomposition> {
    check_alpha(alpha)?;
    let spec = check_fields(phi, c)?;
    let s = ordered_sums(phi, c);
    let vol = spec.cell_volume();
    Ok(Decomposition {
        dirichlet: 0.125 * s.grad_sq * vol,
        pullback: 0.125 * (1.0 - alpha) * s.pull_sq * vol,
        dc_sq: 0.5 * (1.0 - alpha) * s.curl_sq * vol,
        completed_square: 0.5 * alpha * s.square * vol,
        c_sq: 0.5 * s.c_sq * vol,
    })
}

/// Partial derivatives of one site's energy density.
#[derive(Clone, Copy)]
struct SiteAdjoint {
    /// w.r.t. the site value of phi (through the pull-back's leading factor)
    phi_direct: Vec3,
    /// w.r.t. each forward difference of phi
    phi_diff: [Vec3; 3],
    /// w.r.t. each forward difference of C
    c_diff: [Vec3; 3],
}

const ZERO_ADJOINT: SiteAdjoint =
    SiteAdjoint { phi_direct: vec3::ZERO, phi_diff: [vec3::ZERO; 3], c_diff: [vec3::ZERO; 3] };

#[inline]
fn site_adjoint(spec: &LatticeSpec, phi: &DirectorField, c: &OneFormField, alpha: f64, idx: usize) -> (SiteAdjoint, SiteSums) {
    let p = phi.values()[idx];
    let d = jacobian_at(spec, phi.values(), phi.vacuum(), idx);
    let f = pullback_at(p, &d);
    let dc = jacobian_at(spec, c.values(), vec3::ZERO, idx);
    let k = curl_at(&dc);

    // d(density)/dF and d(density)/dK
    let w = vec3::axpy(vec3::scale(f, 0.25), 0.5 * alpha, k);
    let m = vec3::axpy(k, 0.5 * alpha, f);

    // F_c = p . (d_{c+1} x d_{c+2})
    let crosses = [vec3::cross(d[1], d[2]), vec3::cross(d[2], d[0]), vec3::cross(d[0], d[1])];
    let phi_direct = vec3::add(vec3::add(vec3::scale(crosses[0], w[0]), vec3::scale(crosses[1], w[1])), vec3::scale(crosses[2], w[2]));

    let mut phi_diff = [vec3::ZERO; 3];
    let mut c_diff = [vec3::ZERO; 3];
    for a in 0..3 {
        let a1 = (a + 1) % 3;
        let a2 = (a + 2) % 3;
        // d_a is the first factor of F_{a+2} and the second factor of F_{a+1}
        let first = vec3::scale(vec3::cross(d[a1], p), w[a2]);
        let second = vec3::scale(vec3::cross(p, d[a2]), w[a1]);
        phi_diff[a] = vec3::add(vec3::scale(d[a], 0.25), vec3::add(first, second));
        c_diff[a] = vec3::cross(m, vec3::unit(a));
    }

    let sums = SiteSums {
        grad_sq: vec3::norm_sq(d[0]) + vec3::norm_sq(d[1]) + vec3::norm_sq(d[2]),
        pull_sq: vec3::norm_sq(f),
        cross: vec3::dot(k, f),
        curl_sq: vec3::norm_sq(k),
        c_sq: vec3::norm_sq(c.values()[idx]),
        square: 0.0,
    };
    (SiteAdjoint { phi_direct, phi_diff, c_diff }, sums)
}

/// Evaluates the energy and its gradient in one sweep.
pub fn evaluate_with_gradient(phi: &DirectorField, c: &OneFormField, alpha: f64) -> Result<(EnergyBreakdown, GradientPair)> {
    check_alpha(alpha)?;
    let spec = check_fields(phi, c)?;
    let n = spec.n_points;
    let plane = n * n;
    let h = spec.h();
    let vol = spec.cell_volume();

    let mut adj = vec![ZERO_ADJOINT; spec.num_sites()];
    let partials: Vec<SiteSums> = adj
        .par_chunks_mut(plane)
        .enumerate()
        .map(|(k, chunk)| {
            let mut acc = SiteSums::default();
            for (off, slot) in chunk.iter_mut().enumerate() {
                let (a, s) = site_adjoint(&spec, phi, c, alpha, k * plane + off);
                *slot = a;
                acc.add(&s);
            }
            acc
        })
        .collect();
    let mut sums = SiteSums::default();
    for p in &partials {
        sums.add(p);
    }
    let energy = breakdown_from(&sums, alpha, vol);

    let mut grad = GradientPair::zeros(spec.num_sites());
    let inv_h = 1.0 / h;
    grad.grad_phi
        .par_chunks_mut(plane)
        .zip(grad.grad_c.par_chunks_mut(plane))
        .enumerate()
        .for_each(|(k, (gp, gc))| {
            if k == 0 || k == n - 1 {
                return;
            }
            for j in 1..n - 1 {
                for i in 1..n - 1 {
                    let idx = spec.index(i, j, k);
                    let here = &adj[idx];
                    let mut g_phi = here.phi_direct;
                    let mut g_c = c.values()[idx];
                    for a in 0..3 {
                        let back = &adj[idx - spec.stride(a)];
                        g_phi = vec3::axpy(g_phi, inv_h, vec3::sub(back.phi_diff[a], here.phi_diff[a]));
                        g_c = vec3::axpy(g_c, inv_h, vec3::sub(back.c_diff[a], here.c_diff[a]));
                    }
                    let local = i + n * j;
                    gp[local] = vec3::scale(vec3::reject(g_phi, phi.values()[idx]), vol);
                    gc[local] = vec3::scale(g_c, vol);
                }
            }
        });
    Ok((energy, grad))
}

/// Exact gradient of the lattice energy, tangent-projected in `phi`.
pub fn gradient(phi: &DirectorField, c: &OneFormField, alpha: f64) -> Result<GradientPair> {
    evaluate_with_gradient(phi, c, alpha).map(|(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DEFAULT_VACUUM;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_fields(n: usize, seed: u64, c_scale: f64) -> (DirectorField, OneFormField) {
        let spec = LatticeSpec::centered(n, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = (0..spec.num_sites())
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0) + 0.5])
            .collect();
        let c = (0..spec.num_sites())
            .map(|_| {
                [rng.gen_range(-c_scale..c_scale), rng.gen_range(-c_scale..c_scale), rng.gen_range(-c_scale..c_scale)]
            })
            .collect();
        (
            DirectorField::from_values(spec, phi, DEFAULT_VACUUM).unwrap(),
            OneFormField::from_values(spec, c).unwrap(),
        )
    }

    #[test]
    fn rejects_alpha_outside_unit_interval() {
        let (phi, c) = random_fields(5, 0, 0.1);
        assert!(evaluate(&phi, &c, -0.01).is_err());
        assert!(evaluate(&phi, &c, 1.01).is_err());
        assert!(evaluate_decomposed(&phi, &c, 2.0).is_err());
        assert!(gradient(&phi, &c, f64::NAN).is_err());
    }

    #[test]
    fn vacuum_has_zero_energy_and_gradient() {
        let spec = LatticeSpec::centered(8, 0.3).unwrap();
        let phi = DirectorField::uniform(spec, DEFAULT_VACUUM).unwrap();
        let c = OneFormField::zeros(spec);
        for alpha in [0.0, 0.3, 1.0] {
            let (e, g) = evaluate_with_gradient(&phi, &c, alpha).unwrap();
            assert_eq!(e.total, 0.0);
            assert!(g.grad_phi.iter().chain(&g.grad_c).all(|v| *v == vec3::ZERO));
        }
    }

    #[test]
    fn single_site_supercurrent_matches_hand_stencil() {
        let spec = LatticeSpec::centered(6, 0.5).unwrap();
        let h = spec.h();
        let phi = DirectorField::uniform(spec, DEFAULT_VACUUM).unwrap();
        let mut c = OneFormField::zeros(spec);
        let v = [0.3, -0.7, 1.1];
        c.values_mut()[spec.index(2, 3, 2)] = v;
        let e = evaluate(&phi, &c, 0.0).unwrap();

        // The curl is nonzero at the site itself (differences -v/h along each
        // axis) and at its three backward neighbours (difference +v/h along
        // one axis).
        let own = [(-v[2] + v[1]) / h, (-v[0] + v[2]) / h, (-v[1] + v[0]) / h];
        let back_x = [0.0, -v[2] / h, v[1] / h];
        let back_y = [v[2] / h, 0.0, -v[0] / h];
        let back_z = [-v[1] / h, v[0] / h, 0.0];
        let curl_sq: f64 = [own, back_x, back_y, back_z].iter().map(|k| vec3::norm_sq(*k)).sum();
        let vol = spec.cell_volume();
        assert!((e.c_sq - 0.5 * vec3::norm_sq(v) * vol).abs() <= 1e-13 * e.c_sq);
        assert!((e.dc_sq - 0.5 * curl_sq * vol).abs() <= 1e-13 * e.dc_sq);
        assert_eq!(e.dirichlet, 0.0);
        assert_eq!(e.cross, 0.0);
        assert!((e.total - (e.c_sq + e.dc_sq)).abs() <= 1e-13 * e.total);
    }

    #[test]
    fn decomposition_reduces_correctly_at_endpoints() {
        let (phi, c) = random_fields(8, 3, 0.3);
        let e0 = evaluate(&phi, &c, 0.0).unwrap();
        let d0 = evaluate_decomposed(&phi, &c, 0.0).unwrap();
        assert_eq!(e0.cross, 0.0);
        assert_eq!(d0.completed_square, 0.0);
        assert!((d0.pullback - e0.pullback).abs() <= 1e-14 * e0.pullback);
        assert!((d0.dc_sq - e0.dc_sq).abs() <= 1e-14 * e0.dc_sq);
        let d1 = evaluate_decomposed(&phi, &c, 1.0).unwrap();
        assert_eq!(d1.pullback, 0.0);
        assert_eq!(d1.dc_sq, 0.0);
    }

    #[test]
    fn decomposition_sums_to_total() {
        let (phi, c) = random_fields(8, 9, 0.4);
        let e = evaluate(&phi, &c, 0.37).unwrap();
        let d = evaluate_decomposed(&phi, &c, 0.37).unwrap();
        assert!(((d.sum() - e.total) / e.total).abs() <= 1e-13);
        assert!(d.as_array().iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn combined_sweep_agrees_with_plain_evaluation() {
        let (phi, c) = random_fields(7, 21, 0.5);
        let e = evaluate(&phi, &c, 0.6).unwrap();
        let (e2, _) = evaluate_with_gradient(&phi, &c, 0.6).unwrap();
        assert_eq!(e, e2);
    }

    #[test]
    fn gradient_is_tangent_and_vanishes_on_boundary() {
        let (phi, c) = random_fields(8, 4, 0.3);
        let g = gradient(&phi, &c, 0.5).unwrap();
        let spec = phi.spec();
        for idx in 0..spec.num_sites() {
            assert!(vec3::dot(g.grad_phi[idx], phi.values()[idx]).abs() < 1e-10);
            if spec.is_boundary(idx) {
                assert_eq!(g.grad_phi[idx], vec3::ZERO);
                assert_eq!(g.grad_c[idx], vec3::ZERO);
            }
        }
    }

    /// Moves phi along a tangent direction with the exponential map so the
    /// finite differences stay on the sphere.
    fn perturb(phi: &DirectorField, c: &OneFormField, dphi: &[Vec3], dc: &[Vec3], t: f64) -> (DirectorField, OneFormField) {
        let spec = *phi.spec();
        let pv = phi
            .values()
            .iter()
            .zip(dphi)
            .map(|(&p, &v)| {
                let r = vec3::norm(v) * t;
                if r == 0.0 {
                    p
                } else {
                    vec3::axpy(vec3::scale(p, r.cos()), r.sin() / vec3::norm(v), v)
                }
            })
            .collect();
        let cv = c.values().iter().zip(dc).map(|(&a, &b)| vec3::axpy(a, t, b)).collect();
        (
            DirectorField::from_values(spec, pv, phi.vacuum()).unwrap(),
            OneFormField::from_values(spec, cv).unwrap(),
        )
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (phi, c) = random_fields(8, 17, 0.3);
        let spec = *phi.spec();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let g = gradient(&phi, &c, 0.5).unwrap();
        for _ in 0..5 {
            let dphi: Vec<Vec3> = (0..spec.num_sites())
                .map(|idx| {
                    if spec.is_boundary(idx) {
                        return vec3::ZERO;
                    }
                    let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                    vec3::reject(v, phi.values()[idx])
                })
                .collect();
            let dc: Vec<Vec3> = (0..spec.num_sites())
                .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect();
            let step = 1e-5;
            let (pp, cp) = perturb(&phi, &c, &dphi, &dc, step);
            let (pm, cm) = perturb(&phi, &c, &dphi, &dc, -step);
            let fd = (evaluate(&pp, &cp, 0.5).unwrap().total - evaluate(&pm, &cm, 0.5).unwrap().total) / (2.0 * step);
            let dc_masked: Vec<Vec3> = dc
                .iter()
                .enumerate()
                .map(|(i, &v)| if spec.is_boundary(i) { vec3::ZERO } else { v })
                .collect();
            let analytic = g.dot(&GradientPair { grad_phi: dphi, grad_c: dc_masked });
            assert!(((fd - analytic) / analytic).abs() < 1e-6, "{fd} vs {analytic}");
        }
    }
}
