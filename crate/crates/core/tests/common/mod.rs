//! Helpers shared by the integration tests: random configurations, lattice
//! symmetries, and reference implementations written independently of the
//! library's vectorised code.

#![allow(dead_code)]

use hopfion_core::energy::{self, EnergyBreakdown};
use hopfion_core::lattice::{DirectorField, LatticeSpec, OneFormField, DEFAULT_VACUUM};
use hopfion_core::optimizer::grad_supnorm;
use hopfion_core::vec3::{self, Vec3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = vec3::norm(v);
        if n > 0.1 && n <= 1.0 {
            return vec3::scale(v, 1.0 / n);
        }
    }
}

/// Independent random unit vectors and a random one-form of size `c_scale`.
pub fn random_config(spec: LatticeSpec, rng: &mut ChaCha8Rng, c_scale: f64) -> (DirectorField, OneFormField) {
    let phi: Vec<Vec3> = (0..spec.num_sites()).map(|_| random_unit(rng)).collect();
    let c: Vec<Vec3> = (0..spec.num_sites())
        .map(|_| [rng.gen_range(-c_scale..c_scale), rng.gen_range(-c_scale..c_scale), rng.gen_range(-c_scale..c_scale)])
        .collect();
    (DirectorField::from_values(spec, phi, DEFAULT_VACUUM).unwrap(), OneFormField::from_values(spec, c).unwrap())
}

/// The five energy terms computed with plain index loops.
pub fn naive_terms(phi: &DirectorField, c: &OneFormField, alpha: f64) -> [f64; 5] {
    let spec = *phi.spec();
    let n = spec.n_points;
    let h = spec.spacing;
    let at = |v: &[Vec3], ghost: Vec3, i: usize, j: usize, k: usize| -> Vec3 {
        if i == n || j == n || k == n {
            ghost
        } else {
            v[i + n * j + n * n * k]
        }
    };
    let (pv, cv) = (phi.values(), c.values());
    let vac = phi.vacuum();
    let mut t = [0.0; 5];
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let p = at(pv, vac, i, j, k);
                let dp = [
                    vec3::scale(vec3::sub(at(pv, vac, i + 1, j, k), p), 1.0 / h),
                    vec3::scale(vec3::sub(at(pv, vac, i, j + 1, k), p), 1.0 / h),
                    vec3::scale(vec3::sub(at(pv, vac, i, j, k + 1), p), 1.0 / h),
                ];
                let cc = at(cv, [0.0; 3], i, j, k);
                let dc = [
                    vec3::scale(vec3::sub(at(cv, [0.0; 3], i + 1, j, k), cc), 1.0 / h),
                    vec3::scale(vec3::sub(at(cv, [0.0; 3], i, j + 1, k), cc), 1.0 / h),
                    vec3::scale(vec3::sub(at(cv, [0.0; 3], i, j, k + 1), cc), 1.0 / h),
                ];
                // F_ab and (dC)_ab for the planes (2,3), (3,1), (1,2)
                for (a, b) in [(1, 2), (2, 0), (0, 1)] {
                    let f = vec3::dot(p, vec3::cross(dp[a], dp[b]));
                    let k_ab = dc[a][b] - dc[b][a];
                    t[1] += f * f;
                    t[2] += k_ab * f;
                    t[3] += k_ab * k_ab;
                }
                t[0] += dp.iter().map(|d| vec3::norm_sq(*d)).sum::<f64>();
                t[4] += vec3::norm_sq(cc);
            }
        }
    }
    let vol = h * h * h;
    [t[0] * vol / 8.0, t[1] * vol / 8.0, alpha * t[2] * vol / 2.0, t[3] * vol / 2.0, t[4] * vol / 2.0]
}

/// Reflection `x1 -> -x1` of a centred lattice.
pub fn mirror_x1(phi: &DirectorField) -> DirectorField {
    let spec = *phi.spec();
    let n = spec.n_points;
    let values = (0..spec.num_sites())
        .map(|idx| {
            let [i, j, k] = spec.coords(idx);
            phi.values()[spec.index(n - 1 - i, j, k)]
        })
        .collect();
    DirectorField::from_values(spec, values, phi.vacuum()).unwrap()
}

/// Quarter turn of space about the x3 axis of a centred lattice:
/// `phi'(x) = phi(R^-1 x)`.
pub fn quarter_turn(phi: &DirectorField) -> DirectorField {
    let spec = *phi.spec();
    let n = spec.n_points;
    let values = (0..spec.num_sites())
        .map(|idx| {
            let [i, j, k] = spec.coords(idx);
            phi.values()[spec.index(j, n - 1 - i, k)]
        })
        .collect();
    DirectorField::from_values(spec, values, phi.vacuum()).unwrap()
}

pub struct DescentResult {
    pub phi: DirectorField,
    pub c: OneFormField,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    pub converged: bool,
}

/// Fixed-step projected gradient descent: `phi <- normalise(phi - tau g/h^3)`,
/// `C <- C - tau g_C/h^3`, stopping on the same gradient sup-norm rule as the
/// library optimiser. With `freeze_phi` only `C` moves.
pub fn gradient_descent(
    phi: &DirectorField,
    c: &OneFormField,
    alpha: f64,
    freeze_phi: bool,
    tau: f64,
    tolerance_factor: f64,
    max_iterations: usize,
    mut report: impl FnMut(usize, &EnergyBreakdown, &DirectorField),
) -> DescentResult {
    let spec = *phi.spec();
    let h3 = spec.cell_volume();
    let tol = tolerance_factor * h3;
    let (mut phi, mut c) = (phi.clone(), c.clone());
    for it in 0..max_iterations {
        let (e, mut g) = energy::evaluate_with_gradient(&phi, &c, alpha).unwrap();
        report(it, &e, &phi);
        if freeze_phi {
            g.grad_phi.iter_mut().for_each(|v| *v = [0.0; 3]);
        }
        if grad_supnorm(&g) < tol {
            return DescentResult { phi, c, energy: e, iterations: it, converged: true };
        }
        let step = tau / h3;
        if !freeze_phi {
            for (p, gp) in phi.values_mut().iter_mut().zip(&g.grad_phi) {
                *p = vec3::axpy(*p, -step, *gp);
            }
            phi.enforce();
        }
        for (v, gv) in c.values_mut().iter_mut().zip(&g.grad_c) {
            *v = vec3::axpy(*v, -step, *gv);
        }
        c.enforce();
    }
    let e = energy::evaluate(&phi, &c, alpha).unwrap();
    DescentResult { phi, c, energy: e, iterations: max_iterations, converged: false }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Moves every site along the great circle through `phi` in direction `dphi`
/// (tangent) by `t |dphi|`, and `C` linearly by `t dc`.
pub fn geodesic_step(phi: &DirectorField, c: &OneFormField, dphi: &[Vec3], dc: &[Vec3], t: f64) -> (DirectorField, OneFormField) {
    let spec = *phi.spec();
    let pv = phi
        .values()
        .iter()
        .zip(dphi)
        .map(|(&p, &v)| {
            let len = vec3::norm(v);
            if len == 0.0 {
                p
            } else {
                let r = len * t;
                vec3::axpy(vec3::scale(p, r.cos()), r.sin() / len, v)
            }
        })
        .collect();
    let cv = c.values().iter().zip(dc).map(|(&a, &b)| vec3::axpy(a, t, b)).collect();
    (DirectorField::from_values(spec, pv, phi.vacuum()).unwrap(), OneFormField::from_values(spec, cv).unwrap())
}

/// A random tangent direction for `phi` and a random one-form direction,
/// both zero on the boundary shell.
pub fn random_direction(phi: &DirectorField, rng: &mut ChaCha8Rng) -> (Vec<Vec3>, Vec<Vec3>) {
    let spec = *phi.spec();
    let mut dphi = Vec::with_capacity(spec.num_sites());
    let mut dc = Vec::with_capacity(spec.num_sites());
    for idx in 0..spec.num_sites() {
        let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let w = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        if spec.is_boundary(idx) {
            dphi.push([0.0; 3]);
            dc.push([0.0; 3]);
        } else {
            dphi.push(vec3::reject(v, phi.values()[idx]));
            dc.push(w);
        }
    }
    (dphi, dc)
}
