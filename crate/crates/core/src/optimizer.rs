//! Limited-memory BFGS on the product of per-site 2-spheres (for `phi`) and
//! flat space (for `C`).
//!
//! Directions for `phi` live in the tangent space at the current iterate; an
//! update moves every interior site along its direction and renormalises
//! (retraction). Curvature pairs use the ambient displacement after
//! retraction and the difference of tangent-projected gradients, without
//! vector transport. A backtracking Armijo search makes the accepted
//! energies strictly non-increasing.

use std::collections::VecDeque;

use log::debug;

use crate::energy::{self, EnergyBreakdown, GradientPair};
use crate::error::{invalid, Error, Result};
use crate::lattice::{DirectorField, OneFormField};
use crate::vec3::{self, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Number of stored curvature pairs.
    pub memory_depth: usize,
    /// Convergence when the gradient sup norm drops below this times `h^3`.
    pub grad_tolerance_factor: f64,
    pub max_iterations: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo_c1: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    /// Largest per-site displacement tried by a line search.
    pub max_step: f64,
    /// Hold `phi` fixed and relax only `C`.
    pub freeze_phi: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            memory_depth: 10,
            grad_tolerance_factor: 0.01,
            max_iterations: 50_000,
            armijo_c1: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 40,
            max_step: 0.25,
            freeze_phi: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.memory_depth < 1 {
            return Err(invalid("memory_depth must be >= 1"));
        }
        if !(self.grad_tolerance_factor > 0.0) {
            return Err(invalid("grad_tolerance_factor must be positive"));
        }
        if !(self.armijo_c1 > 0.0 && self.armijo_c1 < 1.0) {
            return Err(invalid("armijo_c1 must lie in (0, 1)"));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(invalid("backtrack_factor must lie in (0, 1)"));
        }
        if !(self.max_step > 0.0) {
            return Err(invalid("max_step must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
    /// No step along steepest descent gave sufficient decrease.
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub phi: DirectorField,
    pub c: OneFormField,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    pub converged: bool,
    pub final_grad_supnorm: f64,
    pub status: Status,
    /// Iterations where the quasi-Newton direction was replaced by steepest descent.
    pub fallbacks: usize,
}

/// Reported after every accepted iteration.
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub iteration: usize,
    pub energy: f64,
    pub grad_supnorm: f64,
}

/// Largest absolute entry over both gradient components.
pub fn grad_supnorm(g: &GradientPair) -> f64 {
    g.grad_phi
        .iter()
        .chain(&g.grad_c)
        .flat_map(|v| v.iter())
        .fold(0.0, |m, x| m.max(x.abs()))
}

/// Dot product over `phi` and `C` parts, summed in site order.
fn dot(a: &GradientPair, b: &GradientPair) -> f64 {
    a.dot(b)
}

fn axpy_in_place(y: &mut GradientPair, s: f64, x: &GradientPair) {
    for (u, &v) in y.grad_phi.iter_mut().zip(&x.grad_phi) {
        *u = vec3::axpy(*u, s, v);
    }
    for (u, &v) in y.grad_c.iter_mut().zip(&x.grad_c) {
        *u = vec3::axpy(*u, s, v);
    }
}

fn scaled(x: &GradientPair, s: f64) -> GradientPair {
    GradientPair {
        grad_phi: x.grad_phi.iter().map(|&v| vec3::scale(v, s)).collect(),
        grad_c: x.grad_c.iter().map(|&v| vec3::scale(v, s)).collect(),
    }
}

fn difference(a: &GradientPair, b: &GradientPair) -> GradientPair {
    GradientPair {
        grad_phi: a.grad_phi.iter().zip(&b.grad_phi).map(|(&x, &y)| vec3::sub(x, y)).collect(),
        grad_c: a.grad_c.iter().zip(&b.grad_c).map(|(&x, &y)| vec3::sub(x, y)).collect(),
    }
}

fn max_site_norm(d: &GradientPair) -> f64 {
    d.grad_phi.iter().chain(&d.grad_c).map(|&v| vec3::norm(v)).fold(0.0, f64::max)
}

/// Curvature pairs and the two-loop recursion.
#[derive(Debug, Clone)]
pub(crate) struct LbfgsHistory {
    depth: usize,
    pairs: VecDeque<(GradientPair, GradientPair, f64)>,
}

impl LbfgsHistory {
    pub(crate) fn new(depth: usize) -> Self {
        LbfgsHistory { depth, pairs: VecDeque::with_capacity(depth) }
    }

    pub(crate) fn len(&self) -> usize {
        self.pairs.len()
    }

    pub(crate) fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Stores `(s, y)` unless `s . y <= 1e-14 |s| |y|`. Returns whether it was kept.
    pub(crate) fn push(&mut self, s: GradientPair, y: GradientPair) -> bool {
        let sy = dot(&s, &y);
        let bound = 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt();
        if !(sy > bound) {
            return false;
        }
        self.push_unchecked(s, y);
        true
    }

    pub(crate) fn push_unchecked(&mut self, s: GradientPair, y: GradientPair) {
        let sy = dot(&s, &y);
        if self.pairs.len() == self.depth {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// `-H g` from the two-loop recursion, or `None` when the history is empty.
    pub(crate) fn direction(&self, g: &GradientPair) -> Option<GradientPair> {
        let (s_last, y_last, _) = self.pairs.back()?;
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            axpy_in_place(&mut q, -a, y);
            alphas.push(a);
        }
        let gamma = dot(s_last, y_last) / dot(y_last, y_last);
        let mut r = scaled(&q, gamma);
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &r);
            axpy_in_place(&mut r, a - b, s);
        }
        Some(scaled(&r, -1.0))
    }
}

/// Search direction: the L-BFGS step projected to the tangent space, or
/// steepest descent when the history is empty or the step fails the descent
/// test. The flag reports a fallback caused by a non-descent step.
pub(crate) fn search_direction(history: &LbfgsHistory, g: &GradientPair, phi: &[Vec3]) -> (GradientPair, bool) {
    let steepest = || scaled(g, -1.0);
    let Some(mut d) = history.direction(g) else {
        return (steepest(), false);
    };
    for (v, &p) in d.grad_phi.iter_mut().zip(phi) {
        *v = vec3::reject(*v, p);
    }
    let slope = dot(g, &d);
    if slope.is_finite() && slope < 0.0 {
        (d, false)
    } else {
        (steepest(), true)
    }
}

fn retract(phi: &DirectorField, c: &OneFormField, d: &GradientPair, t: f64, freeze_phi: bool) -> (DirectorField, OneFormField) {
    let spec = *phi.spec();
    let mut phi_new = phi.clone();
    if !freeze_phi {
        for (idx, v) in phi_new.values_mut().iter_mut().enumerate() {
            if !spec.is_boundary(idx) {
                *v = vec3::normalize(vec3::axpy(*v, t, d.grad_phi[idx]));
            }
        }
    }
    let mut c_new = c.clone();
    for (idx, v) in c_new.values_mut().iter_mut().enumerate() {
        if !spec.is_boundary(idx) {
            *v = vec3::axpy(*v, t, d.grad_c[idx]);
        }
    }
    (phi_new, c_new)
}

/// Displacement between two iterates as a tangent-shaped pair.
fn displacement(phi0: &DirectorField, c0: &OneFormField, phi1: &DirectorField, c1: &OneFormField) -> GradientPair {
    GradientPair {
        grad_phi: phi1.values().iter().zip(phi0.values()).map(|(&a, &b)| vec3::sub(a, b)).collect(),
        grad_c: c1.values().iter().zip(c0.values()).map(|(&a, &b)| vec3::sub(a, b)).collect(),
    }
}

/// Locates the first site carrying a non-finite value in the fields or the gradient.
fn nonfinite_site(phi: &DirectorField, c: &OneFormField, g: Option<&GradientPair>) -> Option<(&'static str, usize)> {
    let finite = |v: &Vec3| v.iter().all(|x| x.is_finite());
    let checks: [(&'static str, Option<&[Vec3]>); 4] = [
        ("director", Some(phi.values())),
        ("supercurrent", Some(c.values())),
        ("director gradient", g.map(|g| g.grad_phi.as_slice())),
        ("supercurrent gradient", g.map(|g| g.grad_c.as_slice())),
    ];
    for (name, values) in checks {
        if let Some(idx) = values.and_then(|v| v.iter().position(|x| !finite(x))) {
            return Some((name, idx));
        }
    }
    None
}

fn evaluate(phi: &DirectorField, c: &OneFormField, alpha: f64, freeze_phi: bool) -> Result<(EnergyBreakdown, GradientPair)> {
    let (e, mut g) = energy::evaluate_with_gradient(phi, c, alpha)?;
    if freeze_phi {
        g.grad_phi.iter_mut().for_each(|v| *v = vec3::ZERO);
    }
    let bad_energy = !e.total.is_finite();
    if bad_energy || g.grad_phi.iter().chain(&g.grad_c).any(|v| !v.iter().all(|x| x.is_finite())) {
        let spec = phi.spec();
        let (quantity, idx) = nonfinite_site(phi, c, Some(&g)).unwrap_or(("energy", 0));
        return Err(Error::NonFinite { quantity, site: spec.coords(idx) });
    }
    Ok((e, g))
}

/// Minimises the energy at coupling `alpha` starting from `(phi, c)`.
pub fn minimize(phi: &DirectorField, c: &OneFormField, alpha: f64, config: &OptimizerConfig) -> Result<MinimizeResult> {
    minimize_with_progress(phi, c, alpha, config, |_| {})
}

pub fn minimize_with_progress<F>(
    phi: &DirectorField,
    c: &OneFormField,
    alpha: f64,
    config: &OptimizerConfig,
    mut progress: F,
) -> Result<MinimizeResult>
where
    F: FnMut(&Progress),
{
    config.validate()?;
    energy::check_alpha(alpha)?;
    let spec = *phi.spec();
    let tolerance = config.grad_tolerance_factor * spec.cell_volume();

    let mut phi = phi.clone();
    let mut c = c.clone();
    let (mut e, mut g) = evaluate(&phi, &c, alpha, config.freeze_phi)?;
    let mut sup = grad_supnorm(&g);
    let mut history = LbfgsHistory::new(config.memory_depth);
    let mut iterations = 0;
    let mut fallbacks = 0;
    let mut status = Status::MaxIterations;

    while iterations < config.max_iterations {
        if sup < tolerance {
            status = Status::Converged;
            break;
        }
        let (mut d, fell_back) = search_direction(&history, &g, phi.values());
        if fell_back {
            fallbacks += 1;
            history.clear();
        }

        let mut accepted = None;
        // At most two attempts: the quasi-Newton direction, then steepest descent.
        for attempt in 0..2 {
            let steepest = history.len() == 0 || attempt == 1;
            if attempt == 1 {
                if history.len() == 0 {
                    break;
                }
                history.clear();
                fallbacks += 1;
                d = scaled(&g, -1.0);
            }
            let slope = dot(&g, &d);
            let biggest = max_site_norm(&d);
            let mut t = if steepest { 0.1 * config.max_step / biggest } else { 1.0 };
            t = t.min(config.max_step / biggest);
            for _ in 0..config.max_backtracks {
                let (phi_t, c_t) = retract(&phi, &c, &d, t, config.freeze_phi);
                let (e_t, g_t) = evaluate(&phi_t, &c_t, alpha, config.freeze_phi)?;
                if e_t.total <= e.total + config.armijo_c1 * t * slope {
                    accepted = Some((phi_t, c_t, e_t, g_t));
                    break;
                }
                t *= config.backtrack_factor;
            }
            if accepted.is_some() {
                break;
            }
        }

        let Some((phi_new, c_new, e_new, g_new)) = accepted else {
            status = Status::LineSearchFailed;
            debug!("line search failed at iteration {iterations}, energy {}", e.total);
            break;
        };
        let s = displacement(&phi, &c, &phi_new, &c_new);
        let y = difference(&g_new, &g);
        history.push(s, y);
        phi = phi_new;
        c = c_new;
        e = e_new;
        g = g_new;
        sup = grad_supnorm(&g);
        iterations += 1;
        progress(&Progress { iteration: iterations, energy: e.total, grad_supnorm: sup });
    }
    if sup < tolerance {
        status = Status::Converged;
    }

    Ok(MinimizeResult {
        phi,
        c,
        energy: e,
        iterations,
        converged: status == Status::Converged,
        final_grad_supnorm: sup,
        status,
        fallbacks,
    })
}
