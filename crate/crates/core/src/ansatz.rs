//! Initial configurations of prescribed Hopf charge.
//!
//! A point of space is sent to the 3-sphere in C^2 by
//!
//! ```text
//! Z1 = (x1 + i x2)/r sin f(r),   Z2 = cos f(r) - i x3/r sin f(r)
//! ```
//!
//! with a radial profile falling from `pi` at the origin to `0` at infinity.
//! The phase of `Z1` is wound `Q` times and the result is projected to the
//! 2-sphere by the Hopf map. The sign in front of `x3` fixes the orientation
//! so that the Whitehead integral comes out as `+Q`. The preimage of the antipode of the vacuum is
//! the circle `f(r) = pi/2` in the `x3 = 0` plane for every `Q`.

use log::warn;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::lattice::{DirectorField, LatticeSpec, OneFormField, DEFAULT_VACUUM};
use crate::vec3::{self, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnsatzParams {
    pub charge: i32,
    /// Length scale of the radial profile.
    pub core_radius: f64,
    /// Exponent of the radial profile.
    pub profile_sharpness: f64,
}

impl Default for AnsatzParams {
    fn default() -> Self {
        AnsatzParams { charge: 1, core_radius: 1.0, profile_sharpness: 2.0 }
    }
}

impl AnsatzParams {
    pub fn with_charge(charge: i32) -> Self {
        AnsatzParams { charge, ..Default::default() }
    }

    /// `f(r) = pi exp(-(r / core_radius)^sharpness)`
    pub fn profile(&self, r: f64) -> f64 {
        std::f64::consts::PI * (-(r / self.core_radius).powf(self.profile_sharpness)).exp()
    }

    /// Radius at which the profile crosses `pi/2`, i.e. the radius of the
    /// core circle.
    pub fn core_circle_radius(&self) -> f64 {
        self.core_radius * std::f64::consts::LN_2.powf(1.0 / self.profile_sharpness)
    }

    pub fn validate(&self, spec: &LatticeSpec) -> Result<()> {
        if self.charge == 0 {
            return Err(invalid("ansatz charge must be nonzero; use ansatz::vacuum for Q = 0"));
        }
        if !(self.core_radius > 0.0 && self.core_radius.is_finite()) {
            return Err(invalid(format!("core_radius must be positive, got {}", self.core_radius)));
        }
        if !(self.profile_sharpness > 0.0 && self.profile_sharpness.is_finite()) {
            return Err(invalid(format!("profile_sharpness must be positive, got {}", self.profile_sharpness)));
        }
        if self.core_radius > spec.edge() / 4.0 {
            return Err(invalid(format!(
                "core_radius {} too large for box edge {} (limit edge/4)",
                self.core_radius,
                spec.edge()
            )));
        }
        Ok(())
    }
}

/// The Hopf-charged director at a point in space.
pub fn hopfion_value(params: &AnsatzParams, x: Vec3) -> Vec3 {
    let r = vec3::norm(x);
    if r == 0.0 {
        return DEFAULT_VACUUM;
    }
    let f = params.profile(r);
    let (s, c) = f.sin_cos();
    // Z1 with its phase wound Q times
    let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
    // the profile stays in [0, pi], so sin f >= 0
    let mod_z1 = rho / r * s;
    let arg_z1 = x[1].atan2(x[0]);
    let (z1_im, z1_re) = (params.charge as f64 * arg_z1).sin_cos();
    let z1 = (mod_z1 * z1_re, mod_z1 * z1_im);
    let z2 = (c, -x[2] / r * s);
    // w = Z1 * conj(Z2)
    let w = (z1.0 * z2.0 + z1.1 * z2.1, z1.1 * z2.0 - z1.0 * z2.1);
    let z1_sq = mod_z1 * mod_z1;
    let z2_sq = z2.0 * z2.0 + z2.1 * z2.1;
    vec3::normalize([2.0 * w.0, 2.0 * w.1, z2_sq - z1_sq])
}

/// Builds a Hopf-charged director centred on the spatial origin with zero
/// supercurrent.
pub fn hopfion_ansatz(spec: &LatticeSpec, params: &AnsatzParams) -> Result<(DirectorField, OneFormField)> {
    params.validate(spec)?;
    if params.charge.abs() > 3 {
        warn!("ansatz charge {} outside the tested range 1..=3", params.charge);
    }
    let values: Vec<Vec3> = (0..spec.num_sites()).into_par_iter().map(|idx| hopfion_value(params, spec.position(idx))).collect();
    let phi = DirectorField::from_values(*spec, values, DEFAULT_VACUUM)?;
    Ok((phi, OneFormField::zeros(*spec)))
}

/// The vacuum configuration.
pub fn vacuum(spec: &LatticeSpec) -> (DirectorField, OneFormField) {
    (
        DirectorField::uniform(*spec, DEFAULT_VACUUM).expect("default vacuum is a unit vector"),
        OneFormField::zeros(*spec),
    )
}
