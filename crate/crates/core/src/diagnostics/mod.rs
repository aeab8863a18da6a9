//! Topological and virial measurements on relaxed configurations.

mod core_curve;
mod hopf;

pub use core_curve::{core_curve, CoreCurve};
pub use hopf::{hopf_charge, hopf_potential, HopfPotential, BOUNDARY_TOL};

use crate::energy::EnergyBreakdown;
use crate::error::{invalid, Error, Result};
use crate::lattice::{self, DirectorField, OneFormField};

/// Energy of the configuration dilated by `lambda`, computed from the stored
/// terms: quadratic terms scale as `1/lambda`, the rest as `lambda`.
pub fn derrick_profile(terms: &EnergyBreakdown, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(invalid(format!("dilation factor must be positive, got {lambda}")));
    }
    if lambda == 1.0 {
        return Ok(terms.total);
    }
    Ok(terms.dirichlet / lambda
        + lambda * terms.pullback
        + lambda * terms.cross
        + lambda * terms.dc_sq
        + terms.c_sq / lambda)
}

/// `dE(lambda)/dlambda` at `lambda = 1`.
pub fn derrick_virial(terms: &EnergyBreakdown) -> f64 {
    -terms.dirichlet + terms.pullback + terms.cross + terms.dc_sq - terms.c_sq
}

/// The virial normalised by the total energy. Non-negative for a minimiser
/// in a finite box, zero for one in all of space.
pub fn derrick_ratio(terms: &EnergyBreakdown) -> Result<f64> {
    if !(terms.total > 0.0) {
        return Err(Error::UndefinedRatio { total: terms.total });
    }
    Ok(derrick_virial(terms) / terms.total)
}

/// `|dC + phi^* w / 2|^2`; when it vanishes the `alpha = 1` energy can be
/// shrunk to zero.
pub fn instability_norm(phi: &DirectorField, c: &OneFormField) -> Result<f64> {
    let f = lattice::pullback_two_form(phi);
    let k = lattice::exterior_derivative(c);
    let sum = k.axpy(0.5, &f)?;
    Ok(lattice::l2_norm_sq(&sum))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms(d: f64, p: f64, x: f64, k: f64, c: f64) -> EnergyBreakdown {
        EnergyBreakdown::from_terms(d, p, x, k, c, 0.5)
    }

    #[test]
    fn profile_reproduces_hand_arithmetic() {
        let t = terms(8.0, 8.0, 0.0, 2.0, 2.0);
        assert_eq!(derrick_profile(&t, 2.0).unwrap(), 25.0);
        assert_eq!(derrick_profile(&t, 1.0).unwrap(), t.total);
        assert!(derrick_profile(&t, 0.0).is_err());
        assert!(derrick_profile(&t, -1.0).is_err());
        let vac = EnergyBreakdown::zero(0.3);
        for l in [0.1, 1.0, 7.0] {
            assert_eq!(derrick_profile(&vac, l).unwrap(), 0.0);
        }
    }

    #[test]
    fn ratio_arithmetic_and_vacuum_error() {
        assert_eq!(derrick_ratio(&terms(8.0, 8.0, 0.0, 2.0, 2.0)).unwrap(), 0.0);
        assert!(matches!(derrick_ratio(&EnergyBreakdown::zero(0.0)), Err(Error::UndefinedRatio { .. })));
    }

    #[test]
    fn virial_matches_numerical_derivative_of_profile() {
        let t = terms(3.1, 1.7, -0.4, 0.9, 1.3);
        let s = 1e-4;
        let fd = (derrick_profile(&t, 1.0 + s).unwrap() - derrick_profile(&t, 1.0 - s).unwrap()) / (2.0 * s);
        assert!((fd - derrick_virial(&t)).abs() < 1e-7);
    }
}
