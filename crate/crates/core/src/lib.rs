//! Lattice relaxation of knot solitons in a family of sigma models that
//! interpolates between the Faddeev-Skyrme model (`alpha = 0`) and the
//! sigma-model limit of two-component Ginzburg-Landau theory (`alpha = 1`).
//!
//! The pipeline is: build a Hopf-charged initial configuration ([`ansatz`]),
//! relax it with limited-memory BFGS ([`optimizer`]), then sweep the coupling
//! `alpha` upwards warm-starting each minimisation from the previous one
//! ([`continuation`]), measuring topology and virial data along the way
//! ([`diagnostics`]).

pub mod ansatz;
pub mod checkpoint;
pub mod continuation;
pub mod diagnostics;
pub mod energy;
mod error;
pub mod lattice;
pub mod optimizer;
pub mod vec3;

pub use error::{Error, Result};
