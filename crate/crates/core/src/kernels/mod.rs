//! Closed-form single-sphere Stokes solutions and the kernels built from them.

mod cutoff;
mod oseen;
pub mod selftest;
mod sphere;
mod traction;

use serde::Serialize;

use crate::linalg::{Mat3, Vec3};

pub use cutoff::{
    bump_cutoff, bump_cutoff_derivative, bump_field_eval, smootherstep, smoothstep,
    truncated_oseen_eval, BumpFieldSpec, TruncationProfile,
};
pub use oseen::{oseen, oseen_apply, oseen_eval, regularized_oseen_apply, OseenSample};
pub use sphere::{
    combined_eval, combined_exterior, rotlet_eval, rotlet_exterior, stokeslet_eval,
    stokeslet_exterior, stokeslet_pressure, strainlet_eval, strainlet_exterior,
};
pub use traction::{
    exact_tractions, gauss_legendre, traction_integrals, SphereSolution, TractionSummary,
    DEFAULT_ORDER, MIN_ORDER,
};

/// Velocity, velocity gradient and pressure at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelSample {
    pub velocity: Vec3,
    pub gradient: Mat3,
    pub pressure: f64,
    /// Set when the point lies inside the sphere, where the rigid motion applies.
    pub inside: bool,
}

impl KernelSample {
    fn inside(velocity: Vec3, gradient: Mat3) -> Self {
        KernelSample {
            velocity,
            gradient,
            pressure: 0.0,
            inside: true,
        }
    }

    fn outside(velocity: Vec3, gradient: Mat3, pressure: f64) -> Self {
        KernelSample {
            velocity,
            gradient,
            pressure,
            inside: false,
        }
    }
}
