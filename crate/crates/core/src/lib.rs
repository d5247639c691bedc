//! Inertialess sedimentation of N identical spheres in Stokes flow.
//!
//! The crate is split along the workflow: particle clouds and their
//! concentration diagnostics, closed-form single-sphere Stokes solutions,
//! the method-of-reflections mobility solver, particle dynamics with
//! configuration certificates, a blob solver for the mean-field
//! transport-Stokes system, and exact Wasserstein distances.
//!
//! Pairwise loops run on rayon when the `parallel` feature is enabled (the
//! default). Every parallel loop maps over a target index and reduces in a
//! fixed order, so results do not depend on the thread count.

pub mod cloud;
pub mod dynamics;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod meanfield;
pub mod ot;
pub mod par;
pub mod reflections;

pub use error::{Error, Result};
pub use linalg::{Mat3, TraceFree, Vec3};
