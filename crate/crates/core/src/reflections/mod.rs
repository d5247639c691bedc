//! Method of reflections for the many-sphere mobility problem.
//!
//! A stage carries per-particle velocity samples `V_i` and trace-free
//! gradient samples `G_i`. The interaction map `T` re-evaluates the flows
//! generated by all other spheres at each center; the Neumann series
//! `Σ_p T^p X^(0)` reconstructs the far-field target `X^∞`, and the
//! particle velocities are read off `X^(0) = (I − T) X^∞`.

mod dense;
mod interaction;
mod neumann;

pub use dense::{
    dense_mobility_solve, dense_mobility_solve_with, dense_series_limit, interaction_matrix, DenseSolution,
    DENSE_CAP,
};
pub use interaction::{
    apply_interaction_map, first_order_velocities, pairwise_lipschitz_report, BodyKinematics, GravitySettings,
    LipschitzReport, StageVector,
};
pub use neumann::{
    neumann_velocity_solve, run_series, NeumannOptions, ReflectionState, StressletClosure,
};
