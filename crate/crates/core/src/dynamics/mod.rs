//! Time integration of `ẋ_i = V_i` with velocities from a mobility solver,
//! and runtime spacing and concentration certificates for the trajectory.

mod certificate;

use serde::{Deserialize, Serialize};

use crate::cloud::{choose_lambda, diagnostics, CloudDiagnostics, LambdaPolicy, ParticleCloud};
use crate::error::{domain, Error, Result};
use crate::linalg::Vec3;
use crate::reflections::{
    dense_mobility_solve_with, first_order_velocities, neumann_velocity_solve, BodyKinematics, GravitySettings,
    NeumannOptions, StressletClosure,
};

pub use certificate::{theorem1_certificate, CertificateOptions, Theorem1Certificate, M_RATIO_LIMIT, SPACING_RATIO_LIMIT};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverKind {
    FirstOrder,
    Reflections(NeumannOptions),
    Dense { closure: StressletClosure },
}

impl Default for SolverKind {
    fn default() -> Self {
        SolverKind::FirstOrder
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Euler,
    Heun,
    #[default]
    Rk4,
}

/// Particle velocities for the current positions.
pub fn solve_velocities(cloud: &ParticleCloud, gravity: &GravitySettings, solver: &SolverKind) -> Result<BodyKinematics> {
    match solver {
        SolverKind::FirstOrder => first_order_velocities(cloud, gravity),
        SolverKind::Reflections(opts) => Ok(neumann_velocity_solve(cloud, gravity, opts)?.0),
        SolverKind::Dense { closure } => Ok(dense_mobility_solve_with(cloud, gravity, *closure)?.kinematics),
    }
}

fn shifted(base: &[Vec3], k: &[Vec3], h: f64) -> Vec<Vec3> {
    base.iter().zip(k).map(|(x, v)| x + v * h).collect()
}

fn stage(
    cloud: &ParticleCloud,
    gravity: &GravitySettings,
    solver: &SolverKind,
    positions: Vec<Vec3>,
    time: f64,
) -> Result<Vec<Vec3>> {
    let c = cloud.with_positions(positions, time)?;
    Ok(solve_velocities(&c, gravity, solver)?.velocities)
}

/// Completes one explicit step from the velocities `k1` at the start.
fn advance(
    cloud: &ParticleCloud,
    gravity: &GravitySettings,
    solver: &SolverKind,
    scheme: Scheme,
    dt: f64,
    k1: &[Vec3],
    time: f64,
) -> Result<ParticleCloud> {
    let x = cloud.positions();
    let t0 = cloud.time();
    let next = match scheme {
        Scheme::Euler => shifted(x, k1, dt),
        Scheme::Heun => {
            let k2 = stage(cloud, gravity, solver, shifted(x, k1, dt), t0 + dt)?;
            x.iter()
                .zip(k1.iter().zip(&k2))
                .map(|(x, (a, b))| x + (a + b) * (0.5 * dt))
                .collect()
        }
        Scheme::Rk4 => {
            let h = 0.5 * dt;
            let k2 = stage(cloud, gravity, solver, shifted(x, k1, h), t0 + h)?;
            let k3 = stage(cloud, gravity, solver, shifted(x, &k2, h), t0 + h)?;
            let k4 = stage(cloud, gravity, solver, shifted(x, &k3, dt), t0 + dt)?;
            (0..x.len())
                .map(|i| x[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0))
                .collect()
        }
    };
    let out = cloud.with_positions(next, time)?;
    out.check_non_overlap()?;
    Ok(out)
}

/// One step of the configured scheme; velocities are re-solved at every stage.
pub fn step(
    cloud: &ParticleCloud,
    gravity: &GravitySettings,
    solver: &SolverKind,
    scheme: Scheme,
    dt: f64,
) -> Result<ParticleCloud> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(domain("dt must be positive"));
    }
    let k1 = solve_velocities(cloud, gravity, solver)?.velocities;
    advance(cloud, gravity, solver, scheme, dt, &k1, cloud.time() + dt)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub solver: SolverKind,
    pub scheme: Scheme,
    pub dt: f64,
    pub horizon: f64,
    /// Record every `stride`-th step; the final state is always recorded.
    pub stride: usize,
    pub lambda_policy: LambdaPolicy,
    /// Use the exact box sweep for `M` in snapshot diagnostics.
    pub exact_m: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            solver: SolverKind::FirstOrder,
            scheme: Scheme::Rk4,
            dt: 1e-2,
            horizon: 1.0,
            stride: 1,
            lambda_policy: LambdaPolicy::default(),
            exact_m: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Snapshot {
    pub time: f64,
    pub cloud: ParticleCloud,
    pub kinematics: BodyKinematics,
    pub diagnostics: CloudDiagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Overlap { time: f64, i: usize, j: usize, distance: f64, contact: f64 },
    Divergence { time: f64, stage: usize, contraction: f64 },
    Failed { time: f64, message: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub scheme: Scheme,
    pub solver: SolverKind,
    /// Step actually taken, `horizon / steps`.
    pub dt: f64,
    pub steps_taken: usize,
    /// Box half-width used for every snapshot's diagnostics.
    pub lambda: f64,
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectories always hold the initial snapshot")
    }
}

fn termination_for(err: Error, time: f64) -> Termination {
    match err {
        Error::Overlap { i, j, distance, contact } => Termination::Overlap { time, i, j, distance, contact },
        Error::IterationDivergence(st) => Termination::Divergence {
            time,
            stage: st.stage,
            contraction: st.contraction,
        },
        other => Termination::Failed {
            time,
            message: other.to_string(),
        },
    }
}

fn lambda_for(cloud: &ParticleCloud, policy: LambdaPolicy) -> Result<f64> {
    if cloud.len() >= 2 {
        return Ok(choose_lambda(cloud, policy)?.lambda);
    }
    match policy {
        LambdaPolicy::Fixed(v) if v > 0.0 => Ok(v),
        LambdaPolicy::Fixed(_) => Err(domain("fixed lambda must be positive")),
        _ => Ok(1.0),
    }
}

/// Integrates on `[t0, t0 + horizon]`. Overlap and solver divergence end the
/// run early; the snapshots up to that point are kept.
pub fn simulate(initial: &ParticleCloud, gravity: &GravitySettings, config: &SimulationConfig) -> Result<Trajectory> {
    if !(config.dt > 0.0 && config.dt.is_finite()) {
        return Err(domain("dt must be positive"));
    }
    if !(config.horizon >= 0.0 && config.horizon.is_finite()) {
        return Err(domain("horizon must be non-negative"));
    }
    if config.stride == 0 {
        return Err(domain("snapshot stride must be at least 1"));
    }
    initial.check_non_overlap()?;
    let steps = (config.horizon / config.dt - 1e-9).ceil().max(0.0) as usize;
    let dt = if steps > 0 { config.horizon / steps as f64 } else { config.dt };
    let lambda = lambda_for(initial, config.lambda_policy)?;
    let t0 = initial.time();
    let record = |cloud: &ParticleCloud, kin: BodyKinematics| -> Result<Snapshot> {
        Ok(Snapshot {
            time: cloud.time(),
            cloud: cloud.clone(),
            kinematics: kin,
            diagnostics: diagnostics(cloud, lambda, config.exact_m)?,
        })
    };
    let mut traj = Trajectory {
        scheme: config.scheme,
        solver: config.solver,
        dt,
        steps_taken: 0,
        lambda,
        snapshots: Vec::new(),
        termination: Termination::Completed,
    };
    let mut cloud = initial.clone();
    for s in 0..=steps {
        let kin = match solve_velocities(&cloud, gravity, &config.solver) {
            Ok(k) => k,
            Err(e) => {
                traj.termination = termination_for(e, cloud.time());
                return Ok(traj);
            }
        };
        let k1 = kin.velocities.clone();
        if s % config.stride == 0 || s == steps {
            traj.snapshots.push(record(&cloud, kin)?);
        }
        if s == steps {
            break;
        }
        let t_next = t0 + (s + 1) as f64 * dt;
        match advance(&cloud, gravity, &config.solver, config.scheme, dt, &k1, t_next) {
            Ok(c) => cloud = c,
            Err(e) => {
                traj.termination = termination_for(e, cloud.time());
                return Ok(traj);
            }
        }
        traj.steps_taken += 1;
    }
    Ok(traj)
}
