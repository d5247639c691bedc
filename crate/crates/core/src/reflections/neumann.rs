use serde::{Deserialize, Serialize};

use crate::cloud::ParticleCloud;
use crate::error::{domain, Error, Result};

use super::interaction::{interaction_unchecked, BodyKinematics, GravitySettings, StageVector};

/// How the far-field gradient target `G^∞` is fixed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StressletClosure {
    /// `G^∞ = 0`: the stresslet-order correction is dropped.
    #[default]
    Dropped,
    /// Antisymmetric part of `G^∞` is zero (torque-free); the symmetric part
    /// is solved so that the stage-0 gradients are pure rotations.
    Rigid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannOptions {
    /// Cap on reflection stages and on closure iterations.
    pub p_max: usize,
    /// Relative stopping threshold on `η^(p) / η^(0)` and on the closure residual.
    pub tol: f64,
    pub closure: StressletClosure,
    /// Run the reflection series from the stage-0 data to measure `K̂`.
    pub track_series: bool,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        NeumannOptions {
            p_max: 20,
            tol: 1e-14,
            closure: StressletClosure::Dropped,
            track_series: true,
        }
    }
}

/// Iterates and contraction diagnostics of one reflection solve.
#[derive(Clone, Debug, Serialize)]
pub struct ReflectionState {
    /// Far-field target `X^∞ = (V^∞, G^∞)`.
    pub far_field: StageVector,
    /// Stage-0 data `X^(0) = (I − T) X^∞`.
    pub stage0: StageVector,
    /// Latest reflection `X^(p) = T^p X^(0)`.
    pub current: StageVector,
    /// `Σ_{q ≤ p} X^(q)`, which tends to `X^∞`.
    pub partial_sum: StageVector,
    pub stage: usize,
    /// `η^(0..=p)`.
    pub eta: Vec<f64>,
    /// `K̂ = max_k η^(k+1) / η^(k)`.
    pub contraction: f64,
    /// `R max_i |sym G_i^(0)|` per closure iteration.
    pub closure_residuals: Vec<f64>,
}

impl ReflectionState {
    /// `η`-norm of `Σ_{q≤p} X^(q) − X^∞`.
    pub fn reconstruction_error(&self, radius: f64) -> f64 {
        self.partial_sum.sub(&self.far_field).eta(radius)
    }
}

fn rigidity_residual(stage0: &StageVector, radius: f64) -> f64 {
    radius
        * stage0
            .g
            .iter()
            .map(|g| g.symmetric_part().norm())
            .fold(0.0, f64::max)
}

fn stage_zero(cloud: &ParticleCloud, far: &StageVector) -> StageVector {
    far.sub(&interaction_unchecked(cloud, far))
}

/// Velocities from the target `(V^∞, G^∞) = (κg, ·)` via `X^(0) = (I − T) X^∞`.
///
/// With [`StressletClosure::Rigid`] the symmetric part of `G^∞` is updated by
/// `S ← S − sym G^(0)` until the stage-0 gradients are antisymmetric. The
/// reflection series from `X^(0)` then records `η^(p)` and `K̂`.
pub fn neumann_velocity_solve(
    cloud: &ParticleCloud,
    gravity: &GravitySettings,
    opts: &NeumannOptions,
) -> Result<(BodyKinematics, ReflectionState)> {
    if opts.p_max < 1 {
        return Err(domain("p_max must be at least 1"));
    }
    cloud.check_non_overlap()?;
    let n = cloud.len();
    let radius = cloud.radius();
    let mut far = StageVector::uniform_velocity(n, gravity.settling_velocity);
    let mut stage0 = stage_zero(cloud, &far);
    let mut closure_residuals = Vec::new();
    if opts.closure == StressletClosure::Rigid {
        let scale = stage0.eta(radius).max(f64::MIN_POSITIVE);
        for _ in 0..opts.p_max {
            let res = rigidity_residual(&stage0, radius);
            closure_residuals.push(res);
            if res <= opts.tol * scale {
                break;
            }
            for (f, g0) in far.g.iter_mut().zip(&stage0.g) {
                *f = f.sub(&g0.symmetric_part());
            }
            stage0 = stage_zero(cloud, &far);
        }
        closure_residuals.push(rigidity_residual(&stage0, radius));
    }
    let kin = stage0.kinematics();
    let eta0 = stage0.eta(radius);
    let mut state = ReflectionState {
        far_field: far,
        current: stage0.clone(),
        partial_sum: stage0.clone(),
        stage0,
        stage: 0,
        eta: vec![eta0],
        contraction: 0.0,
        closure_residuals,
    };
    if opts.track_series {
        run_series(cloud, &mut state, opts.p_max, opts.tol)?;
    }
    Ok((kin, state))
}

/// Advances `X^(p+1) = T X^(p)` up to `p_max`, tracking `η` and `K̂`.
///
/// Three consecutive stage ratios at or above one abort with the partial state.
pub fn run_series(cloud: &ParticleCloud, state: &mut ReflectionState, p_max: usize, tol: f64) -> Result<()> {
    let radius = cloud.radius();
    let eta0 = state.eta[0];
    if eta0 == 0.0 {
        return Ok(());
    }
    let mut growing = 0;
    while state.stage < p_max {
        let next = interaction_unchecked(cloud, &state.current);
        let eta = next.eta(radius);
        let prev = *state.eta.last().expect("eta history is never empty");
        let ratio = if prev > 0.0 { eta / prev } else { 0.0 };
        state.partial_sum = state.partial_sum.add(&next);
        state.current = next;
        state.stage += 1;
        state.eta.push(eta);
        state.contraction = state.contraction.max(ratio);
        growing = if ratio >= 1.0 { growing + 1 } else { 0 };
        if growing >= 3 {
            return Err(Error::IterationDivergence(Box::new(state.clone())));
        }
        if eta <= tol * eta0 {
            break;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vec3;
    use crate::reflections::first_order_velocities;

    fn lattice(m: usize, h: f64, r0: f64) -> ParticleCloud {
        let mut p = Vec::new();
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    p.push(Vec3::new(i as f64, j as f64, k as f64) * h);
                }
            }
        }
        ParticleCloud::new(p, r0, 0.0).unwrap()
    }

    #[test]
    fn single_particle_falls_at_stokes_speed() {
        let c = ParticleCloud::new(vec![Vec3::new(0.2, 0.3, 0.4)], 0.5, 0.0).unwrap();
        let g = GravitySettings::new(Vec3::new(0.1, 0.0, -1.0));
        for closure in [StressletClosure::Dropped, StressletClosure::Rigid] {
            let opts = NeumannOptions { closure, ..Default::default() };
            let (kin, st) = neumann_velocity_solve(&c, &g, &opts).unwrap();
            assert_eq!(kin.velocities[0], g.settling_velocity);
            assert_eq!(kin.angular[0], Vec3::zeros());
            assert_eq!(st.contraction, 0.0);
        }
    }

    #[test]
    fn wide_pair_matches_first_order() {
        let r0 = 2e-3;
        let radius = r0 / 2.0;
        let c = ParticleCloud::new(vec![Vec3::zeros(), Vec3::new(0.3, 0.4, 1e3 * radius)], r0, 0.0).unwrap();
        let c = c.with_positions(vec![Vec3::zeros(), Vec3::new(0.0, 0.0, 1e3 * radius)], 0.0).unwrap();
        let g = GravitySettings::downward();
        let (kin, _) = neumann_velocity_solve(&c, &g, &NeumannOptions::default()).unwrap();
        let fo = first_order_velocities(&c, &g).unwrap();
        for i in 0..2 {
            let rel = (kin.velocities[i] - fo.velocities[i]).norm() / fo.velocities[i].norm();
            assert!(rel < 1e-4);
        }
    }

    #[test]
    fn lattice_contracts() {
        let c = lattice(5, 0.25, 0.01);
        let (_, st) = neumann_velocity_solve(&c, &GravitySettings::downward(), &NeumannOptions::default()).unwrap();
        assert!(st.contraction < 0.5);
        for w in st.eta.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(st.reconstruction_error(c.radius()) < 1e-12);
    }

    #[test]
    fn gradients_stay_trace_free() {
        let c = lattice(3, 0.2, 0.05);
        let (_, st) = neumann_velocity_solve(&c, &GravitySettings::downward(), &NeumannOptions::default()).unwrap();
        for g in st.current.g.iter().chain(&st.stage0.g) {
            assert!(g.to_matrix().trace().abs() < 1e-10);
        }
    }

    #[test]
    fn rigid_closure_removes_stage_zero_strain() {
        let c = lattice(3, 0.2, 0.05);
        let opts = NeumannOptions { closure: StressletClosure::Rigid, ..Default::default() };
        let (_, st) = neumann_velocity_solve(&c, &GravitySettings::downward(), &opts).unwrap();
        assert!(*st.closure_residuals.last().unwrap() < 1e-13);
        assert!(st.closure_residuals[0] > 1e-6);
    }

    #[test]
    fn crowded_cloud_diverges() {
        let c = lattice(4, 0.1, 2.5);
        let opts = NeumannOptions { p_max: 40, ..Default::default() };
        match neumann_velocity_solve(&c, &GravitySettings::downward(), &opts) {
            Err(Error::IterationDivergence(st)) => assert!(st.contraction >= 1.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn linear_in_gravity() {
        let c = lattice(3, 0.2, 0.05);
        let g = GravitySettings::new(Vec3::new(0.25, -0.5, -1.0));
        let (a, _) = neumann_velocity_solve(&c, &g, &NeumannOptions::default()).unwrap();
        let (b, _) = neumann_velocity_solve(&c, &g.scaled(2.0), &NeumannOptions::default()).unwrap();
        for (x, y) in a.velocities.iter().zip(&b.velocities) {
            assert_eq!(x * 2.0, *y);
        }
    }
}
