//! Blob solver for the mean-field transport-Stokes system.
//!
//! The density is carried by blobs with fixed weights. Blob centers move
//! along `ẏ = κg + u(y)` where `u` is the Stokes field forced by the density,
//! evaluated with a regularized Oseen kernel of core size `δ`.

mod convergence;
mod diagnostics;
mod stability;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels::regularized_oseen_apply;
use crate::linalg::{compensated_sum, Vec3};
use crate::ot::DiscreteMeasure;
use crate::par;
use crate::reflections::GravitySettings;

pub use convergence::{self_convergence, ConvergenceStudy};
pub use diagnostics::{
    density_diagnostics, kde_eval, x_beta_norm, x_beta_norm_density, x_beta_norm_fn, DensityDiagnostics, SampleBox,
    SampleGrid, XBetaNorm,
};
pub use stability::{linear_fit, stability_compare, StabilityOptions, StabilityReport};

/// Blobs lighter than this are dropped at initialization.
pub const WEIGHT_FLOOR: f64 = 1e-14;
/// Largest tolerated `|Σw − 1|` at initialization.
pub const MASS_DEFECT_LIMIT: f64 = 1e-3;
/// Half-width of the Gaussian quadrature box in units of `σ`.
pub const GAUSSIAN_BOX_SIGMAS: f64 = 6.0;

/// `∫ (1 − |x|²)² dx` over the unit ball.
const BUMP_VOLUME: f64 = 32.0 * PI / 105.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Rho0Spec {
    Gaussian { center: Vec3, sigma: f64 },
    /// `(1 − |x−c|²/a²)²` on the ball of radius `a`, normalized.
    Bump { center: Vec3, radius: f64 },
}

impl Rho0Spec {
    pub fn validate(&self) -> Result<()> {
        let (c, s) = match self {
            Rho0Spec::Gaussian { center, sigma } => (center, *sigma),
            Rho0Spec::Bump { center, radius } => (center, *radius),
        };
        if !(s > 0.0) || !s.is_finite() || !c.iter().all(|x| x.is_finite()) {
            return Err(domain("density spec needs a finite center and a positive width"));
        }
        Ok(())
    }

    pub fn center(&self) -> Vec3 {
        match self {
            Rho0Spec::Gaussian { center, .. } | Rho0Spec::Bump { center, .. } => *center,
        }
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        match *self {
            Rho0Spec::Gaussian { center, sigma } => {
                let r2 = (x - center).norm_squared();
                (-r2 / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma).powf(1.5)
            }
            Rho0Spec::Bump { center, radius } => {
                let s2 = (x - center).norm_squared() / (radius * radius);
                if s2 >= 1.0 {
                    0.0
                } else {
                    (1.0 - s2).powi(2) / (BUMP_VOLUME * radius.powi(3))
                }
            }
        }
    }

    /// Value at the center, which is the maximum for both families.
    pub fn sup(&self) -> f64 {
        self.eval(&self.center())
    }

    /// Half-width of the cube used for quadrature.
    pub fn box_half_width(&self) -> f64 {
        match *self {
            Rho0Spec::Gaussian { sigma, .. } => GAUSSIAN_BOX_SIGMAS * sigma,
            Rho0Spec::Bump { radius, .. } => radius,
        }
    }

    /// Same family translated by `shift`.
    pub fn translated(&self, shift: Vec3) -> Self {
        match *self {
            Rho0Spec::Gaussian { center, sigma } => Rho0Spec::Gaussian {
                center: center + shift,
                sigma,
            },
            Rho0Spec::Bump { center, radius } => Rho0Spec::Bump {
                center: center + shift,
                radius,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlobDensity {
    centers: Vec<Vec3>,
    weights: Vec<f64>,
    delta: f64,
    spec: Option<Rho0Spec>,
    time: f64,
    mass_defect: f64,
}

impl BlobDensity {
    pub fn new(centers: Vec<Vec3>, weights: Vec<f64>, delta: f64, time: f64) -> Result<Self> {
        if centers.is_empty() || centers.len() != weights.len() {
            return Err(domain("blob centers and weights must be non-empty and of equal length"));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(domain("blob radius must be positive"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(domain("blob weights must be non-negative"));
        }
        if centers.iter().any(|c| !c.iter().all(|x| x.is_finite())) {
            return Err(domain("blob centers must be finite"));
        }
        let mass = compensated_sum(weights.iter().copied());
        Ok(BlobDensity {
            centers,
            weights,
            delta,
            spec: None,
            time,
            mass_defect: (mass - 1.0).abs(),
        })
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn spec(&self) -> Option<&Rho0Spec> {
        self.spec.as_ref()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// `|Σw − 1|` at construction.
    pub fn mass_defect(&self) -> f64 {
        self.mass_defect
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn mass(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    pub fn centroid(&self) -> Vec3 {
        let m = self.mass();
        let mut acc = [0.0; 3];
        for k in 0..3 {
            acc[k] = compensated_sum(self.centers.iter().zip(&self.weights).map(|(c, w)| c[k] * w)) / m;
        }
        Vec3::new(acc[0], acc[1], acc[2])
    }

    /// Blob centers as atoms with weights rescaled to unit mass.
    pub fn to_measure(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::normalized(self.centers.clone(), self.weights.clone())
    }

    fn moved(&self, centers: Vec<Vec3>, time: f64) -> Self {
        BlobDensity {
            centers,
            time,
            ..self.clone()
        }
    }
}

/// Default core size: twice the grid spacing.
pub fn default_delta(spec: &Rho0Spec, m_per_axis: usize) -> f64 {
    2.0 * 2.0 * spec.box_half_width() / m_per_axis as f64
}

/// Midpoint quadrature of `ρ0` on an `m³` grid over the spec's box.
pub fn init_blobs(spec: &Rho0Spec, m_per_axis: usize, delta: f64) -> Result<BlobDensity> {
    spec.validate()?;
    if m_per_axis < 4 {
        return Err(domain("init_blobs needs at least 4 cells per axis"));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(domain("blob radius must be positive"));
    }
    let a = spec.box_half_width();
    let h = 2.0 * a / m_per_axis as f64;
    let c = spec.center();
    let coord = |i: usize| -a + (i as f64 + 0.5) * h;
    let mut centers = Vec::new();
    let mut weights = Vec::new();
    for i in 0..m_per_axis {
        for j in 0..m_per_axis {
            for k in 0..m_per_axis {
                let y = c + Vec3::new(coord(i), coord(j), coord(k));
                let w = spec.eval(&y) * h * h * h;
                if w >= WEIGHT_FLOOR {
                    centers.push(y);
                    weights.push(w);
                }
            }
        }
    }
    let defect = (compensated_sum(weights.iter().copied()) - 1.0).abs();
    if defect > MASS_DEFECT_LIMIT || centers.is_empty() {
        return Err(Error::Resolution { defect });
    }
    let mut d = BlobDensity::new(centers, weights, delta, 0.0)?;
    d.spec = Some(*spec);
    Ok(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanfieldParams {
    /// Coupling `r0 = N R`; zero switches the interaction off.
    pub r0: f64,
    pub gravity: GravitySettings,
}

impl MeanfieldParams {
    pub fn new(r0: f64, gravity: GravitySettings) -> Result<Self> {
        if !(r0 >= 0.0) || !r0.is_finite() {
            return Err(domain("coupling r0 must be non-negative"));
        }
        Ok(MeanfieldParams { r0, gravity })
    }
}

fn field_at(centers: &[Vec3], weights: &[f64], delta: f64, params: &MeanfieldParams, x: &Vec3) -> Vec3 {
    if params.r0 == 0.0 {
        return Vec3::zeros();
    }
    let g = params.gravity.settling_velocity;
    let mut u = Vec3::zeros();
    for (y, w) in centers.iter().zip(weights) {
        u += regularized_oseen_apply(&(x - y), delta, &g) * *w;
    }
    u * (6.0 * PI * params.r0)
}

/// Stokes velocity induced by the density at `x`, without the settling term.
pub fn field_velocity(density: &BlobDensity, params: &MeanfieldParams, x: &Vec3) -> Vec3 {
    field_at(&density.centers, &density.weights, density.delta, params, x)
}

/// `κg + u(x)` at every point of `xs`.
pub fn transport_velocities(density: &BlobDensity, params: &MeanfieldParams, xs: &[Vec3]) -> Vec<Vec3> {
    stage_velocities(density, &density.centers, params, xs)
}

fn stage_velocities(density: &BlobDensity, centers: &[Vec3], params: &MeanfieldParams, xs: &[Vec3]) -> Vec<Vec3> {
    let g = params.gravity.settling_velocity;
    par::map_slice(xs, |x| g + field_at(centers, &density.weights, density.delta, params, x))
}

/// One RK4 step for the blob centers and any passive tracers.
pub fn advance_with_tracers(
    density: &BlobDensity,
    params: &MeanfieldParams,
    dt: f64,
    tracers: &[Vec3],
) -> Result<(BlobDensity, Vec<Vec3>)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(domain("time step must be positive"));
    }
    let n = density.len();
    let y0: Vec<Vec3> = density.centers.iter().chain(tracers).copied().collect();
    let eval = |pts: &[Vec3]| stage_velocities(density, &pts[..n], params, pts);
    let shift = |base: &[Vec3], k: &[Vec3], s: f64| -> Vec<Vec3> { base.iter().zip(k).map(|(y, v)| y + v * s).collect() };
    let k1 = eval(&y0);
    let k2 = eval(&shift(&y0, &k1, dt / 2.0));
    let k3 = eval(&shift(&y0, &k2, dt / 2.0));
    let k4 = eval(&shift(&y0, &k3, dt));
    let y1: Vec<Vec3> = (0..y0.len())
        .map(|i| y0[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0))
        .collect();
    let next = density.moved(y1[..n].to_vec(), density.time + dt);
    Ok((next, y1[n..].to_vec()))
}

pub fn advance(density: &BlobDensity, params: &MeanfieldParams, dt: f64) -> Result<BlobDensity> {
    advance_with_tracers(density, params, dt, &[]).map(|r| r.0)
}

/// Snapshots of a run to `horizon` with `ceil(horizon/dt)` equal steps,
/// keeping every `stride`-th step plus the final one.
#[derive(Clone, Debug, Serialize)]
pub struct MeanfieldRun {
    pub snapshots: Vec<BlobDensity>,
    pub tracers: Vec<Vec<Vec3>>,
    pub dt: f64,
    pub steps: usize,
}

pub fn evolve(
    initial: &BlobDensity,
    params: &MeanfieldParams,
    horizon: f64,
    dt: f64,
    stride: usize,
    tracers: &[Vec3],
) -> Result<MeanfieldRun> {
    if !(horizon >= 0.0) || !(dt > 0.0) {
        return Err(domain("horizon must be non-negative and dt positive"));
    }
    let steps = ((horizon / dt) - 1e-9).ceil().max(0.0) as usize;
    let dt_eff = if steps > 0 { horizon / steps as f64 } else { dt };
    let stride = stride.max(1);
    let mut cur = initial.clone();
    let mut tr = tracers.to_vec();
    let mut run = MeanfieldRun {
        snapshots: vec![cur.clone()],
        tracers: vec![tr.clone()],
        dt: dt_eff,
        steps,
    };
    let t0 = initial.time;
    for s in 1..=steps {
        let (next, next_tr) = advance_with_tracers(&cur, params, dt_eff, &tr)?;
        cur = next;
        cur.time = t0 + s as f64 * dt_eff;
        tr = next_tr;
        if s % stride == 0 || s == steps {
            run.snapshots.push(cur.clone());
            run.tracers.push(tr.clone());
        }
    }
    Ok(run)
}
